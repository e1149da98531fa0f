#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pspin/flows.hpp"
#include "pspin/io.hpp"
#include "pspin/regions.hpp"

namespace pspin {

// Flat key = value configuration. Unknown keys are errors; e0_<p> keys feed
// the ground-state table.
struct ExperimentConfig {
    std::string scenario = "uniform";
    int p = 3;
    std::size_t N = 400;
    double beta = 1.0;
    double horizon = 5.0;
    double step = 1e-3;
    long record_stride = 1;
    std::vector<std::uint64_t> seeds{1};
    double epsilon = 0.1;            // going-down margin and portrait epsilon
    double absorbing_epsilon = 0.15;  // Langevin absorbing-set check
    double delta = 0.0;              // 0: calibrate from epsilon
    double eta = 1.2;
    double delta0 = 0.05;
    double rho_max = 0.5;
    long gd_max_iters = 20000;
    Window window{};
    double resolution = 1e-3;
    double flow_step = 1e-3;
    double flow_horizon = 50.0;
    std::size_t portrait_starts = 100;
    std::uint64_t portrait_seed = 2024;
    std::size_t condition_window = 101;
    double k_sigma = 3.0;
    double confinement_tol = 0.1;
    double seed_share = 0.9;  // share of seeds a Monte Carlo claim needs
    std::size_t reg_samples = 20;
    std::vector<std::size_t> reg_dims{100, 200, 400};
    std::size_t sup_samples = 100;
    bool write_trajectories = true;
    E0Table e0;
    std::filesystem::path out = "pspin_out";

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    // every key with its current value, parseable by parse()
    std::string dump() const;
    void validate() const;
    FlowParams flow_params() const;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct Claim {
    std::string name;
    std::string paper_anchor;
    bool pass = false;
    double statistic = 0.0;
    double threshold = 0.0;
    std::string provenance;
    std::string detail;
};

struct SeedFailure {
    std::uint64_t seed = 0;
    std::string error;
};

struct Verdict {
    std::string scenario;
    std::vector<Claim> claims;
    std::size_t seeds_in = 0;
    std::size_t seeds_reported = 0;
    std::vector<SeedFailure> failures;

    bool all_pass() const;
    Json to_json() const;
};

// Exact-flow portrait over random window starts.
struct FlowPortrait {
    double delta = 0.0;
    std::size_t starts = 0;
    std::size_t arrow_violations = 0;
    std::size_t absorbing_violations = 0;
    std::size_t included = 0;        // flows that fix T0
    std::size_t excluded_upper = 0;  // upper flows that left W
    std::size_t missed = 0;          // included flows that never hit A_{0,delta}
    std::optional<double> T0;        // max hitting time over included flows
    Json detail;
};

FlowPortrait exact_flow_portrait(const PhaseGeometry& g, const AbsorbingSet& a, double delta,
                                 std::size_t starts, double horizon, double step,
                                 std::uint64_t seed);

// Largest u_c / E_inf on the beta grid, with E_inf = 2 sqrt((p-1)/p).
double threshold_energy(int p);
std::vector<double> figure_beta_grid();

// uc_curves.csv for p in {3, 4}, curves.csv and boundaries.csv for the
// configured p and beta.
void emit_figure_data(const ExperimentConfig& cfg);

// Runs the scenario, writes the artifact tree and verdict.json under
// cfg.out. Exit status: 0 all claims pass, 2 some claim fails.
Verdict run_scenario(const ExperimentConfig& cfg);
int exit_status(const Verdict& v);

struct SchemaCheck {
    bool ok = false;
    std::vector<std::string> errors;
};

SchemaCheck verdict_schema_validate(const std::filesystem::path& path);
SchemaCheck verdict_schema_validate(const Json& j);

}  // namespace pspin
