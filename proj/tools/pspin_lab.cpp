// Scenario runner for the spherical p-spin Langevin experiments.
//
//   pspin_lab simulate   --config run.cfg [--seed-override 1..20] [--out DIR] [--threads K]
//   pspin_lab flows      [--config ...]
//   pspin_lab portrait   [--config ...]
//   pspin_lab verify     --config run.cfg        (runs the configured scenario)
//   pspin_lab regularity [--config ...]
//   pspin_lab figures    [--config ...]
//   pspin_lab validate   VERDICT.json
//
// Exit codes: 0 all claims pass, 2 some claim fails, 1 runtime error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "pspin/errors.hpp"
#include "pspin/experiment.hpp"

using namespace pspin;

namespace {

struct Common {
    std::string config;
    std::string seeds;
    std::string out;
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed-override", c.seeds, "seed list replacing the configured one, e.g. 1,4,7..9");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")
        ->check(CLI::NonNegativeNumber);
}

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config);
    if (!c.seeds.empty()) cfg.seeds = parse_seed_list(c.seeds);
    if (!c.out.empty()) cfg.out = c.out;
    if (c.threads > 0) omp_set_num_threads(c.threads);
    return cfg;
}

void print_verdict(const Verdict& v) {
    for (const Claim& c : v.claims)
        std::printf("%-4s %-28s statistic=%s threshold=%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    format_double(c.statistic).c_str(), format_double(c.threshold).c_str());
    for (const SeedFailure& f : v.failures)
        std::printf("seed %llu failed: %s\n", static_cast<unsigned long long>(f.seed), f.error.c_str());
    std::printf("seeds %zu in, %zu reported\n", v.seeds_in, v.seeds_reported);
}

int run(ExperimentConfig cfg, const char* forced_scenario) {
    if (forced_scenario) cfg.scenario = forced_scenario;
    const Verdict v = run_scenario(cfg);
    print_verdict(v);
    std::printf("verdict written to %s\n", (cfg.out / "verdict.json").string().c_str());
    return exit_status(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spherical p-spin Langevin experiments"};
    app.require_subcommand(1);

    Common c;
    auto* simulate = app.add_subcommand("simulate", "Langevin runs: uniform, adversarial or near_critical");
    auto* flows = app.add_subcommand("flows", "bounding-flow tables, trajectories and fixed points");
    auto* portrait = app.add_subcommand("portrait", "exact-flow phase portrait and T0");
    auto* verify = app.add_subcommand("verify", "run the configured scenario and report claims");
    auto* regularity = app.add_subcommand("regularity", "Hessian and Laplacian statistics");
    auto* figures = app.add_subcommand("figures", "CSV bundle for the figures");
    for (auto* cmd : {simulate, flows, portrait, verify, regularity, figures}) add_common(cmd, c);

    std::string verdict_path;
    auto* validate = app.add_subcommand("validate", "check a verdict.json against the schema");
    validate->add_option("verdict", verdict_path, "verdict.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const SchemaCheck s = verdict_schema_validate(std::filesystem::path(verdict_path));
            for (const auto& e : s.errors) std::printf("%s\n", e.c_str());
            std::printf("%s\n", s.ok ? "valid" : "invalid");
            return s.ok ? 0 : 2;
        }
        ExperimentConfig cfg = resolve(c);
        if (*simulate) {
            if (cfg.scenario != "uniform" && cfg.scenario != "adversarial" && cfg.scenario != "near_critical")
                throw ConfigError("simulate needs scenario uniform, adversarial or near_critical");
            return run(cfg, nullptr);
        }
        if (*flows) return run(cfg, "flows_only");
        if (*portrait) return run(cfg, "portrait");
        if (*regularity) return run(cfg, "regularity");
        if (*verify) return run(cfg, nullptr);
        if (*figures) {
            cfg.validate();
            emit_figure_data(cfg);
            std::printf("figure data written to %s\n", cfg.out.string().c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
