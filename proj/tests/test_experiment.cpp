#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pspin/errors.hpp"
#include "pspin/experiment.hpp"

using namespace pspin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pspin_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json good_verdict() {
    return Json::parse(R"({"scenario": "uniform", "claims": [
        {"name": "a", "paper_anchor": "x", "pass": true, "statistic": 1.0, "threshold": 0.9,
         "provenance": "repo-calibration"}]})");
}

}  // namespace

TEST_CASE("seed lists") {
    CHECK(parse_seed_list("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(parse_seed_list("4..6, 9") == std::vector<std::uint64_t>{4, 5, 6, 9});
    CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("5..2"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("x"), ConfigError);
}

TEST_CASE("config parse and dump round trip") {
    const ExperimentConfig c = ExperimentConfig::parse(R"(
        # comment
        scenario = near_critical
        N = 50          # trailing comment
        beta = 0.5
        seeds = 1..3
        reg_dims = 60,120
        e0_3 = 1.657
        write_trajectories = false
        window_u_max = 3
    )");
    CHECK(c.scenario == "near_critical");
    CHECK(c.N == 50u);
    CHECK(c.beta == 0.5);
    CHECK(c.seeds.size() == 3u);
    CHECK(c.reg_dims == std::vector<std::size_t>{60, 120});
    CHECK(c.e0.at(3) == doctest::Approx(1.657));
    CHECK_FALSE(c.write_trajectories);
    CHECK(c.window.u_max == 3.0);
    const ExperimentConfig d = ExperimentConfig::parse(c.dump());
    CHECK(d.dump() == c.dump());
    CHECK(d.beta == c.beta);

    CHECK_THROWS_AS(ExperimentConfig::parse("colour = red"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("N = many"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("no equals sign"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.scenario = "sideways";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.beta = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.scenario = "near_critical";
    c.delta0 = 5.0;  // p eta / beta = 3.6
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.delta0 = 3.5;
    CHECK_NOTHROW(c.validate());
    c = {};
    c.p = 2;  // no built-in E_{0,0}
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.e0[0] = 1.0;
    CHECK_NOTHROW(c.validate());
    c = {};
    c.step = 0.3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("verdict schema") {
    CHECK(verdict_schema_validate(good_verdict()).ok);

    Json j = good_verdict();
    j["claims"][0].erase("provenance");
    const SchemaCheck missing = verdict_schema_validate(j);
    CHECK_FALSE(missing.ok);
    REQUIRE(!missing.errors.empty());
    CHECK(missing.errors[0].find("claims[0].provenance") != std::string::npos);

    j = good_verdict();
    j["claims"] = Json::array();
    CHECK_FALSE(verdict_schema_validate(j).ok);

    j = good_verdict();
    j["claims"][0]["provenance"] = "vibes";
    CHECK_FALSE(verdict_schema_validate(j).ok);

    j = good_verdict();
    j["claims"][0]["pass"] = "yes";
    CHECK_FALSE(verdict_schema_validate(j).ok);

    CHECK_FALSE(verdict_schema_validate(fs::path("/nonexistent/verdict.json")).ok);
}

TEST_CASE("figure data") {
    CHECK(threshold_energy(3) == doctest::Approx(2.0 * std::sqrt(2.0 / 3.0)));
    const auto grid = figure_beta_grid();
    CHECK(grid.front() == 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

    ExperimentConfig c;
    c.out = scratch("figures");
    emit_figure_data(c);
    std::ifstream in(c.out / "uc_curves.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "p,beta,u_c,u_c_over_E0,u_c_over_Einf");
    std::getline(in, line);
    CHECK(line == "3,0,0,nan,0");  // beta = 0 row
    double sup3 = 0.0, prev = -1.0;
    bool monotone = true;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells[0] != "3") continue;
        const double r = std::stod(cells[4]);
        monotone = monotone && r > prev;
        prev = r;
        sup3 = std::max(sup3, r);
    }
    CHECK(monotone);
    CHECK(std::abs(sup3 - 1.0 / (2.0 * (std::sqrt(2.0) + 1.0))) <= 1e-3);
    CHECK(fs::exists(c.out / "curves.csv"));
    CHECK(fs::exists(c.out / "boundaries.csv"));
}

TEST_CASE("flows_only run is deterministic and passes its claims") {
    ExperimentConfig c;
    c.scenario = "flows_only";
    c.out = scratch("flows_a");
    const Verdict v = run_scenario(c);
    CHECK(v.all_pass());
    CHECK(exit_status(v) == 0);
    CHECK(v.claims.size() == 3u);
    for (const auto& cl : v.claims) {
        CAPTURE(cl.name);
        CHECK(cl.pass);
        CHECK_FALSE(cl.paper_anchor.empty());
    }
    CHECK(verdict_schema_validate(c.out / "verdict.json").ok);
    const Json fp = read_json(c.out / "fixed_points.json");
    CHECK(std::abs(fp["u_c"].get<double>() - 0.25273) <= 1e-5);
    CHECK(fp["bar_u_c"].is_null());
    CHECK(fs::exists(c.out / "flow_lower_uniform.csv"));
    CHECK(fs::exists(c.out / "flow_upper_near_critical.csv"));
    CHECK(fs::exists(c.out / "run_info.json"));

    ExperimentConfig c2 = c;
    c2.out = scratch("flows_b");
    run_scenario(c2);
    for (const char* f : {"curves.csv", "boundaries.csv", "uc_curves.csv", "flow_lower_uniform.csv",
                          "flow_upper_near_critical.csv", "verdict.json"})
        CHECK(slurp(c.out / f) == slurp(c2.out / f));
    // dumped config reloads to the same run
    const ExperimentConfig back = ExperimentConfig::load(c.out / "config.txt");
    CHECK(back.dump() == c.dump());
}

TEST_CASE("a failing seed is recorded and the run goes on") {
    ExperimentConfig c;
    c.scenario = "near_critical";
    c.N = 30;
    c.horizon = 0.05;
    c.seeds = {1, 2, 3};
    c.gd_max_iters = 1;  // the start search cannot converge
    c.out = scratch("failing");
    const Verdict v = run_scenario(c);
    CHECK(v.seeds_in == 3u);
    CHECK(v.seeds_reported == 3u);
    CHECK(v.failures.size() == 3u);
    CHECK_FALSE(v.all_pass());
    CHECK(exit_status(v) == 2);
    const Json j = read_json(c.out / "verdict.json");
    CHECK(j["failures"].size() == 3u);
}

TEST_CASE("small uniform run writes per-seed artifacts") {
    ExperimentConfig c;
    c.scenario = "uniform";
    c.N = 40;
    c.horizon = 0.5;
    c.seeds = {1, 2};
    c.portrait_starts = 10;
    c.flow_horizon = 20.0;
    c.out = scratch("uniform");
    const Verdict v = run_scenario(c);
    CHECK(v.seeds_reported == 2u);
    CHECK(v.failures.empty());
    for (const char* s : {"seed_1", "seed_2"})
        for (const char* f : {"trajectory.csv", "trajectory.json", "condition_I.json", "portrait.json"})
            CHECK(fs::exists(c.out / s / f));
    CHECK(fs::exists(c.out / "mean_path.csv"));
    std::vector<std::string> names;
    for (const auto& cl : v.claims) names.push_back(cl.name);
    CHECK(names == std::vector<std::string>{"condition_I", "going_down_quickly", "absorbing_set",
                                            "mean_path_confinement"});
    CHECK(v.claims[1].detail.find("T0 = ") != std::string::npos);
    CHECK(verdict_schema_validate(c.out / "verdict.json").ok);

    // same config, same trajectory bytes
    ExperimentConfig c2 = c;
    c2.out = scratch("uniform_b");
    c2.seeds = {2};
    run_scenario(c2);
    CHECK(slurp(c.out / "seed_2" / "trajectory.csv") == slurp(c2.out / "seed_2" / "trajectory.csv"));
}
