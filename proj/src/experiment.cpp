#include "pspin/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pspin/comparison.hpp"
#include "pspin/diagnostics.hpp"
#include "pspin/dynamics.hpp"
#include "pspin/errors.hpp"
#include "pspin/rng.hpp"

namespace pspin {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw ConfigError("bad value for " + key + ": '" + text + "'");
    return v;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream out;
    for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
    return out.str();
}

std::string fmt(double x) { return format_double(x); }

// One entry per config key: how to read it and how to print it.
struct ConfigField {
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

std::map<std::string, ConfigField> fields(ExperimentConfig& c) {
    std::map<std::string, ConfigField> f;
    auto num = [&](const char* key, auto& ref) {
        using T = std::remove_reference_t<decltype(ref)>;
        f[key] = {[&ref, key](const std::string& s) { ref = parse_number<T>(key, s); },
                  [&ref] {
                      if constexpr (std::is_floating_point_v<T>)
                          return fmt(ref);
                      else
                          return std::to_string(ref);
                  }};
    };
    f["scenario"] = {[&c](const std::string& s) { c.scenario = s; }, [&c] { return c.scenario; }};
    num("p", c.p);
    num("N", c.N);
    num("beta", c.beta);
    num("horizon", c.horizon);
    num("step", c.step);
    num("record_stride", c.record_stride);
    f["seeds"] = {[&c](const std::string& s) { c.seeds = parse_seed_list(s); },
                  [&c] { return join(c.seeds); }};
    num("epsilon", c.epsilon);
    num("absorbing_epsilon", c.absorbing_epsilon);
    num("delta", c.delta);
    num("eta", c.eta);
    num("delta0", c.delta0);
    num("rho_max", c.rho_max);
    num("gd_max_iters", c.gd_max_iters);
    num("window_u_min", c.window.u_min);
    num("window_u_max", c.window.u_max);
    num("window_v_min", c.window.v_min);
    num("window_v_max", c.window.v_max);
    num("resolution", c.resolution);
    num("flow_step", c.flow_step);
    num("flow_horizon", c.flow_horizon);
    num("portrait_starts", c.portrait_starts);
    num("portrait_seed", c.portrait_seed);
    num("condition_window", c.condition_window);
    num("k_sigma", c.k_sigma);
    num("confinement_tol", c.confinement_tol);
    num("seed_share", c.seed_share);
    num("reg_samples", c.reg_samples);
    f["reg_dims"] = {[&c](const std::string& s) {
                         c.reg_dims.clear();
                         std::istringstream in(s);
                         std::string item;
                         while (std::getline(in, item, ','))
                             c.reg_dims.push_back(parse_number<std::size_t>("reg_dims", trim(item)));
                     },
                     [&c] { return join(c.reg_dims); }};
    num("sup_samples", c.sup_samples);
    f["write_trajectories"] = {[&c](const std::string& s) {
                                   if (s == "1" || s == "true") c.write_trajectories = true;
                                   else if (s == "0" || s == "false") c.write_trajectories = false;
                                   else throw ConfigError("bad value for write_trajectories: " + s);
                               },
                               [&c] { return std::string(c.write_trajectories ? "true" : "false"); }};
    f["out"] = {[&c](const std::string& s) { c.out = s; }, [&c] { return c.out.string(); }};
    return f;
}

Claim make_claim(std::string name, std::string anchor, bool pass, double stat, double thr,
                 std::string prov, std::string detail = "") {
    return {std::move(name), std::move(anchor), pass, stat, thr, std::move(prov), std::move(detail)};
}

GeometryOptions geometry_options(const ExperimentConfig& cfg) {
    GeometryOptions o;
    o.resolution = cfg.resolution;
    o.flow_step = cfg.flow_step;
    return o;
}

fs::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.out / ("seed_" + std::to_string(seed));
}

enum class StartKind { Uniform, NearCritical, Adversarial };

struct SeedRun {
    TrajectoryRecord rec;
    Json start;
};

SeedRun run_langevin(const ExperimentConfig& cfg, std::uint64_t seed, StartKind kind) {
    const Model m = sample_model(cfg.p, cfg.N, split_seed(seed, 1));
    const std::uint64_t start_seed = split_seed(seed, 2);
    SeedRun run;
    SpherePoint x0;
    if (kind == StartKind::Uniform) {
        x0 = uniform_start(cfg.N, start_seed);
        run.start = {{"kind", "uniform"}};
    } else {
        CriticalStart s = kind == StartKind::NearCritical
                              ? near_critical_start(m, cfg.eta, cfg.delta0, start_seed, cfg.gd_max_iters)
                              : adversarial_start(m, cfg.delta0, start_seed, cfg.gd_max_iters);
        x0 = s.x;
        run.start = {{"kind", kind == StartKind::NearCritical ? "near_critical" : "adversarial"},
                     {"u", s.u},
                     {"v", s.v},
                     {"iterations", s.iterations}};
    }
    LangevinConfig lc;
    lc.beta = cfg.beta;
    lc.step = cfg.step;
    lc.horizon = cfg.horizon;
    lc.record_stride = cfg.record_stride;
    lc.seed = split_seed(seed, 3);
    run.rec = simulate(m, x0, lc);
    if (cfg.write_trajectories) {
        const fs::path dir = seed_dir(cfg, seed);
        write_trajectory_csv(dir / "trajectory.csv", run.rec);
        Json meta = record_metadata(run.rec);
        meta["seed"] = seed;
        meta["start"] = run.start;
        write_json(dir / "trajectory.json", meta);
    }
    return run;
}

PlaneTrajectory plane_of(const TrajectoryRecord& rec) {
    PlaneTrajectory tr;
    tr.t = rec.t;
    tr.u = rec.u;
    tr.v = rec.v;
    tr.step = rec.size() > 1 ? rec.t[1] - rec.t[0] : rec.config.step;
    return tr;
}

double share(std::size_t good, std::size_t total) {
    return total ? static_cast<double>(good) / static_cast<double>(total) : 0.0;
}

double resolve_delta(const ExperimentConfig& cfg, const PhaseGeometry& g, const AbsorbingSet& a) {
    return cfg.delta > 0.0 ? cfg.delta : calibrate_delta(g, a);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// ---- scenarios -------------------------------------------------------------

void flows_scenario(const ExperimentConfig& cfg, Verdict& v) {
    const FlowParams fp = cfg.flow_params();
    const double uc = u_c_value(fp);
    const double ubar = bar_u_c_value(fp);
    const PlanePoint zc = z_c(fp);
    write_json(cfg.out / "fixed_points.json",
               {{"p", fp.p},
                {"beta", fp.beta},
                {"lambda_p", fp.lambda_p},
                {"u_c", uc},
                {"v_c", zc.v},
                {"bar_u_c", number(ubar)},
                {"bar_u_c_finite", std::isfinite(ubar)}});

    const PlanePoint uniform_proxy{0.0, static_cast<double>(fp.p)};
    const PlanePoint critical_proxy{1.6, 0.05};
    std::vector<std::pair<std::string, PlanePoint>> starts{{"uniform", uniform_proxy},
                                                           {"near_critical", critical_proxy}};
    for (const auto& [name, z] : starts)
        for (FlowKind k : {FlowKind::Lower, FlowKind::Upper}) {
            IntegrateOptions io;
            io.blow_up = 1e4;
            const PlaneTrajectory tr = integrate_flow(fp, k, z, cfg.flow_step, cfg.flow_horizon, io);
            write_plane_csv(cfg.out / ("flow_" + to_string(k) + "_" + name + ".csv"), tr);
        }
    emit_figure_data(cfg);

    const PlaneTrajectory low =
        integrate_flow(fp, FlowKind::Lower, uniform_proxy, cfg.flow_step, cfg.flow_horizon);
    const PlanePoint end = low.back();
    const double dist = std::hypot(end.u - zc.u, end.v - zc.v);
    v.claims.push_back(make_claim("lower_flow_converges", "lower bounding flow attracted to z_c",
                                  dist <= 1e-6, dist, 1e-6, kTheoryScale,
                                  "distance to z_c at the flow horizon"));
    if (!std::isfinite(ubar)) {
        // u grows about linearly while the v-equation stiffens like 2 p beta u;
        // the step keeps RK4 stable out to u ~ 1e3
        const double h = std::min(cfg.flow_step, 2.5e-4);
        const PlaneTrajectory up = integrate_flow(fp, FlowKind::Upper, uniform_proxy, h, 300.0);
        double umax = 0.0;
        for (double u : up.u) umax = std::max(umax, u);
        v.claims.push_back(make_claim("upper_flow_escapes", "upper bounding flow has no finite attractor",
                                      umax > 1e3, umax, 1e3, kTheoryScale,
                                      "largest u on the upper flow by t = 300"));
    }
    double sup_ratio = 0.0;
    for (double b : figure_beta_grid())
        sup_ratio = std::max(sup_ratio, u_c_value(FlowParams::with_lambda(3, std::max(b, 1e-300),
                                                                          lambda_p_default(3))) /
                                            threshold_energy(3));
    const double target = 1.0 / (2.0 * (std::sqrt(2.0) + 1.0));
    v.claims.push_back(make_claim("threshold_ratio", "fraction of the threshold energy reached",
                                  std::abs(sup_ratio - target) <= 1e-3, sup_ratio, target,
                                  kTheoryScale, "sup over the beta grid of u_c / E_inf for p = 3"));
}

void portrait_scenario(const ExperimentConfig& cfg, Verdict& v) {
    const FlowParams fp = cfg.flow_params();
    const PhaseGeometry g = PhaseGeometry::build(fp, cfg.window, geometry_options(cfg));
    const AbsorbingSet a = g.absorbing(cfg.epsilon);
    const double delta = resolve_delta(cfg, g, a);
    write_boundaries_csv(cfg.out / "boundaries.csv", g, a);
    const FlowPortrait fpr = exact_flow_portrait(g, a, delta, cfg.portrait_starts, cfg.flow_horizon,
                                                 cfg.flow_step, cfg.portrait_seed);
    write_json(cfg.out / "flow_portrait.json", fpr.detail);
    v.claims.push_back(make_claim("portrait_arrows", "phase portrait arrows for the exact flows",
                                  fpr.arrow_violations == 0 && fpr.absorbing_violations == 0,
                                  static_cast<double>(fpr.arrow_violations + fpr.absorbing_violations),
                                  0.0, kDerivedOracle, "violations over all exact-flow starts"));
    v.claims.push_back(make_claim("portrait_uniform_T0", "uniform hitting time of A_{0,delta}",
                                  fpr.T0.has_value() && delta > 0.0, fpr.T0.value_or(kNaN),
                                  cfg.flow_horizon, kDerivedOracle,
                                  "max hitting time over lower flows and upper flows that stay in W"));
}

struct LangevinSummary {
    std::vector<TrajectoryRecord> records;
    std::size_t condi_ok_windows = 0, condi_windows = 0;
    double condi_min = 1.0;
    std::size_t down_ok = 0, absorbing_ok = 0;
};

void langevin_scenario(const ExperimentConfig& cfg, Verdict& v, StartKind kind) {
    const FlowParams fp = cfg.flow_params();
    const PhaseGeometry g = PhaseGeometry::build(fp, cfg.window, geometry_options(cfg));
    const AbsorbingSet a_down = g.absorbing(cfg.epsilon);
    const double delta = resolve_delta(cfg, g, a_down);
    const FlowPortrait fpr = exact_flow_portrait(g, a_down, delta, cfg.portrait_starts,
                                                 cfg.flow_horizon, cfg.flow_step, cfg.portrait_seed);
    write_json(cfg.out / "flow_portrait.json", fpr.detail);
    const AbsorbingSet a_abs = g.absorbing(cfg.absorbing_epsilon);
    const double delta_abs = calibrate_delta(g, a_abs);
    const double uc = g.u_c();
    const double T0 = fpr.T0.value_or(std::numeric_limits<double>::infinity());

    LangevinSummary s;
    Json per_seed = Json::array();
    for (std::uint64_t seed : cfg.seeds) {
        try {
            SeedRun run = run_langevin(cfg, seed, kind);
            const TrajectoryRecord& rec = run.rec;
            ConditionIOptions co;
            co.window = cfg.condition_window;
            co.k_sigma = cfg.k_sigma;
            const ConditionIReport ci = condition_I_check(fp, rec, co);
            for (const auto& w : ci.windows) s.condi_ok_windows += w.ok;
            s.condi_windows += ci.windows.size();
            s.condi_min = std::min(s.condi_min, ci.fraction_ok);

            double inf_u = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rec.size(); ++i)
                if (rec.t[i] >= T0) inf_u = std::min(inf_u, rec.u[i]);
            const bool down = std::isfinite(inf_u) && inf_u > uc - cfg.epsilon;
            s.down_ok += down;

            const PortraitReport pr = verify_portrait(g, plane_of(rec), a_abs, delta_abs);
            std::size_t exits = 0;
            for (const auto& x : pr.violations) exits += x.rule == "absorbing-exit";
            s.absorbing_ok += exits == 0;

            const fs::path dir = seed_dir(cfg, seed);
            write_json(dir / "condition_I.json", to_json(ci));
            write_json(dir / "portrait.json", to_json(pr));
            per_seed.push_back({{"seed", seed},
                                {"start", run.start},
                                {"fraction_ok", ci.fraction_ok},
                                {"inf_u_after_T0", number(inf_u)},
                                {"going_down", down},
                                {"absorbing_exits", exits},
                                {"tau_absorbing", pr.tau_absorbing ? Json(*pr.tau_absorbing) : Json()}});
            ++v.seeds_reported;
            s.records.push_back(std::move(run.rec));
        } catch (const std::exception& e) {
            v.failures.push_back({seed, e.what()});
            per_seed.push_back({{"seed", seed}, {"error", e.what()}});
            ++v.seeds_reported;
        }
    }
    write_json(cfg.out / "seeds.json", per_seed);

    const std::size_t n = cfg.seeds.size();
    const double pooled = share(s.condi_ok_windows, s.condi_windows);
    std::ostringstream d1;
    d1 << "pooled share of windows inside the band at " << cfg.k_sigma
       << " sigma; smallest per-seed share ";
    if (s.records.empty()) d1 << "n/a";
    else d1 << s.condi_min;
    d1 << "; failed seeds "
       << v.failures.size();
    v.claims.push_back(make_claim("condition_I", "bounding flows: Condition I differential inequality",
                                  v.failures.empty() && pooled >= 0.9, pooled, 0.9,
                                  kRepoCalibration, d1.str()));

    std::ostringstream d2;
    d2 << "share of seeds with u > u_c - " << cfg.epsilon << " on [T0, T], T0 = " << T0
       << " from the exact-flow portrait";
    const bool tested = std::isfinite(T0) && T0 < cfg.horizon;
    if (!tested) d2 << "; T0 is not below the horizon, claim not tested";
    v.claims.push_back(make_claim("going_down_quickly", "performance guarantee: energy below -u_c N after T0",
                                  tested && share(s.down_ok, n) >= cfg.seed_share,
                                  share(s.down_ok, n), cfg.seed_share, kRepoCalibration, d2.str()));

    std::ostringstream d3;
    d3 << "share of seeds with no exit from the absorbing set after entry, epsilon = "
       << cfg.absorbing_epsilon << ", delta = " << delta_abs;
    v.claims.push_back(make_claim("absorbing_set", "absorbing set of the phase portrait",
                                  share(s.absorbing_ok, n) >= cfg.seed_share,
                                  share(s.absorbing_ok, n), cfg.seed_share, kRepoCalibration, d3.str()));

    if (kind == StartKind::Uniform && s.records.size() >= 2) {
        const PlaneTrajectory mp = mean_path(s.records);
        write_plane_csv(cfg.out / "mean_path.csv", mp);
        try {
            const ConfinementReport cr = graph_confinement_check(fp, mp, cfg.confinement_tol);
            write_json(cfg.out / "confinement.json", to_json(cr));
            v.claims.push_back(make_claim("mean_path_confinement", "confinement between the bounding flow lines",
                                          cr.violation_fraction() <= 0.01, cr.violation_fraction(),
                                          0.01, kRepoCalibration,
                                          "share of mean-path samples outside [gamma_L, gamma_U] by more than the tolerance"));
        } catch (const std::exception& e) {
            v.claims.push_back(make_claim("mean_path_confinement", "confinement between the bounding flow lines",
                                          false, kNaN, 0.01, kRepoCalibration, e.what()));
        }
    }
}

void near_critical_scenario(const ExperimentConfig& cfg, Verdict& v) {
    const FlowParams fp = cfg.flow_params();
    std::size_t good = 0;
    double c1_sum = 0.0, c2_sum = 0.0;
    Json per_seed = Json::array();
    for (std::uint64_t seed : cfg.seeds) {
        try {
            SeedRun run = run_langevin(cfg, seed, StartKind::NearCritical);
            const TrajectoryRecord& rec = run.rec;
            const PlanePoint z0{rec.u[0], rec.v[0]};
            // rho: half the time the lower flow keeps F1 < 0 and F2_L > 0
            IntegrateOptions io;
            io.stop = [&fp](PlanePoint z) { return F1(fp, z.u, z.v) >= 0.0 || F2_L(fp, z.u, z.v) <= 0.0; };
            const PlaneTrajectory lf = integrate_flow(fp, FlowKind::Lower, z0, cfg.flow_step, cfg.rho_max, io);
            const double rho = std::min(cfg.rho_max, 0.5 * lf.t.back());
            // smallest rates of H increase and v increase over (0, rho]
            double c1 = std::numeric_limits<double>::infinity(), c2 = c1;
            for (std::size_t i = 1; i < rec.size() && rec.t[i] <= rho + 1e-12; ++i) {
                c1 = std::min(c1, (rec.u[0] - rec.u[i]) / rec.t[i]);
                c2 = std::min(c2, (rec.v[i] - rec.v[0]) / rec.t[i]);
            }
            const bool ok = std::isfinite(c1) && c1 > 0.0 && c2 > 0.0;
            good += ok;
            if (std::isfinite(c1)) {
                c1_sum += c1;
                c2_sum += c2;
            }
            per_seed.push_back({{"seed", seed},
                                {"start", run.start},
                                {"rho", rho},
                                {"c1", number(c1)},
                                {"c2", number(c2)},
                                {"climbs", ok}});
            ++v.seeds_reported;
        } catch (const std::exception& e) {
            v.failures.push_back({seed, e.what()});
            per_seed.push_back({{"seed", seed}, {"error", e.what()}});
            ++v.seeds_reported;
        }
    }
    write_json(cfg.out / "seeds.json", per_seed);
    const std::size_t n = cfg.seeds.size();
    std::ostringstream d;
    d << "share of seeds where H and |grad H|^2 grow at positive rates on [0, rho]; mean rates c1 = "
      << (n ? c1_sum / n : kNaN) << ", c2 = " << (n ? c2_sum / n : kNaN);
    v.claims.push_back(make_claim("climbing_saddles", "climbing saddles and wells",
                                  share(good, n) >= cfg.seed_share, share(good, n), cfg.seed_share,
                                  kRepoCalibration, d.str()));
}

void regularity_scenario(const ExperimentConfig& cfg, Verdict& v) {
    const ModelFactory factory = default_factory();
    Json reports = Json::array();
    auto add = [&](const StatReport& r, const std::string& name, const std::string& anchor) {
        reports.push_back(to_json(r));
        v.claims.push_back(make_claim(name, anchor, r.pass.value_or(false), r.statistic, r.threshold,
                                      r.provenance.empty() ? kRepoCalibration : r.provenance,
                                      r.note));
    };
    const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    for (std::size_t N : cfg.reg_dims) {
        if (N < 200) continue;
        const TraceStatistics ts = trace_statistics(factory, cfg.p, N, cfg.reg_samples, split_seed(seed, N));
        add(ts.trace, "trace_G_centered_N" + std::to_string(N), "GOE statistics of the restricted Hessian");
        add(ts.trace_sq_ratio, "trace_G2_ratio_N" + std::to_string(N), "GOE statistics of the restricted Hessian");
        const OpNormStatistics os = op_norm_statistics(factory, cfg.p, N, cfg.reg_samples, split_seed(seed, N + 1));
        add(os.mean_ratio, "op_norm_G_N" + std::to_string(N), "operator norm of the restricted Hessian");
    }
    add(laplacian_trend(factory, cfg.p, cfg.reg_dims, cfg.reg_samples, split_seed(seed, 7)),
        "laplacian_trend", "Laplacian estimate for H");
    const Model m = sample_model(cfg.p, cfg.reg_dims.front(), split_seed(seed, 8));
    const SupNorms sn = sampled_sup_norms(m, cfg.sup_samples, cfg.window, cfg.flow_params().lambda_p,
                                          split_seed(seed, 9));
    reports.push_back(to_json(sn.energy));
    reports.push_back(to_json(sn.grad));
    reports.push_back(to_json(sn.op));
    write_json(cfg.out / "regularity.json", reports);
}

}  // namespace

// ---- config ------------------------------------------------------------------

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto dots = item.find("..");
        if (dots != std::string::npos) {
            const auto a = parse_number<std::uint64_t>("seeds", item.substr(0, dots));
            const auto b = parse_number<std::uint64_t>("seeds", item.substr(dots + 2));
            if (b < a) throw ConfigError("empty seed range " + item);
            for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
        } else {
            out.push_back(parse_number<std::uint64_t>("seeds", item));
        }
    }
    if (out.empty()) throw ConfigError("seed list is empty");
    return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    auto f = fields(c);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.rfind("e0_", 0) == 0) {
            const int order = parse_number<int>(key, key.substr(3));
            c.e0[order] = parse_number<double>(key, value);
            continue;
        }
        const auto it = f.find(key);
        if (it == f.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + key);
        it->second.set(value);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::dump() const {
    ExperimentConfig copy = *this;
    std::ostringstream out;
    for (const auto& [key, field] : fields(copy)) out << key << " = " << field.get() << '\n';
    for (const auto& [order, value] : e0) out << "e0_" << order << " = " << fmt(value) << '\n';
    return out.str();
}

void ExperimentConfig::validate() const {
    static const std::set<std::string> scenarios{"uniform",  "near_critical", "adversarial",
                                                 "flows_only", "regularity",  "portrait"};
    if (!scenarios.count(scenario)) throw ConfigError("unknown scenario " + scenario);
    if (p < 2 || p > 4) throw ConfigError("p must be in 2..4");
    if (N < 2) throw ConfigError("N must be at least 2");
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(beta, "beta");
    positive(horizon, "horizon");
    positive(step, "step");
    positive(epsilon, "epsilon");
    positive(absorbing_epsilon, "absorbing_epsilon");
    positive(eta, "eta");
    positive(delta0, "delta0");
    positive(rho_max, "rho_max");
    positive(resolution, "resolution");
    positive(flow_step, "flow_step");
    positive(flow_horizon, "flow_horizon");
    positive(k_sigma, "k_sigma");
    positive(confinement_tol, "confinement_tol");
    if (delta < 0.0) throw ConfigError("delta must be nonnegative (0 calibrates)");
    if (record_stride < 1) throw ConfigError("record_stride must be at least 1");
    if (!(seed_share > 0.0 && seed_share <= 1.0)) throw ConfigError("seed_share must be in (0, 1]");
    if (!(window.u_min < window.u_max && window.v_min < window.v_max))
        throw ConfigError("window is empty");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (scenario == "near_critical" && !(delta0 < p * eta / beta))
        throw ConfigError("near_critical needs delta0 < p * eta / beta");
    if (reg_dims.empty()) throw ConfigError("reg_dims is empty");
    LangevinConfig lc;
    lc.beta = beta;
    lc.step = step;
    lc.horizon = horizon;
    lc.record_stride = record_stride;
    try {
        lc.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    flow_params();
}

FlowParams ExperimentConfig::flow_params() const {
    try {
        return FlowParams::from_table(p, beta, e0);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
}

// ---- verdict -----------------------------------------------------------------

bool Verdict::all_pass() const {
    return !claims.empty() && std::all_of(claims.begin(), claims.end(), [](const Claim& c) { return c.pass; });
}

Json Verdict::to_json() const {
    Json j;
    j["scenario"] = scenario;
    j["all_pass"] = all_pass();
    j["seeds_in"] = seeds_in;
    j["seeds_reported"] = seeds_reported;
    j["claims"] = Json::array();
    for (const Claim& c : claims)
        j["claims"].push_back({{"name", c.name},
                               {"paper_anchor", c.paper_anchor},
                               {"pass", c.pass},
                               {"statistic", number(c.statistic)},
                               {"threshold", number(c.threshold)},
                               {"provenance", c.provenance},
                               {"detail", c.detail}});
    j["failures"] = Json::array();
    for (const auto& f : failures) j["failures"].push_back({{"seed", f.seed}, {"error", f.error}});
    return j;
}

int exit_status(const Verdict& v) { return v.all_pass() ? 0 : 2; }

// ---- exact-flow portrait -----------------------------------------------------

FlowPortrait exact_flow_portrait(const PhaseGeometry& g, const AbsorbingSet& a, double delta,
                                 std::size_t starts, double horizon, double step,
                                 std::uint64_t seed) {
    const Window& w = g.window();
    Rng rng = make_rng(seed, 0x706f72747261);
    std::uniform_real_distribution<double> U(w.u_min, w.u_max), V(w.v_min, w.v_max);
    FlowPortrait out;
    out.delta = delta;
    out.starts = starts;
    out.detail = Json::array();
    double T0 = 0.0;
    for (std::size_t s = 0; s < starts; ++s) {
        const PlanePoint z{U(rng), V(rng)};
        for (FlowKind k : {FlowKind::Lower, FlowKind::Upper}) {
            IntegrateOptions io;
            io.blow_up = 1e4;
            const PlaneTrajectory tr = integrate_flow(g.params(), k, z, step, horizon, io);
            const PortraitReport pr = verify_portrait(g, tr, a, delta);
            std::size_t arrows = 0, exits = 0;
            for (const auto& x : pr.violations) (x.rule == "arrow" ? arrows : exits)++;
            out.arrow_violations += arrows;
            out.absorbing_violations += exits;
            const bool include = k == FlowKind::Lower || !pr.left_window;
            if (include) {
                ++out.included;
                if (pr.tau_A0delta)
                    T0 = std::max(T0, *pr.tau_A0delta);
                else
                    ++out.missed;
            } else {
                ++out.excluded_upper;
            }
            out.detail.push_back({{"u0", z.u},
                                  {"v0", z.v},
                                  {"flow", to_string(k)},
                                  {"tau_A0delta", pr.tau_A0delta ? Json(*pr.tau_A0delta) : Json()},
                                  {"left_window", pr.left_window},
                                  {"included", include},
                                  {"arrow_violations", arrows},
                                  {"absorbing_exits", exits}});
        }
    }
    if (out.missed == 0 && out.included > 0) out.T0 = T0;
    Json summary{{"delta", delta},
                 {"starts", starts},
                 {"T0", out.T0 ? Json(*out.T0) : Json()},
                 {"included", out.included},
                 {"excluded_upper", out.excluded_upper},
                 {"missed", out.missed},
                 {"arrow_violations", out.arrow_violations},
                 {"absorbing_violations", out.absorbing_violations},
                 {"flows", out.detail}};
    out.detail = std::move(summary);
    return out;
}

// ---- figure data -------------------------------------------------------------

double threshold_energy(int p) { return 2.0 * std::sqrt((p - 1.0) / p); }

std::vector<double> figure_beta_grid() {
    std::vector<double> grid{0.0};
    // log-spaced from 1e-2 to 1e3
    for (int k = 0; k <= 250; ++k) grid.push_back(std::pow(10.0, -2.0 + 5.0 * k / 250.0));
    return grid;
}

void emit_figure_data(const ExperimentConfig& cfg) {
    {
        fs::create_directories(cfg.out);
        std::ofstream out(cfg.out / "uc_curves.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write uc_curves.csv");
        out << "p,beta,u_c,u_c_over_E0,u_c_over_Einf\n";
        for (int p : {3, 4}) {
            const double lam = lambda_p_default(p, cfg.e0);
            const auto e0 = cfg.e0.find(p);
            for (double b : figure_beta_grid()) {
                const double uc = b > 0.0 ? u_c_value(FlowParams::with_lambda(p, b, lam)) : 0.0;
                out << p << ',' << format_double(b) << ',' << format_double(uc) << ','
                    << (e0 != cfg.e0.end() ? format_double(uc / e0->second) : "nan") << ','
                    << format_double(uc / threshold_energy(p)) << '\n';
            }
        }
    }
    const FlowParams fp = cfg.flow_params();
    std::vector<double> grid;
    for (long k = 0;; ++k) {
        const double u = cfg.window.u_min + static_cast<double>(k) * 1e-2;
        if (u > cfg.window.u_max + 1e-12) break;
        grid.push_back(u);
    }
    write_curves_csv(cfg.out / "curves.csv", fp, grid);
    const PhaseGeometry g = PhaseGeometry::build(fp, cfg.window, geometry_options(cfg));
    write_boundaries_csv(cfg.out / "boundaries.csv", g, g.absorbing(cfg.epsilon));
}

// ---- runner ------------------------------------------------------------------

Verdict run_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out);
    write_text(cfg.out / "config.txt", cfg.dump());
    const auto started = std::chrono::system_clock::now();

    Verdict v;
    v.scenario = cfg.scenario;
    const bool seeded = cfg.scenario == "uniform" || cfg.scenario == "adversarial" ||
                        cfg.scenario == "near_critical";
    v.seeds_in = seeded ? cfg.seeds.size() : 0;
    if (cfg.scenario == "flows_only")
        flows_scenario(cfg, v);
    else if (cfg.scenario == "portrait")
        portrait_scenario(cfg, v);
    else if (cfg.scenario == "uniform")
        langevin_scenario(cfg, v, StartKind::Uniform);
    else if (cfg.scenario == "adversarial")
        langevin_scenario(cfg, v, StartKind::Adversarial);
    else if (cfg.scenario == "near_critical")
        near_critical_scenario(cfg, v);
    else
        regularity_scenario(cfg, v);

    write_json(cfg.out / "verdict.json", v.to_json());
    const auto finished = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(started);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    write_json(cfg.out / "run_info.json",
               {{"started_utc", stamp},
                {"wall_seconds", std::chrono::duration<double>(finished - started).count()}});
    return v;
}

// ---- schema ------------------------------------------------------------------

SchemaCheck verdict_schema_validate(const Json& j) {
    SchemaCheck c;
    auto err = [&](const std::string& s) { c.errors.push_back(s); };
    if (!j.is_object()) {
        err("$: expected an object");
        return c;
    }
    if (!j.contains("scenario") || !j["scenario"].is_string()) err("$.scenario: missing or not a string");
    if (!j.contains("claims") || !j["claims"].is_array()) {
        err("$.claims: missing or not an array");
    } else if (j["claims"].empty()) {
        err("$.claims: empty");
    } else {
        static const std::set<std::string> tags{kTheoryScale, kDerivedOracle, kRepoCalibration};
        for (std::size_t i = 0; i < j["claims"].size(); ++i) {
            const Json& cl = j["claims"][i];
            const std::string at = "$.claims[" + std::to_string(i) + "]";
            if (!cl.is_object()) {
                err(at + ": expected an object");
                continue;
            }
            for (const char* key : {"name", "paper_anchor", "provenance"})
                if (!cl.contains(key) || !cl[key].is_string() || cl[key].get<std::string>().empty())
                    err(at + "." + key + ": missing or not a non-empty string");
            if (cl.contains("provenance") && cl["provenance"].is_string() &&
                !tags.count(cl["provenance"].get<std::string>()))
                err(at + ".provenance: unknown tag");
            if (!cl.contains("pass") || !cl["pass"].is_boolean()) err(at + ".pass: missing or not a boolean");
            for (const char* key : {"statistic", "threshold"})
                if (!cl.contains(key) || !(cl[key].is_number() || cl[key].is_null()))
                    err(at + "." + key + ": missing or not a number");
        }
    }
    c.ok = c.errors.empty();
    return c;
}

SchemaCheck verdict_schema_validate(const fs::path& path) {
    SchemaCheck c;
    if (!fs::exists(path)) {
        c.errors.push_back(path.string() + ": no such file");
        return c;
    }
    try {
        return verdict_schema_validate(read_json(path));
    } catch (const std::exception& e) {
        c.errors.push_back(path.string() + ": " + e.what());
        return c;
    }
}

}  // namespace pspin
