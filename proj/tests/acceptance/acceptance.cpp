// Acceptance gate: one PASS/FAIL line per criterion, exit 1 on any FAIL.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pspin/comparison.hpp"
#include "pspin/diagnostics.hpp"
#include "pspin/experiment.hpp"
#include "pspin/flows.hpp"
#include "pspin/io.hpp"
#include "pspin/kernels.hpp"
#include "pspin/model.hpp"
#include "pspin/regions.hpp"
#include "pspin/rng.hpp"

using namespace pspin;
namespace fs = std::filesystem;

namespace {

struct Line {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

class Gate {
public:
    template <class F>
    void run(const std::string& name, F&& check) {
        const auto t0 = std::chrono::steady_clock::now();
        Line l;
        l.name = name;
        try {
            check(l);
        } catch (const std::exception& e) {
            l.pass = false;
            l.detail = std::string("error: ") + e.what();
        }
        l.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %-28s %s (%.1fs)\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.detail.c_str(),
                    l.seconds);
        std::fflush(stdout);
        lines_.push_back(std::move(l));
    }

    bool all_pass() const {
        return std::all_of(lines_.begin(), lines_.end(), [](const Line& l) { return l.pass; });
    }

    Json to_json() const {
        Json a = Json::array();
        for (const auto& l : lines_)
            a.push_back({{"name", l.name}, {"pass", l.pass}, {"detail", l.detail}, {"seconds", l.seconds}});
        return {{"all_pass", all_pass()}, {"criteria", a}};
    }

private:
    std::vector<Line> lines_;
};

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(9);
    s << x;
    return s.str();
}

struct Sub {
    std::ostringstream text;
    bool pass = true;

    void check(const std::string& what, double got, double want, double tol) {
        const bool ok = std::abs(got - want) <= tol;
        pass = pass && ok;
        text << what << "=" << fmt(got) << (ok ? "" : " (want " + fmt(want) + " +- " + fmt(tol) + ")")
             << "; ";
    }
    void flag(const std::string& what, bool ok) {
        pass = pass && ok;
        text << what << (ok ? " ok" : " FAILED") << "; ";
    }
};

// ---- closed-form group -----------------------------------------------------

void closed_forms(Line& l) {
    Sub s;
    const FlowParams p3 = FlowParams::from_table(3, 1.0);
    s.check("Lambda_3", p3.lambda_p, std::sqrt(6.0) * (std::sqrt(2.0) + 1.0), 1e-12);
    s.check("u_c(3)", u_c_value(p3), 0.252730, 1e-6);
    s.check("v_c(3)", z_c(p3).v, 0.758190, 1e-6);
    s.flag("bar_u_c(3)=inf", std::isinf(bar_u_c_value(p3)));
    const FlowParams p4 = FlowParams::from_table(4, 1.0);
    s.check("u_c(4)", u_c_value(p4), 0.234407, 1e-6);
    l.pass = s.pass;
    l.detail = s.text.str();
    if (!l.pass)
        l.detail += "with E_{0,2} = sqrt(2), u_c(4) = 3/(3 + 4 sqrt(6)) = " + fmt(3.0 / (3.0 + 4.0 * std::sqrt(6.0)));
}

void ansatz(Line& l) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> P(2, 4);
    std::uniform_real_distribution<double> B(0.0, 2.0);
    int bad = 0;
    for (int i = 0; i < 100; ++i) {
        const int p = P(rng);
        double beta = B(rng);
        if (beta == 0.0) beta = 2.0;
        // the controlled field with w = 0 does not involve lambda
        const FlowParams fp = FlowParams::with_lambda(p, beta, 1.0);
        const double u = beta, v = p;
        bad += F1(fp, u, v) != 0.0 || F2_full(fp, u, v, 0.0) != 0.0;
    }
    l.pass = bad == 0;
    l.detail = "100 pairs, nonzero residuals " + std::to_string(bad);
}

void flow_convergence(Line& l) {
    Sub s;
    const FlowParams fp = FlowParams::from_table(3, 1.0);
    const PlanePoint zc = z_c(fp);
    auto dist = [&](PlanePoint z) { return std::hypot(z.u - zc.u, z.v - zc.v); };
    const PlaneTrajectory lo = integrate_flow(fp, FlowKind::Lower, {0.0, 3.0}, 1e-3, 50.0);
    const PlaneTrajectory lo2 = integrate_flow(fp, FlowKind::Lower, {0.0, 3.0}, 5e-4, 50.0);
    s.flag("lower within 1e-6 of z_c (" + fmt(dist(lo.back())) + ")", dist(lo.back()) <= 1e-6);
    double shift = 0.0;
    for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        const PlanePoint a = lo.at(t), b = lo2.at(t);
        shift = std::max({shift, std::abs(a.u - b.u), std::abs(a.v - b.v)});
    }
    s.flag("lower halving shift " + fmt(shift), shift <= 1e-8);

    s.flag("bar_u_c infinite", std::isinf(bar_u_c_value(fp)));
    // the v-equation stiffens like 2 p beta u, so the escape needs a small step
    IntegrateOptions io;
    io.blow_up = 1e12;
    const PlaneTrajectory up = integrate_flow(fp, FlowKind::Upper, {0.0, 3.0}, 2.5e-4, 300.0, io);
    const PlaneTrajectory up2 = integrate_flow(fp, FlowKind::Upper, {0.0, 3.0}, 1.25e-4, 300.0, io);
    s.flag("upper u(300)=" + fmt(up.back().u) + " > 1e3", up.back().u > 1e3);
    const double rel = std::abs(up.back().u - up2.back().u) / std::abs(up2.back().u);
    s.flag("upper halving rel shift " + fmt(rel), rel <= 1e-8);
    l.pass = s.pass;
    l.detail = s.text.str();
}

void portrait(Line& l) {
    const FlowParams fp = FlowParams::from_table(3, 1.0);
    const PhaseGeometry g = PhaseGeometry::build(fp);
    const AbsorbingSet a = g.absorbing(0.1);
    const double delta = calibrate_delta(g, a);
    const FlowPortrait r = exact_flow_portrait(g, a, delta, 100, 50.0, 1e-3, 2024);
    l.pass = r.arrow_violations == 0 && r.T0.has_value();
    l.detail = "starts " + std::to_string(r.starts) + ", arrow violations " +
               std::to_string(r.arrow_violations) + ", absorbing exits " +
               std::to_string(r.absorbing_violations) + ", upper flows leaving W " +
               std::to_string(r.excluded_upper) + ", delta " + fmt(delta) + ", T0 " +
               (r.T0 ? fmt(*r.T0) : std::string("none"));
}

// smooth admissible control: lambda v times a normalized sum of sines
Control random_control(const FlowParams& fp, Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::array<double, 3> a{}, w{}, ph{};
    double tot = 0.0;
    for (int k = 0; k < 3; ++k) {
        a[k] = U(rng);
        w[k] = 0.2 + 3.0 * U(rng);
        ph[k] = 6.283185307179586 * U(rng);
        tot += a[k];
    }
    for (auto& x : a) x /= tot;
    const double lam = fp.lambda_p;
    return [=](double t, double, double v) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a[k] * std::sin(w[k] * t + ph[k]);
        return lam * v * s;
    };
}

void comparison_suite(Line& l) {
    const FlowParams fp = FlowParams::from_table(3, 1.0);
    Rng rng = make_rng(7, 0);
    std::uniform_real_distribution<double> U(-1.0, 2.0), V(0.5, 12.0), Ur(0.3, 2.0), S(0.05, 0.9);
    std::size_t conf_bad = 0, rect_bad = 0, conf_checked = 0, rect_checked = 0;
    double conf_worst = 0.0, rect_worst = 0.0;
    for (int s = 0; s < 50; ++s) {
        const Control c = random_control(fp, rng);
        const PlanePoint z{U(rng), V(rng)};
        const PlaneTrajectory sub = synthesize_condition_I(fp, z, c, 1e-3, 10.0);
        const ConfinementReport r = graph_confinement_check(fp, sub, 1e-6);
        conf_checked += r.checked;
        conf_bad += r.violations > 0;
        conf_worst = std::max(conf_worst, r.max_violation);

        const double ur = Ur(rng);
        const PlanePoint zr{ur, S(rng) * 2.0 * fp.p * ur / fp.beta};
        const PlaneTrajectory sub2 = synthesize_condition_I(fp, zr, c, 1e-3, 10.0);
        const RectangleReport q = rectangle_check(fp, sub2, 1e-8);
        rect_checked += q.checked;
        rect_bad += q.first_violation_t.has_value();
        rect_worst = std::max(rect_worst, q.max_violation);
    }
    l.pass = conf_bad == 0 && rect_bad == 0 && conf_checked > 0 && rect_checked > 0;
    l.detail = "50 systems; confinement failures " + std::to_string(conf_bad) + " (samples " +
               std::to_string(conf_checked) + ", worst " + fmt(conf_worst) + "), rectangle failures " +
               std::to_string(rect_bad) + " (samples " + std::to_string(rect_checked) + ", worst " +
               fmt(rect_worst) + ")";
}

void threshold_ratio(Line& l) {
    const FlowParams base = FlowParams::from_table(3, 1.0);
    double sup = 0.0;
    for (double b : figure_beta_grid())
        if (b > 0.0)  // u_c(0) = 0
            sup = std::max(sup, u_c_value(FlowParams::with_lambda(3, b, base.lambda_p)) / threshold_energy(3));
    const double want = 1.0 / (2.0 * (std::sqrt(2.0) + 1.0));
    l.pass = std::abs(sup - want) <= 1e-3;
    l.detail = "sup u_c / E_inf = " + fmt(sup) + " against " + fmt(want) + " +- 1e-3";
}

// ---- regularity group ------------------------------------------------------

void derivative_oracles(Line& l) {
    const std::size_t N = 100;
    double grad_err = 0.0, hess_err = 0.0;
    for (int p : {2, 3}) {
        const Model m = sample_model(p, N, split_seed(31, p));
        auto H_ext = [&](const Vector& y) { return m.scale() * kernels::reference::form(m.couplings(), y.data()); };
        auto grad_ref = [&](const Vector& y) {
            Vector g = kernels::reference::gradient(m.couplings(), y.data());
            for (auto& a : g) a *= m.scale();
            return g;
        };
        for (int k = 0; k < 20; ++k) {
            const SpherePoint x = uniform_sphere_point(N, split_seed(32, 100 * p + k));
            const Vector g = euclidean_gradient(m, x);
            const double h = 1e-5;
            double err = 0.0, ref = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                Vector yp = x.coords(), ym = x.coords();
                yp[i] += h;
                ym[i] -= h;
                err = std::max(err, std::abs((H_ext(yp) - H_ext(ym)) / (2 * h) - g[i]));
                ref = std::max(ref, std::abs(g[i]));
            }
            grad_err = std::max(grad_err, err / ref);

            Rng rng = make_rng(33, 100 * p + k);
            std::normal_distribution<double> G;
            Vector X(N), Y(N);
            for (auto& a : X) a = G(rng);
            for (auto& a : Y) a = G(rng);
            X = project_tangent(x, X);
            Y = project_tangent(x, Y);
            Vector yp = x.coords(), ym = x.coords();
            for (std::size_t i = 0; i < N; ++i) {
                yp[i] += h * Y[i];
                ym[i] -= h * Y[i];
            }
            const Vector gp = grad_ref(yp), gm = grad_ref(ym);
            double fd = 0.0;
            for (std::size_t i = 0; i < N; ++i) fd += X[i] * (gp[i] - gm[i]) / (2 * h);
            hess_err = std::max(hess_err, std::abs(hessian_form(m, x, X, Y) - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    l.pass = grad_err <= 1e-6 && hess_err <= 1e-4;
    l.detail = "p in {2,3}, N=100, 20 points: gradient rel err " + fmt(grad_err) + " (<= 1e-6), Hessian form rel err " +
               fmt(hess_err) + " (<= 1e-4)";
}

void goe_statistics(Line& l) {
    Sub s;
    for (std::size_t N : {200, 400}) {
        const TraceStatistics t = trace_statistics(default_factory(), 3, N, 20, split_seed(41, N));
        const OpNormStatistics o = op_norm_statistics(default_factory(), 3, N, 20, split_seed(42, N));
        const std::string n = "N=" + std::to_string(N);
        s.flag(n + " trG^2/N ratio " + fmt(t.trace_sq_ratio.statistic), t.trace_sq_ratio.pass.value_or(false));
        s.flag(n + " op norm ratio " + fmt(o.mean_ratio.statistic), o.mean_ratio.pass.value_or(false));
    }
    l.pass = s.pass;
    l.detail = "20 samples each; " + s.text.str();
}

void laplacian_check(Line& l) {
    const StatReport r = laplacian_trend(default_factory(), 3, {100, 200, 400}, 20, 51);
    l.pass = r.pass.value_or(false);
    l.detail = r.note;
}

// ---- langevin group --------------------------------------------------------

ExperimentConfig langevin_config(const std::string& scenario, const fs::path& out) {
    ExperimentConfig c;
    c.scenario = scenario;
    c.p = 3;
    c.beta = 1.0;
    c.N = 400;
    c.horizon = 5.0;
    c.step = 1e-3;
    c.seeds = parse_seed_list("1..20");
    c.write_trajectories = false;
    c.out = out / scenario;
    return c;
}

const Claim& claim(const Verdict& v, const std::string& name) {
    for (const auto& c : v.claims)
        if (c.name == name) return c;
    throw std::runtime_error("claim " + name + " missing from the " + v.scenario + " verdict");
}

std::string describe(const Verdict& v, const Claim& c) {
    return v.scenario + ": " + fmt(c.statistic) + " vs " + fmt(c.threshold) + " (" + c.detail + ")";
}

void langevin(Gate& gate, const fs::path& out) {
    Verdict uni, adv;
    gate.run("langevin_condition_I", [&](Line& l) {
        uni = run_scenario(langevin_config("uniform", out));
        const Claim& c = claim(uni, "condition_I");
        l.pass = c.pass;
        l.detail = describe(uni, c);
    });
    gate.run("going_down_quickly", [&](Line& l) {
        adv = run_scenario(langevin_config("adversarial", out));
        const Claim& a = claim(uni, "going_down_quickly");
        const Claim& b = claim(adv, "going_down_quickly");
        l.pass = a.pass && b.pass;
        l.detail = describe(uni, a) + "; " + describe(adv, b);
    });
    gate.run("climbing_saddles", [&](Line& l) {
        ExperimentConfig c = langevin_config("near_critical", out);
        c.eta = 1.2;
        c.delta0 = 0.05;
        c.horizon = c.rho_max;
        const Verdict v = run_scenario(c);
        const Claim& cl = claim(v, "climbing_saddles");
        l.pass = cl.pass;
        l.detail = describe(v, cl);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance gate"};
    std::string group = "all";
    std::string report;
    std::string out = "acceptance_runs";
    app.add_option("--group", group, "closed-form, regularity, langevin or all")
        ->check(CLI::IsMember({"closed-form", "regularity", "langevin", "all"}));
    app.add_option("--report", report, "write the lines as JSON");
    app.add_option("--out", out, "artifact directory for the Langevin runs");
    CLI11_PARSE(app, argc, argv);

    Gate gate;
    const bool all = group == "all";
    if (all || group == "closed-form") {
        gate.run("closed_forms", closed_forms);
        gate.run("ansatz_fixed_point", ansatz);
        gate.run("flow_convergence", flow_convergence);
        gate.run("exact_portrait", portrait);
        gate.run("comparison_suite", comparison_suite);
        gate.run("threshold_ratio", threshold_ratio);
    }
    if (all || group == "regularity") {
        gate.run("derivative_oracles", derivative_oracles);
        gate.run("goe_statistics", goe_statistics);
        gate.run("laplacian_trend", laplacian_check);
    }
    if (all || group == "langevin") langevin(gate, out);

    if (!report.empty()) write_json(report, gate.to_json());
    std::cout << (gate.all_pass() ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
    return gate.all_pass() ? 0 : 1;
}
