#include "pspin/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pspin/errors.hpp"

namespace pspin {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

// sign of F1 with rounding on the F1 = 0 line treated as zero
int start_sign(const FlowParams& fp, double u, double v) {
    const double f = F1(fp, u, v);
    const double scale = fp.p * std::abs(u) + fp.beta * std::abs(v);
    return std::abs(f) <= 1e-12 * (1.0 + scale) ? 0 : sgn(f);
}
}  // namespace

double e0_lookup(int p, const E0Table& extra) {
    if (auto it = extra.find(p); it != extra.end()) return it->second;
    if (p == 1) return 1.0;
    if (p == 2) return std::sqrt(2.0);
    std::ostringstream msg;
    msg << "no ground-state density E_{0," << p
        << "} available; supply it in the E0 table (key e0_" << p << ")";
    throw ArgumentError(msg.str());
}

double lambda_p_default(int p, const E0Table& extra) {
    if (p < 2) throw ArgumentError("p must be at least 2");
    return std::sqrt(p * (p - 1.0)) * (std::sqrt(2.0) + e0_lookup(p - 2, extra));
}

FlowParams FlowParams::from_table(int p, double beta, const E0Table& extra) {
    FlowParams fp;
    fp.p = p;
    fp.beta = beta;
    fp.e0 = extra;
    fp.lambda_p = lambda_p_default(p, extra);
    if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
    if (fp.lambda_p < 2.0 * std::sqrt(p * (p - 1.0)) - 1e-12)
        throw ArgumentError("lambda_p below the operator-norm scale 2 sqrt(p(p-1))");
    return fp;
}

FlowParams FlowParams::with_lambda(int p, double beta, double lambda_p) {
    if (p < 2) throw ArgumentError("p must be at least 2");
    if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
    if (!(lambda_p > 0.0)) throw ArgumentError("lambda_p must be positive");
    FlowParams fp;
    fp.p = p;
    fp.beta = beta;
    fp.lambda_p = lambda_p;
    return fp;
}

double F1(const FlowParams& fp, double u, double v) { return -fp.p * u + fp.beta * v; }

double F2_full(const FlowParams& fp, double u, double v, double w) {
    const double p = fp.p;
    return 2.0 * p * (p - 1.0) - 2.0 * (p - 1.0) * v + 2.0 * p * u * (p * u - fp.beta * v) -
           2.0 * fp.beta * w;
}

double F2_L(const FlowParams& fp, double u, double v) {
    const double p = fp.p;
    return 2.0 * p * (p - 1.0) - 2.0 * (p - 1.0) * v + 2.0 * p * u * (p * u - fp.beta * v) -
           2.0 * fp.beta * fp.lambda_p * v;
}

double F2_U(const FlowParams& fp, double u, double v) {
    const double p = fp.p;
    return 2.0 * p * (p - 1.0) - 2.0 * (p - 1.0) * v + 2.0 * p * u * (p * u - fp.beta * v) +
           2.0 * fp.beta * fp.lambda_p * v;
}

double u_c_value(const FlowParams& fp) {
    return fp.beta / (1.0 + fp.beta * fp.lambda_p / (fp.p - 1.0));
}

double bar_u_c_value(const FlowParams& fp) {
    const double bl = fp.beta * fp.lambda_p;
    if (bl >= fp.p - 1.0) return kInf;
    return fp.beta / (1.0 - bl / (fp.p - 1.0));
}

namespace {
double f_ratio(const FlowParams& fp, double u, double sign) {
    const double p = fp.p;
    const double den = p - 1.0 + p * fp.beta * u + sign * fp.beta * fp.lambda_p;
    if (!(den > 0.0)) {
        std::ostringstream msg;
        msg << "u = " << u << " outside the curve domain (denominator " << den << ")";
        throw DomainError(msg.str());
    }
    return (p * (p - 1.0) + p * p * u * u) / den;
}
}  // namespace

double f_L(const FlowParams& fp, double u) { return f_ratio(fp, u, +1.0); }
double f_U(const FlowParams& fp, double u) { return f_ratio(fp, u, -1.0); }
double ell_1(const FlowParams& fp, double u) { return fp.p * u / fp.beta; }

std::string to_string(Terminal t) {
    switch (t) {
        case Terminal::Horizon: return "horizon";
        case Terminal::Converged: return "converged";
        case Terminal::DomainExit: return "domain-exit";
        case Terminal::BlowUp: return "blow-up";
        case Terminal::Stopped: return "stopped";
    }
    return "unknown";
}

std::string to_string(FlowKind k) { return k == FlowKind::Lower ? "lower" : "upper"; }

PlanePoint PlaneTrajectory::at(double time) const {
    if (t.empty()) throw ArgumentError("empty trajectory");
    if (time <= t.front()) return point(0);
    if (time >= t.back()) return back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double a = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return {u[i - 1] + a * (u[i] - u[i - 1]), v[i - 1] + a * (v[i] - v[i - 1])};
}

PlaneTrajectory integrate_field(const Field& f, PlanePoint init, double step, double horizon,
                                const IntegrateOptions& opt) {
    if (!(step > 0.0)) throw ArgumentError("step must be positive");
    if (!(horizon > 0.0)) throw ArgumentError("horizon must be positive");
    if (!(init.v >= 0.0)) throw DomainError("initial v must be nonnegative");
    PlaneTrajectory tr;
    tr.step = step;
    const long n = std::lround(std::ceil(horizon / step - 1e-9));
    tr.t.reserve(static_cast<std::size_t>(n) + 1);
    tr.u.reserve(static_cast<std::size_t>(n) + 1);
    tr.v.reserve(static_cast<std::size_t>(n) + 1);
    PlanePoint z = init;
    tr.t.push_back(0.0);
    tr.u.push_back(z.u);
    tr.v.push_back(z.v);
    if (opt.stop && opt.stop(z)) {
        tr.terminal = Terminal::Stopped;
        return tr;
    }
    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * step;
        const PlanePoint k1 = f(t, z);
        if (std::hypot(k1.u, k1.v) < opt.converge_tol) {
            tr.terminal = Terminal::Converged;
            return tr;
        }
        const double h = step;
        const PlanePoint k2 = f(t + h / 2, {z.u + h / 2 * k1.u, z.v + h / 2 * k1.v});
        const PlanePoint k3 = f(t + h / 2, {z.u + h / 2 * k2.u, z.v + h / 2 * k2.v});
        const PlanePoint k4 = f(t + h, {z.u + h * k3.u, z.v + h * k3.v});
        const PlanePoint next{z.u + h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
                              z.v + h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
        if (!std::isfinite(next.u) || !std::isfinite(next.v)) {
            tr.terminal = Terminal::BlowUp;
            return tr;
        }
        if (next.v < 0.0) {
            tr.terminal = Terminal::DomainExit;
            return tr;
        }
        z = next;
        tr.t.push_back(static_cast<double>(k + 1) * step);
        tr.u.push_back(z.u);
        tr.v.push_back(z.v);
        if (std::hypot(z.u, z.v) > opt.blow_up) {
            tr.terminal = Terminal::BlowUp;
            return tr;
        }
        if (opt.stop && opt.stop(z)) {
            tr.terminal = Terminal::Stopped;
            return tr;
        }
    }
    tr.terminal = Terminal::Horizon;
    return tr;
}

PlaneTrajectory integrate_flow(const FlowParams& fp, FlowKind kind, PlanePoint init,
                               double step, double horizon, const IntegrateOptions& opt) {
    Field f;
    if (kind == FlowKind::Lower)
        f = [&fp](double, PlanePoint z) { return PlanePoint{F1(fp, z.u, z.v), F2_L(fp, z.u, z.v)}; };
    else
        f = [&fp](double, PlanePoint z) { return PlanePoint{F1(fp, z.u, z.v), F2_U(fp, z.u, z.v)}; };
    return integrate_field(f, init, step, horizon, opt);
}

std::optional<double> GraphTable::at(double uq) const {
    if (u.empty() || uq < u.front() || uq > u.back()) return std::nullopt;
    const auto it = std::lower_bound(u.begin(), u.end(), uq);
    const std::size_t i = static_cast<std::size_t>(it - u.begin());
    if (u[i] == uq) return v[i];
    const double a = (uq - u[i - 1]) / (u[i] - u[i - 1]);
    return v[i - 1] + a * (v[i] - v[i - 1]);
}

PlanePoint GraphTable::far_end() const {
    if (direction > 0) return {u.back(), v.back()};
    return {u.front(), v.front()};
}

GraphTable graph_of_flow(const PlaneTrajectory& tr, const FlowParams& fp, GraphStart rule) {
    if (tr.size() < 2) throw NotAGraphError("trajectory too short to extract a graph");
    const double u0 = tr.u[0];
    int d = start_sign(fp, tr.u[0], tr.v[0]);
    if (d == 0) {
        const double uc = u_c_value(fp);
        const double ubar = bar_u_c_value(fp);
        if (rule == GraphStart::Subject && u0 >= uc && u0 <= ubar)
            throw NotAGraphError("start on the F1 = 0 line inside [u_c, bar u_c] is degenerate");
        // direction of the first move off the line
        for (std::size_t i = 1; i < tr.size() && d == 0; ++i) d = sgn(tr.u[i] - u0);
        if (d == 0) throw NotAGraphError("trajectory never leaves the F1 = 0 line");
    }

    std::vector<double> us{tr.u[0]}, vs{tr.v[0]};
    bool crossed = false;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double f = F1(fp, tr.u[i], tr.v[i]);
        if (sgn(f) == -d) {
            // linear root of F1 between samples i-1 and i
            const double fa = F1(fp, tr.u[i - 1], tr.v[i - 1]);
            const double a = fa / (fa - f);
            const double ur = tr.u[i - 1] + a * (tr.u[i] - tr.u[i - 1]);
            const double vr = tr.v[i - 1] + a * (tr.v[i] - tr.v[i - 1]);
            if (d * (ur - us.back()) > 0.0) {
                us.push_back(ur);
                vs.push_back(vr);
            }
            crossed = true;
            break;
        }
        // keep strictly monotone samples only
        if (d * (tr.u[i] - us.back()) > 0.0) {
            us.push_back(tr.u[i]);
            vs.push_back(tr.v[i]);
        }
    }
    if (us.size() < 2) throw NotAGraphError("trajectory does not move in u");
    GraphTable g;
    g.direction = d;
    g.sign_change = crossed;
    if (d < 0) {
        std::reverse(us.begin(), us.end());
        std::reverse(vs.begin(), vs.end());
    }
    g.u = std::move(us);
    g.v = std::move(vs);
    return g;
}

std::optional<double> hitting_time(const PlaneTrajectory& tr, const Predicate& pred) {
    if (tr.size() == 0) return std::nullopt;
    if (pred(tr.u[0], tr.v[0])) return tr.t[0];
    for (std::size_t i = 1; i < tr.size(); ++i) {
        if (!pred(tr.u[i], tr.v[i])) continue;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double um = tr.u[i - 1] + mid * (tr.u[i] - tr.u[i - 1]);
            const double vm = tr.v[i - 1] + mid * (tr.v[i] - tr.v[i - 1]);
            if (pred(um, vm))
                hi = mid;
            else
                lo = mid;
        }
        return tr.t[i - 1] + hi * (tr.t[i] - tr.t[i - 1]);
    }
    return std::nullopt;
}

}  // namespace pspin
