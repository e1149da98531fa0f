#include "pspin/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pspin/errors.hpp"

namespace pspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Resample a graph onto the global grid k * res, keeping the exact end points.
GraphTable resample(const GraphTable& g, double res) {
    GraphTable out;
    out.direction = g.direction;
    out.sign_change = g.sign_change;
    auto push = [&](double u) {
        if (!out.u.empty() && u <= out.u.back() + 1e-12 * (1.0 + std::abs(u))) return;
        out.u.push_back(u);
        out.v.push_back(*g.at(std::clamp(u, g.u_lo(), g.u_hi())));
    };
    push(g.u_lo());
    const long k0 = static_cast<long>(std::ceil(g.u_lo() / res));
    const long k1 = static_cast<long>(std::floor(g.u_hi() / res));
    for (long k = k0; k <= k1; ++k) push(static_cast<double>(k) * res);
    if (g.u_hi() > out.u.back()) {
        out.u.push_back(g.u_hi());
        out.v.push_back(g.v.back());
    }
    return out;
}

struct Traced {
    BoundaryTable table;
    bool window_exit = false;  // integration stopped on leaving W
};

// Boundary graph of the bounding flow from z0, integrated until it leaves W.
Traced trace(const FlowParams& fp, FlowKind kind, PlanePoint z0, const Window& w,
             const GeometryOptions& opt, const char* what) {
    IntegrateOptions io;
    io.stop = [&w](PlanePoint z) { return !w.contains(z.u, z.v); };
    const PlaneTrajectory tr = integrate_flow(fp, kind, z0, opt.flow_step, opt.flow_horizon, io);
    if (tr.terminal == Terminal::BlowUp || tr.terminal == Terminal::DomainExit) {
        std::ostringstream msg;
        msg << what << ": " << to_string(kind) << " flow from (" << z0.u << ", " << z0.v
            << ") ended with " << to_string(tr.terminal) << " at t = " << tr.t.back();
        throw SimulationDiverged(msg.str(), static_cast<long>(tr.size()));
    }
    GraphTable g;
    try {
        g = graph_of_flow(tr, fp, GraphStart::ExactFlow);
    } catch (const NotAGraphError& e) {
        throw NotAGraphError(std::string(what) + ": " + e.what());
    }
    Traced out;
    out.window_exit = tr.terminal == Terminal::Stopped;
    out.table.table = resample(g, opt.resolution);
    const PlanePoint end = tr.back();
    out.table.above_window_right =
        out.window_exit && !g.sign_change && g.direction > 0 && end.v > w.v_max;
    return out;
}

// Where the upper flow leaves W+: its F1 = 0 crossing, the window exit, or
// the fixed point bar z_c when it converges there without crossing.
PlanePoint exit_point(const Traced& up, PlanePoint zbar) {
    if (up.table.table.sign_change || up.window_exit) return up.table.table.far_end();
    return zbar;
}

// min(l1(u), f_L(u)), falling back to l1 where f_L is undefined
double l1_min_fL(const FlowParams& fp, double u) {
    const double l1 = ell_1(fp, u);
    const double den = fp.p - 1.0 + fp.p * fp.beta * u + fp.beta * fp.lambda_p;
    if (!(den > 0.0)) return l1;
    return std::min(l1, f_L(fp, u));
}

// boundary comparisons absorb rounding at the fixed points, which sit on
// several curves at once
double slack(double x) { return 1e-12 * (1.0 + std::abs(x)); }

bool allowed(const std::string& from, const std::string& to) {
    if (from == "outside" || to == "outside" || from == "A0") return true;
    if (from == "A4") return to == "A2";
    if (from == "A3") return to == "A0" || to == "A1" || to == "A2";
    if (from == "A2") return to == "A0" || to == "A1";
    if (from == "A1") return to == "A0";
    return false;
}

}  // namespace

std::string to_string(Region r) {
    switch (r) {
        case Region::A0: return "A0";
        case Region::A1: return "A1";
        case Region::A2: return "A2";
        case Region::A3: return "A3";
        case Region::A4: return "A4";
    }
    return "?";
}

std::optional<double> BoundaryTable::at(double u) const {
    if (table.empty()) return std::nullopt;
    if (auto v = table.at(u)) return v;
    if (above_window_right && u > table.u_hi()) return kInf;
    return std::nullopt;
}

PhaseGeometry PhaseGeometry::build(const FlowParams& fp, const Window& w,
                                   const GeometryOptions& opt) {
    if (!(opt.resolution > 0.0) || !(opt.flow_step > 0.0) || !(opt.flow_horizon > 0.0))
        throw ArgumentError("geometry options must be positive");
    if (!(w.u_min < w.u_max) || !(w.v_min < w.v_max)) throw ArgumentError("empty window");
    PhaseGeometry g;
    g.fp_ = fp;
    g.window_ = w;
    g.opt_ = opt;
    g.uc_ = u_c_value(fp);
    g.ubar_ = bar_u_c_value(fp);
    const PlanePoint zc = g.zc();
    if (!w.contains(zc.u, zc.v)) {
        std::ostringstream msg;
        msg << "window [" << w.u_min << ", " << w.u_max << "] x [" << w.v_min << ", " << w.v_max
            << "] does not contain z_c = (" << zc.u << ", " << zc.v << ")";
        throw ArgumentError(msg.str());
    }

    Traced up = trace(fp, FlowKind::Upper, zc, w, opt, "upper boundary from z_c");
    g.upper_ = up.table;
    if (up.window_exit) g.window_limited_ = true;
    if (g.finite_bar()) {
        const auto zb = *g.zbar();
        if (!w.contains(zb.u, zb.v)) throw ArgumentError("window does not contain bar z_c");
        const PlanePoint seed = exit_point(up, zb);
        Traced lo = trace(fp, FlowKind::Lower, seed, w, opt, "lower boundary of A0");
        if (lo.window_exit) g.window_limited_ = true;
        g.lower_ = lo.table;
    } else {
        // f_L tabulated on the upper boundary's grid
        BoundaryTable t;
        t.table.direction = 1;
        t.table.u = g.upper_.table.u;
        t.table.v.reserve(t.table.u.size());
        for (double u : t.table.u) t.table.v.push_back(f_L(fp, u));
        g.lower_ = std::move(t);
    }
    return g;
}

std::optional<PlanePoint> PhaseGeometry::zbar() const {
    if (!finite_bar()) return std::nullopt;
    return PlanePoint{ubar_, ell_1(fp_, ubar_)};
}

std::optional<double> PhaseGeometry::lower_at(double u) const {
    if (!upper_.at(u)) return std::nullopt;
    if (!finite_bar()) return f_L(fp_, u);
    if (auto l = lower_.table.at(u)) return std::min(*l, ell_1(fp_, u));
    return ell_1(fp_, u);
}

bool PhaseGeometry::in_A0(double u, double v) const {
    if (!window_.contains(u, v)) return false;
    const auto up = upper_.at(u);
    if (!up || v > *up) return false;
    const auto lo = lower_at(u);
    return lo && v >= *lo - slack(*lo);
}

Region PhaseGeometry::classify(double u, double v) const {
    if (!window_.contains(u, v)) {
        std::ostringstream msg;
        msg << "(" << u << ", " << v << ") lies outside the window";
        throw OutsideWindowError(msg.str());
    }
    if (u < 0.0) return Region::A4;
    if (in_A0(u, v)) return Region::A0;
    if (v <= std::min(ell_1(fp_, u), f_L(fp_, u))) return Region::A3;
    if (v > ell_1(fp_, u)) return Region::A2;
    return Region::A1;
}

bool PhaseGeometry::in_A0_delta(double delta, double u, double v) const {
    if (!window_.contains(u, v)) return false;
    if (in_A0(u, v)) return true;
    const PlanePoint zc = this->zc();
    if (std::max(std::abs(u - zc.u), std::abs(v - zc.v)) <= delta) return true;
    if (auto zb = zbar()) return std::max(std::abs(u - zb->u), std::abs(v - zb->v)) <= delta;
    return false;
}

AbsorbingSet PhaseGeometry::absorbing(double epsilon) const { return AbsorbingSet(*this, epsilon); }

AbsorbingSet::AbsorbingSet(const PhaseGeometry& g, double epsilon)
    : fp_(g.params()), window_(g.window()), uc_(g.u_c()), ubar_(g.bar_u_c()), eps_(epsilon) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    eps_c_ = epsilon * std::min(1.0, fp_.beta / fp_.p);
    const PlanePoint ze{uc_ - eps_c_, ell_1(fp_, uc_ - eps_c_)};
    if (!window_.contains(ze.u, ze.v)) throw ArgumentError("epsilon too large for the window");
    Traced up = trace(fp_, FlowKind::Upper, ze, window_, g.options(), "upper boundary from z(eps)");
    upper_ = up.table;
    if (std::isfinite(ubar_)) {
        const PlanePoint crossing = exit_point(up, {ubar_, ell_1(fp_, ubar_)});
        const PlanePoint zbe{ubar_ + eps_c_, ell_1(fp_, ubar_ + eps_c_)};
        const PlanePoint seed = crossing.u >= zbe.u ? crossing : zbe;
        lower_ = trace(fp_, FlowKind::Lower, seed, window_, g.options(), "lower boundary from the eps seed")
                     .table;
    }
}

bool AbsorbingSet::contains(double u, double v) const {
    if (!window_.contains(u, v)) return false;
    const double e = eps_c_;
    const double f1 = F1(fp_, u, v);
    const double f1_tol = slack(fp_.p * std::abs(u) + fp_.beta * std::abs(v));
    if (std::abs(u - uc_) <= e && v >= ell_1(fp_, uc_ - e) && v <= ell_1(fp_, uc_ + e) &&
        f1 <= f1_tol)
        return true;
    if (std::isfinite(ubar_) && std::abs(u - ubar_) <= e && v >= ell_1(fp_, ubar_ - e) &&
        v <= ell_1(fp_, ubar_ + e) && f1 >= -f1_tol)
        return true;
    const auto up = upper_.at(u);
    if (!up || v > *up) return false;
    double lo;
    if (std::isfinite(ubar_)) {
        const auto l = lower_.table.at(u);
        lo = l ? std::min(*l, ell_1(fp_, u)) : ell_1(fp_, u);
    } else {
        lo = l1_min_fL(fp_, u);
    }
    return v >= lo - slack(lo);
}

bool in_absorbing(const PhaseGeometry& g, double epsilon, double u, double v) {
    return AbsorbingSet(g, epsilon).contains(u, v);
}

double calibrate_delta(const PhaseGeometry& g, const AbsorbingSet& a, int grid) {
    if (grid < 2) throw ArgumentError("grid must be at least 2");
    const Window& w = g.window();
    std::vector<PlanePoint> centers{g.zc()};
    if (auto zb = g.zbar()) centers.push_back(*zb);
    const double n = grid - 1;
    auto ok = [&](double delta) {
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const double u = w.u_min + (w.u_max - w.u_min) * i / n;
                const double v = w.v_min + (w.v_max - w.v_min) * j / n;
                if (g.in_A0_delta(delta, u, v) && !a.contains(u, v)) return false;
            }
        for (const PlanePoint& c : centers)
            for (int i = 0; i < grid; ++i)
                for (int j = 0; j < grid; ++j) {
                    const double u = c.u - delta + 2.0 * delta * i / n;
                    const double v = c.v - delta + 2.0 * delta * j / n;
                    if (g.in_A0_delta(delta, u, v) && !a.contains(u, v)) return false;
                }
        return true;
    };
    double lo = 0.0, hi = a.construction_epsilon();
    if (!ok(lo)) return 0.0;
    if (ok(hi)) return hi;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

PortraitReport verify_portrait(const PhaseGeometry& g, const PlaneTrajectory& tr,
                               const AbsorbingSet& absorbing, double delta) {
    PortraitReport rep;
    if (tr.size() == 0) return rep;
    const Window& w = g.window();
    auto label = [&](double u, double v) -> std::string {
        if (!w.contains(u, v)) return "outside";
        return to_string(g.classify(u, v));
    };

    std::string cur = label(tr.u[0], tr.v[0]);
    rep.transitions.push_back({tr.t[0], cur});
    if (cur == "outside") rep.left_window = true;
    bool entered = absorbing.contains(tr.u[0], tr.v[0]);
    bool inside = entered;

    constexpr int kSub = 32;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const std::string next = label(tr.u[i], tr.v[i]);
        if (next != cur) {
            // walk the segment to pick up regions crossed between samples
            for (int s = 1; s <= kSub; ++s) {
                const double a = static_cast<double>(s) / kSub;
                const double t = tr.t[i - 1] + a * (tr.t[i] - tr.t[i - 1]);
                const std::string l =
                    s == kSub ? next
                              : label(tr.u[i - 1] + a * (tr.u[i] - tr.u[i - 1]),
                                      tr.v[i - 1] + a * (tr.v[i] - tr.v[i - 1]));
                if (l == cur) continue;
                if (!allowed(cur, l)) rep.violations.push_back({t, cur, l, "arrow"});
                if (l == "outside") rep.left_window = true;
                rep.transitions.push_back({t, l});
                cur = l;
            }
        }
        const bool in = absorbing.contains(tr.u[i], tr.v[i]);
        if (in) entered = true;
        if (entered && inside && !in && w.contains(tr.u[i], tr.v[i]))
            rep.violations.push_back({tr.t[i], "absorbing", next, "absorbing-exit"});
        inside = in;
    }
    rep.tau_A0delta =
        hitting_time(tr, [&](double u, double v) { return g.in_A0_delta(delta, u, v); });
    rep.tau_absorbing =
        hitting_time(tr, [&](double u, double v) { return absorbing.contains(u, v); });
    return rep;
}

}  // namespace pspin
