#include "pspin/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pspin/errors.hpp"

namespace pspin {

namespace {

// Average of samples f[b..e] over time, Simpson's rule on an even number of
// uniform intervals, trapezoid otherwise.
double path_average(const std::vector<double>& t, const std::vector<double>& f, std::size_t b,
                    std::size_t e) {
    const std::size_t m = e - b;
    const double span = t[e] - t[b];
    const double dt = span / static_cast<double>(m);
    bool uniform = m % 2 == 0;
    for (std::size_t i = b; uniform && i < e; ++i)
        uniform = std::abs(t[i + 1] - t[i] - dt) <= 1e-9 * dt;
    double s = 0.0;
    if (uniform) {
        s = f[b] + f[e];
        for (std::size_t i = b + 1; i < e; ++i) s += ((i - b) % 2 ? 4.0 : 2.0) * f[i];
        s *= dt / 3.0;
    } else {
        for (std::size_t i = b; i < e; ++i) s += 0.5 * (f[i] + f[i + 1]) * (t[i + 1] - t[i]);
    }
    return s / span;
}

bool encloses(const Domain& outer, const Domain& inner) {
    const double slack = 1e-9 * (1.0 + std::abs(outer.lo) + std::abs(outer.hi));
    return inner.lo >= outer.lo - slack && inner.hi <= outer.hi + slack;
}

Domain domain_of(const GraphTable& g) { return {g.u_lo(), g.u_hi()}; }

}  // namespace

ConditionIReport condition_I_check(const FlowParams& fp, const TrajectoryRecord& rec,
                                   const ConditionIOptions& opt) {
    if (opt.window < 3) throw ArgumentError("window must hold at least 3 samples");
    if (rec.size() < 3 * opt.window) {
        std::ostringstream msg;
        msg << "record has " << rec.size() << " samples, need at least " << 3 * opt.window;
        throw ArgumentError(msg.str());
    }
    ConditionIReport rep;
    rep.k_sigma = opt.k_sigma;
    rep.abs_tol = opt.abs_tol;
    rep.discretization_tol = opt.c_h * rec.config.step;

    const std::size_t n = rec.size();
    std::vector<double> f1(n), f2l(n), f2u(n);
    for (std::size_t i = 0; i < n; ++i) {
        f1[i] = F1(fp, rec.u[i], rec.v[i]);
        f2l[i] = F2_L(fp, rec.u[i], rec.v[i]);
        f2u[i] = F2_U(fp, rec.u[i], rec.v[i]);
    }

    std::size_t good = 0;
    for (const DriftEstimate& d : empirical_drift(rec, opt.window, opt.window - 1)) {
        ConditionIWindow w;
        w.t_begin = d.t_begin;
        w.t_end = d.t_end;
        w.du_dt = d.du_dt;
        w.dv_dt = d.dv_dt;
        w.se_u = std::isfinite(d.se_u) ? d.se_u : 0.0;
        w.se_v = std::isfinite(d.se_v) ? d.se_v : 0.0;
        w.F1 = path_average(rec.t, f1, d.i_begin, d.i_end);
        w.F2L = path_average(rec.t, f2l, d.i_begin, d.i_end);
        w.F2U = path_average(rec.t, f2u, d.i_begin, d.i_end);
        w.tol_u = opt.k_sigma * w.se_u + opt.abs_tol + rep.discretization_tol;
        w.tol_v = opt.k_sigma * w.se_v + opt.abs_tol + rep.discretization_tol;
        w.excursion_u = std::abs(w.du_dt - w.F1);
        w.excursion_v = std::max({w.F2L - w.dv_dt, w.dv_dt - w.F2U, 0.0});
        w.ok = w.excursion_u <= w.tol_u && w.excursion_v <= w.tol_v;
        if (w.ok) ++good;
        rep.worst_excursion =
            std::max({rep.worst_excursion, w.excursion_u - w.tol_u, w.excursion_v - w.tol_v});
        rep.windows.push_back(w);
    }
    rep.fraction_ok = static_cast<double>(good) / static_cast<double>(rep.windows.size());
    return rep;
}

TrajectoryRecord as_record(const PlaneTrajectory& tr) {
    TrajectoryRecord rec;
    rec.t = tr.t;
    rec.u = tr.u;
    rec.v = tr.v;
    rec.config.step = tr.step;
    return rec;
}

PlaneTrajectory synthesize_condition_I(const FlowParams& fp, PlanePoint init, const Control& w,
                                       double step, double horizon) {
    const Field f = [&](double t, PlanePoint z) {
        const double c = w(t, z.u, z.v);
        const double bound = fp.lambda_p * z.v;
        if (!(std::abs(c) <= bound * (1.0 + 1e-12) + 1e-300)) {
            std::ostringstream msg;
            msg << "control " << c << " exceeds lambda_p v = " << bound << " at t = " << t;
            throw ControlBoundViolation(msg.str(), t);
        }
        return PlanePoint{F1(fp, z.u, z.v), F2_full(fp, z.u, z.v, c)};
    };
    return integrate_field(f, init, step, horizon);
}

ConfinementReport graph_confinement_check(const FlowParams& fp, const PlaneTrajectory& subject,
                                          double tol, double bound_horizon) {
    if (subject.size() < 2) throw ArgumentError("subject trajectory too short");
    if (!(subject.step > 0.0)) throw ArgumentError("subject has no step");
    const GraphTable gs = graph_of_flow(subject, fp, GraphStart::Subject);
    const PlanePoint init = subject.point(0);
    const double horizon = bound_horizon > 0.0 ? bound_horizon : subject.t.back();
    const GraphTable gl =
        graph_of_flow(integrate_flow(fp, FlowKind::Lower, init, subject.step, horizon), fp);
    const GraphTable gu =
        graph_of_flow(integrate_flow(fp, FlowKind::Upper, init, subject.step, horizon), fp);

    ConfinementReport rep;
    rep.side = gs.direction;
    rep.tol = tol;
    rep.lower = domain_of(gl);
    rep.subject = domain_of(gs);
    rep.upper = domain_of(gu);
    const double lo = std::max({gl.u_lo(), gs.u_lo(), gu.u_lo()});
    const double hi = std::min({gl.u_hi(), gs.u_hi(), gu.u_hi()});
    for (std::size_t i = 0; i < gs.u.size(); ++i) {
        const double u = gs.u[i];
        if (u < lo || u > hi) continue;
        const double v = gs.v[i];
        const double excess = std::max({*gl.at(u) - v, v - *gu.at(u), 0.0});
        ++rep.checked;
        if (excess > tol) ++rep.violations;
        if (excess > rep.max_violation) {
            rep.max_violation = excess;
            rep.worst_u = u;
        }
    }
    if (gl.sign_change && gs.sign_change && gu.sign_change) {
        if (rep.side > 0)
            rep.chain_holds = encloses(rep.subject, rep.lower) && encloses(rep.upper, rep.subject);
        else
            rep.chain_holds = encloses(rep.subject, rep.upper) && encloses(rep.lower, rep.subject);
    }
    return rep;
}

bool in_V_minus(const FlowParams& fp, double u, double v) {
    return v < 2.0 * fp.p * u / fp.beta;
}

RectangleReport rectangle_check(const FlowParams& fp, const PlaneTrajectory& subject, double tol) {
    if (subject.size() < 2) throw ArgumentError("subject trajectory too short");
    if (!(subject.step > 0.0)) throw ArgumentError("subject has no step");
    const PlanePoint init = subject.point(0);
    if (!in_V_minus(fp, init.u, init.v)) {
        std::ostringstream msg;
        msg << "start (" << init.u << ", " << init.v
            << ") is outside V-; the comparison premise does not hold there";
        throw DomainError(msg.str());
    }
    const double h = subject.step;
    for (std::size_t k = 0; k < subject.size(); ++k)
        if (std::abs(subject.t[k] - static_cast<double>(k) * h) > 1e-9 * (1.0 + subject.t[k]))
            throw ArgumentError("subject is not sampled on the grid k * step");
    const double horizon = std::max(subject.t.back(), h);
    const PlaneTrajectory lo = integrate_flow(fp, FlowKind::Lower, init, h, horizon);
    const PlaneTrajectory up = integrate_flow(fp, FlowKind::Upper, init, h, horizon);
    // converged flows are stationary past their last sample
    auto sample = [](const PlaneTrajectory& tr, std::size_t k) {
        return k < tr.size() ? tr.point(k) : tr.back();
    };
    const bool lo_frozen = lo.terminal == Terminal::Converged;
    const bool up_frozen = up.terminal == Terminal::Converged;

    RectangleReport rep;
    rep.tol = tol;
    for (std::size_t k = 0; k < subject.size(); ++k) {
        if ((k >= lo.size() && !lo_frozen) || (k >= up.size() && !up_frozen)) break;
        const PlanePoint a = sample(lo, k), b = sample(up, k), s = subject.point(k);
        if (!in_V_minus(fp, a.u, b.v)) {
            rep.tau_box = subject.t[k];
            break;
        }
        const double excess = std::max({a.u - s.u, s.u - b.u, a.v - s.v, s.v - b.v, 0.0});
        ++rep.checked;
        rep.max_violation = std::max(rep.max_violation, excess);
        if (excess > tol && !rep.first_violation_t) rep.first_violation_t = subject.t[k];
    }
    return rep;
}

PlaneTrajectory mean_path(const std::vector<TrajectoryRecord>& recs) {
    if (recs.empty()) throw ArgumentError("no records to average");
    const std::size_t n = recs.front().size();
    for (const auto& r : recs)
        if (r.size() != n) throw ArgumentError("records differ in length");
    if (n < 2) throw ArgumentError("records too short");
    PlaneTrajectory out;
    out.t = recs.front().t;
    out.u.assign(n, 0.0);
    out.v.assign(n, 0.0);
    for (const auto& r : recs)
        for (std::size_t i = 0; i < n; ++i) {
            out.u[i] += r.u[i];
            out.v[i] += r.v[i];
        }
    const double k = static_cast<double>(recs.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.u[i] /= k;
        out.v[i] /= k;
    }
    out.step = out.t[1] - out.t[0];
    return out;
}

}  // namespace pspin
