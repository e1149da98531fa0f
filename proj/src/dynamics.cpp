#include "pspin/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pspin/errors.hpp"

namespace pspin {

namespace {

double sum_sq(const Vector& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}

// Rescale in place to radius sqrt(N); returns the relative constraint error
// left afterwards.
double renormalize(Vector& x) {
    const double n = static_cast<double>(x.size());
    const double f = std::sqrt(n / sum_sq(x));
    for (double& a : x) a *= f;
    return std::abs(sum_sq(x) - n) / n;
}

void fill_noise(Vector& xi, int substeps, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (substeps == 1) {
        for (double& a : xi) a = normal(rng);
        return;
    }
    std::fill(xi.begin(), xi.end(), 0.0);
    for (int s = 0; s < substeps; ++s)
        for (double& a : xi) a += normal(rng);
    const double f = 1.0 / std::sqrt(static_cast<double>(substeps));
    for (double& a : xi) a *= f;
}

// One Euler-Maruyama step given the spherical gradient at x. Writes into x.
void advance(Vector& x, const Vector& grad, Vector& xi, const LangevinConfig& cfg, Rng& rng,
             long step_index) {
    const std::size_t N = x.size();
    const double h = cfg.step;
    fill_noise(xi, cfg.noise_substeps, rng);
    double radial = 0.0;
    for (std::size_t i = 0; i < N; ++i) radial += xi[i] * x[i];
    radial /= static_cast<double>(N);
    const double sn = std::sqrt(2.0 * h) * cfg.noise_scale;
    const double bh = cfg.beta * h;
    for (std::size_t i = 0; i < N; ++i) x[i] += sn * (xi[i] - radial * x[i]) - bh * grad[i];
    for (double a : x)
        if (!std::isfinite(a)) {
            std::ostringstream msg;
            msg << "non-finite state at step " << step_index;
            throw SimulationDiverged(msg.str(), step_index);
        }
}

CriticalStart descend(const Model& m, double sign, double delta, std::uint64_t seed,
                      long max_iters) {
    // minimizes sign * H
    const double N = static_cast<double>(m.dim());
    SpherePoint x = uniform_start(m.dim(), seed);
    EnergyGradient cur = energy_and_gradient(m, x);
    double alpha = 0.1;
    long it = 0;
    auto v_of = [&](const EnergyGradient& e) { return sum_sq(e.grad) / N; };
    while (v_of(cur) >= delta) {
        if (it >= max_iters) {
            std::ostringstream msg;
            msg << "gradient search did not reach v < " << delta << " in " << max_iters
                << " iterations";
            throw NotConvergedError(msg.str(), -cur.energy / N, v_of(cur));
        }
        ++it;
        const double g2 = sum_sq(cur.grad);
        while (true) {
            Vector y = x.coords();
            for (std::size_t i = 0; i < y.size(); ++i) y[i] -= sign * alpha * cur.grad[i];
            SpherePoint cand = SpherePoint::normalized(std::move(y));
            EnergyGradient next = energy_and_gradient(m, cand);
            if (sign * next.energy <= sign * cur.energy - 1e-4 * alpha * g2) {
                x = std::move(cand);
                cur = std::move(next);
                alpha *= 1.5;
                break;
            }
            alpha *= 0.5;
            if (alpha < 1e-14) {
                std::ostringstream msg;
                msg << "line search stalled after " << it << " iterations";
                throw NotConvergedError(msg.str(), -cur.energy / N, v_of(cur));
            }
        }
    }
    CriticalStart out{x, -cur.energy / N, v_of(cur), it};
    return out;
}

}  // namespace

void LangevinConfig::validate() const {
    if (!(beta >= 0.0)) throw ArgumentError("beta must be nonnegative");
    if (!(step > 0.0)) throw ArgumentError("step must be positive");
    if (!(horizon > 0.0)) throw ArgumentError("horizon must be positive");
    if (step > horizon) throw ArgumentError("step exceeds horizon");
    if (step > 1e-2) throw ArgumentError("step above 1e-2 is refused");
    if (record_stride < 1) throw ArgumentError("record_stride must be at least 1");
    if (noise_substeps < 1) throw ArgumentError("noise_substeps must be at least 1");
    const double n = horizon / step;
    if (std::abs(n - std::round(n)) > 1e-9 * n)
        throw ArgumentError("horizon must be an integer multiple of step");
}

long LangevinConfig::steps() const { return std::lround(horizon / step); }

Vector brownian_increment(const SpherePoint& x, double h, Rng& rng) {
    if (!(h > 0.0)) throw ArgumentError("h must be positive");
    Vector xi(x.dim());
    fill_noise(xi, 1, rng);
    Vector out = project_tangent(x, xi);
    const double s = std::sqrt(h);
    for (double& a : out) a *= s;
    return out;
}

SpherePoint langevin_step(const Model& m, const SpherePoint& x, const LangevinConfig& cfg,
                          Rng& rng) {
    const EnergyGradient eg = energy_and_gradient(m, x);
    Vector y = x.coords();
    Vector xi(y.size());
    advance(y, eg.grad, xi, cfg, rng, 0);
    renormalize(y);
    return SpherePoint(std::move(y), 1e-12);
}

TrajectoryRecord simulate(const Model& m, const SpherePoint& x0, const LangevinConfig& cfg) {
    cfg.validate();
    if (x0.dim() != m.dim()) throw ArgumentError("start point has wrong dimension");
    const long steps = cfg.steps();
    const double N = static_cast<double>(m.dim());
    const double p = m.order();

    TrajectoryRecord rec;
    rec.config = cfg;
    rec.order = m.order();
    rec.dim = m.dim();
    rec.model_fingerprint = m.fingerprint();
    const std::size_t nrec = static_cast<std::size_t>(steps / cfg.record_stride) + 1;
    for (auto* s : {&rec.t, &rec.u, &rec.v, &rec.w, &rec.g1}) s->reserve(nrec);

    Rng rng(cfg.seed);
    Vector x = x0.coords();
    Vector xi(x.size());
    for (long k = 0;; ++k) {
        const SpherePoint xs(x, 1e-10);
        const EnergyGradient eg = energy_and_gradient(m, xs);
        if (k % cfg.record_stride == 0) {
            const ObservableTriple o = observables_from(m, xs, eg.energy, eg.grad);
            const double trG = trace_G(m, xs, eg.energy);
            rec.t.push_back(static_cast<double>(k) * cfg.step);
            rec.u.push_back(o.u);
            rec.v.push_back(o.v);
            rec.w.push_back(o.w);
            rec.g1.push_back((p * eg.energy / N + trG) / N);
        }
        if (k == steps) break;
        advance(x, eg.grad, xi, cfg, rng, k);
        const double err = renormalize(x);
        rec.max_constraint_error = std::max(rec.max_constraint_error, err);
        if (err > 1e-12) throw InvariantError("sphere constraint lost after renormalization");
    }
    rec.final_state = std::move(x);
    return rec;
}

SpherePoint uniform_start(std::size_t dim, std::uint64_t seed) {
    return uniform_sphere_point(dim, seed);
}

CriticalStart near_critical_start(const Model& m, double eta, double delta, std::uint64_t seed,
                                  long max_iters) {
    if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
    CriticalStart s = descend(m, 1.0, delta, seed, max_iters);
    if (s.u <= eta) {
        std::ostringstream msg;
        msg << "descent ended at u = " << s.u << " <= eta = " << eta;
        throw TargetRegionMiss(msg.str(), s.u, s.v);
    }
    return s;
}

CriticalStart adversarial_start(const Model& m, double delta, std::uint64_t seed,
                                long max_iters) {
    if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
    return descend(m, -1.0, delta, seed, max_iters);
}

std::vector<DriftEstimate> empirical_drift(const TrajectoryRecord& rec, std::size_t window,
                                           std::size_t stride) {
    if (window < 2) throw ArgumentError("window must hold at least 2 samples");
    if (window > rec.size()) throw ArgumentError("window exceeds record length");
    if (stride == 0) stride = window - 1;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<DriftEstimate> out;
    for (std::size_t b = 0; b + window <= rec.size(); b += stride) {
        const std::size_t e = b + window - 1;
        DriftEstimate d;
        d.i_begin = b;
        d.i_end = e;
        d.t_begin = rec.t[b];
        d.t_end = rec.t[e];
        const double span = d.t_end - d.t_begin;
        d.du_dt = (rec.u[e] - rec.u[b]) / span;
        d.dv_dt = (rec.v[e] - rec.v[b]) / span;
        const std::size_t m = window - 1;
        if (m < 2) {
            d.se_u = d.se_v = nan;
        } else {
            // regress increment rates on a constant, weighting by duration
            double ssu = 0.0, ssv = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const double dt = rec.t[i + 1] - rec.t[i];
                const double ru = (rec.u[i + 1] - rec.u[i]) / dt - d.du_dt;
                const double rv = (rec.v[i + 1] - rec.v[i]) / dt - d.dv_dt;
                ssu += dt * ru * ru;
                ssv += dt * rv * rv;
            }
            // diffusion-rate estimate sigma^2 = sum dt (r - slope)^2 / (m - 1);
            // the duration-weighted mean rate then has variance sigma^2 / span
            const double md = static_cast<double>(m);
            d.se_u = std::sqrt(ssu / (md - 1.0) / span);
            d.se_v = std::sqrt(ssv / (md - 1.0) / span);
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace pspin
