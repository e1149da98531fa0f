#pragma once

#include <cstdint>
#include <vector>

#include "pspin/model.hpp"
#include "pspin/rng.hpp"

namespace pspin {

struct LangevinConfig {
    double beta = 1.0;
    double step = 1e-3;
    double horizon = 1.0;
    long record_stride = 1;
    std::uint64_t seed = 0;
    // Test hooks. noise_scale = 0 turns the step into projected gradient
    // descent. noise_substeps = k draws k normal vectors per step and uses
    // their normalized sum, so a run at step k*h sees the same Brownian path
    // as a run at step h.
    double noise_scale = 1.0;
    int noise_substeps = 1;

    void validate() const;
    long steps() const;
};

struct TrajectoryRecord {
    std::vector<double> t, u, v, w, g1;
    LangevinConfig config;
    int order = 0;
    std::size_t dim = 0;
    std::uint64_t model_fingerprint = 0;
    double max_constraint_error = 0.0;  // after renormalization, relative
    Vector final_state;

    std::size_t size() const { return t.size(); }
};

// (Id - x x^T/N) xi sqrt(h), xi standard normal.
Vector brownian_increment(const SpherePoint& x, double h, Rng& rng);

SpherePoint langevin_step(const Model& m, const SpherePoint& x, const LangevinConfig& cfg,
                          Rng& rng);

TrajectoryRecord simulate(const Model& m, const SpherePoint& x0, const LangevinConfig& cfg);

SpherePoint uniform_start(std::size_t dim, std::uint64_t seed);

struct CriticalStart {
    SpherePoint x;
    double u = 0.0;
    double v = 0.0;
    long iterations = 0;
};

// Projected gradient descent on H with backtracking until v < delta; throws
// TargetRegionMiss if the end point has u <= eta.
CriticalStart near_critical_start(const Model& m, double eta, double delta, std::uint64_t seed,
                                  long max_iters = 20000);

// Same search with the sign flipped: ascent on H, ending near a critical
// point high in the landscape (u < 0).
CriticalStart adversarial_start(const Model& m, double delta, std::uint64_t seed,
                                long max_iters = 20000);

struct DriftEstimate {
    double t_begin = 0.0, t_end = 0.0;
    std::size_t i_begin = 0, i_end = 0;  // inclusive sample range
    double du_dt = 0.0, dv_dt = 0.0;
    double se_u = 0.0, se_v = 0.0;
};

// Slopes of u and v over windows of `window` samples advanced by `stride`.
// The slope is the end-to-end difference quotient; its standard error comes
// from the spread of the per-sample increments inside the window, which is
// the right noise model for a diffusion. Windows of two samples have no
// spread estimate and report NaN errors.
std::vector<DriftEstimate> empirical_drift(const TrajectoryRecord& rec, std::size_t window,
                                           std::size_t stride = 0);

}  // namespace pspin
