#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pspin/dynamics.hpp"
#include "pspin/flows.hpp"

namespace pspin {

struct ConditionIOptions {
    std::size_t window = 101;  // samples per slope window
    double k_sigma = 3.0;
    double abs_tol = 0.0;
    double c_h = 1.0;  // discretization allowance is c_h * (integration step)
};

struct ConditionIWindow {
    double t_begin = 0.0, t_end = 0.0;
    double du_dt = 0.0, dv_dt = 0.0;
    double se_u = 0.0, se_v = 0.0;
    // path averages of the drifts over the window
    double F1 = 0.0, F2L = 0.0, F2U = 0.0;
    double tol_u = 0.0, tol_v = 0.0;
    double excursion_u = 0.0, excursion_v = 0.0;  // distance outside the band, before tolerance
    bool ok = false;
};

struct ConditionIReport {
    double fraction_ok = 0.0;
    double worst_excursion = 0.0;  // largest excursion beyond tolerance, >= 0
    double k_sigma = 0.0, abs_tol = 0.0, discretization_tol = 0.0;
    std::vector<ConditionIWindow> windows;
};

// The u-slope must match F1 and the v-slope must lie in [F2L, F2U], both up to
// k_sigma * se + abs_tol + c_h * h, with h the record's integration step.
ConditionIReport condition_I_check(const FlowParams& fp, const TrajectoryRecord& rec,
                                   const ConditionIOptions& opt = {});

// Plane path as a record with integration step `step` (w and g1 left empty).
TrajectoryRecord as_record(const PlaneTrajectory& tr);

using Control = std::function<double(double t, double u, double v)>;

// u' = F1(u, v), v' = F2(u, v, w(t, u, v)) with |w| <= lambda_p v enforced at
// every RK stage (ControlBoundViolation otherwise).
PlaneTrajectory synthesize_condition_I(const FlowParams& fp, PlanePoint init, const Control& w,
                                       double step, double horizon);

struct Domain {
    double lo = 0.0, hi = 0.0;
};

struct ConfinementReport {
    int side = 0;  // +1 start in W+, -1 start in W-
    double tol = 0.0;
    std::size_t checked = 0, violations = 0;
    double max_violation = 0.0;  // largest amount outside [gamma_L, gamma_U]
    std::optional<double> worst_u;
    Domain lower, subject, upper;
    // Dom(gamma_L) in Dom(gamma) in Dom(gamma_U) for W+ starts, reversed for
    // W-; undecided when a graph was cut by the horizon rather than by an
    // F1 sign change.
    std::optional<bool> chain_holds;

    double violation_fraction() const {
        return checked ? static_cast<double>(violations) / checked : 0.0;
    }
};

// Compares the subject's graph with the bounding-flow graphs from the same
// start at every subject sample inside the common domain. The bounding flows
// run with the subject's step over `bound_horizon` (default: the subject's).
ConfinementReport graph_confinement_check(const FlowParams& fp, const PlaneTrajectory& subject,
                                          double tol, double bound_horizon = 0.0);

struct RectangleReport {
    double tol = 0.0;
    std::optional<double> tau_box;  // corner process leaves V-
    std::size_t checked = 0;
    double max_violation = 0.0;
    std::optional<double> first_violation_t;
};

// v < 2 p u / beta
bool in_V_minus(const FlowParams& fp, double u, double v);

// A_L(t) <= subject(t) <= A_U(t) componentwise for sample times before the
// corner process (A_L^1, A_U^2) leaves V-. The subject must be sampled on
// t_k = k * step from a start inside V- (DomainError otherwise).
RectangleReport rectangle_check(const FlowParams& fp, const PlaneTrajectory& subject, double tol);

// Pointwise average of equally sampled records (u and v only).
PlaneTrajectory mean_path(const std::vector<TrajectoryRecord>& recs);

}  // namespace pspin
