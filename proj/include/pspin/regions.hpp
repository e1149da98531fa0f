#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pspin/flows.hpp"

namespace pspin {

struct Window {
    double u_min = -4.0, u_max = 4.0;
    double v_min = 0.0, v_max = 40.0;

    bool contains(double u, double v) const {
        return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
    }
};

enum class Region { A0, A1, A2, A3, A4 };

std::string to_string(Region r);

struct GeometryOptions {
    double resolution = 1e-3;  // u-grid spacing of the cached boundary tables
    double flow_step = 1e-3;
    double flow_horizon = 400.0;
};

// A boundary graph on a uniform u-grid. Past the right end it may continue
// above the window (the generating flow left W through its top edge).
struct BoundaryTable {
    GraphTable table;
    bool above_window_right = false;

    bool defined() const { return !table.empty(); }
    // value, +inf past a top exit, nullopt where undefined
    std::optional<double> at(double u) const;
};

class AbsorbingSet;

class PhaseGeometry {
public:
    static PhaseGeometry build(const FlowParams& fp, const Window& w = {},
                               const GeometryOptions& opt = {});

    const FlowParams& params() const { return fp_; }
    const Window& window() const { return window_; }
    const GeometryOptions& options() const { return opt_; }
    double u_c() const { return uc_; }
    double bar_u_c() const { return ubar_; }  // may be +inf
    bool finite_bar() const { return std::isfinite(ubar_); }
    PlanePoint zc() const { return {uc_, ell_1(fp_, uc_)}; }
    std::optional<PlanePoint> zbar() const;
    // some boundary flow was cut by the window
    bool window_limited() const { return window_limited_; }

    const BoundaryTable& upper() const { return upper_; }
    // finite bar u_c only; otherwise the lower boundary is f_L
    const BoundaryTable& lower_table() const { return lower_; }

    std::optional<double> upper_at(double u) const { return upper_.at(u); }
    std::optional<double> lower_at(double u) const;

    bool in_A0(double u, double v) const;
    Region classify(double u, double v) const;
    bool in_A0_delta(double delta, double u, double v) const;

    AbsorbingSet absorbing(double epsilon) const;

private:
    FlowParams fp_;
    Window window_;
    GeometryOptions opt_;
    double uc_ = 0.0, ubar_ = 0.0;
    BoundaryTable upper_, lower_;
    bool window_limited_ = false;
};

// The absorbing enlargement of A0 for a given epsilon. The construction runs
// at eps' = eps * min(1, beta/p) so that its boxes stay inside
// [u_c - eps, inf) x [v_c - eps, inf).
class AbsorbingSet {
public:
    AbsorbingSet(const PhaseGeometry& g, double epsilon);

    double epsilon() const { return eps_; }
    double construction_epsilon() const { return eps_c_; }
    bool contains(double u, double v) const;
    const BoundaryTable& upper() const { return upper_; }
    const BoundaryTable& lower_table() const { return lower_; }

private:
    FlowParams fp_;
    Window window_;
    double uc_, ubar_;
    double eps_, eps_c_;
    BoundaryTable upper_, lower_;
};

bool in_absorbing(const PhaseGeometry& g, double epsilon, double u, double v);

// Largest delta (binary search) with A_{0,delta} inside the absorbing set on
// a grid of `grid` x `grid` points over W plus the same over each delta-ball.
double calibrate_delta(const PhaseGeometry& g, const AbsorbingSet& a, int grid = 100);

struct Transition {
    double t = 0.0;
    std::string region;  // "A0".."A4" or "outside"
};

struct Violation {
    double t = 0.0;
    std::string from, to, rule;
};

struct PortraitReport {
    std::vector<Transition> transitions;
    std::optional<double> tau_A0delta;
    std::optional<double> tau_absorbing;
    std::vector<Violation> violations;
    bool left_window = false;
};

PortraitReport verify_portrait(const PhaseGeometry& g, const PlaneTrajectory& tr,
                               const AbsorbingSet& absorbing, double delta);

}  // namespace pspin
