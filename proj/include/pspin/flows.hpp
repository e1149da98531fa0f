#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pspin {

// Ground-state densities E_{0,p}; E_{0,1} = 1 and E_{0,2} = sqrt(2) are built in.
using E0Table = std::map<int, double>;

double e0_lookup(int p, const E0Table& extra = {});

// sqrt(p(p-1)) (sqrt(2) + E_{0,p-2})
double lambda_p_default(int p, const E0Table& extra = {});

struct FlowParams {
    int p = 3;
    double beta = 1.0;
    double lambda_p = 0.0;
    E0Table e0;

    // Lambda from the E0 table, with the sanity gate lambda >= 2 sqrt(p(p-1)).
    static FlowParams from_table(int p, double beta, const E0Table& extra = {});
    // Explicit lambda (any positive value).
    static FlowParams with_lambda(int p, double beta, double lambda_p);
};

double F1(const FlowParams& fp, double u, double v);
double F2_L(const FlowParams& fp, double u, double v);
double F2_U(const FlowParams& fp, double u, double v);
double F2_full(const FlowParams& fp, double u, double v, double w);

double u_c_value(const FlowParams& fp);
// +infinity when beta * lambda_p >= p - 1
double bar_u_c_value(const FlowParams& fp);

double f_L(const FlowParams& fp, double u);
double f_U(const FlowParams& fp, double u);
double ell_1(const FlowParams& fp, double u);

struct PlanePoint {
    double u = 0.0;
    double v = 0.0;
};

inline PlanePoint z_c(const FlowParams& fp) {
    const double uc = u_c_value(fp);
    return {uc, ell_1(fp, uc)};
}

enum class FlowKind { Lower, Upper };

enum class Terminal { Horizon, Converged, DomainExit, BlowUp, Stopped };

std::string to_string(Terminal t);
std::string to_string(FlowKind k);

struct PlaneTrajectory {
    std::vector<double> t, u, v;
    Terminal terminal = Terminal::Horizon;
    double step = 0.0;

    std::size_t size() const { return t.size(); }
    PlanePoint point(std::size_t i) const { return {u[i], v[i]}; }
    PlanePoint back() const { return {u.back(), v.back()}; }
    // Linear interpolation in time; clamps to the ends.
    PlanePoint at(double time) const;
};

using Field = std::function<PlanePoint(double t, PlanePoint z)>;
using StopRule = std::function<bool(PlanePoint z)>;

struct IntegrateOptions {
    double converge_tol = 1e-10;   // stop when |field| drops below this
    double blow_up = 1e6;          // stop when |point| exceeds this
    StopRule stop;                 // optional extra stopping rule
};

// Classical fixed-step RK4 with the terminal rules of integrate_flow.
PlaneTrajectory integrate_field(const Field& f, PlanePoint init, double step, double horizon,
                                const IntegrateOptions& opt = {});

PlaneTrajectory integrate_flow(const FlowParams& fp, FlowKind kind, PlanePoint init,
                               double step, double horizon, const IntegrateOptions& opt = {});

// Monotone table v = gamma(u) on [u_lo, u_hi].
struct GraphTable {
    std::vector<double> u, v;  // u strictly increasing
    int direction = 0;         // +1: trajectory moved right, -1: left
    bool sign_change = false;  // domain ended at the first F1 sign change

    bool empty() const { return u.empty(); }
    double u_lo() const { return u.front(); }
    double u_hi() const { return u.back(); }
    std::optional<double> at(double uq) const;
    // The end of the domain the trajectory was heading toward.
    PlanePoint far_end() const;
};

enum class GraphStart {
    // Exact bounding flow: a start on the F1 = 0 line is accepted whenever
    // the flow leaves it.
    ExactFlow,
    // Comparison subject: starts on F1 = 0 with u in [u_c, bar u_c] are
    // degenerate.
    Subject,
};

GraphTable graph_of_flow(const PlaneTrajectory& tr, const FlowParams& fp,
                         GraphStart rule = GraphStart::ExactFlow);

using Predicate = std::function<bool(double u, double v)>;

// First time the predicate holds, refined by bisection on the segment
// between samples.
std::optional<double> hitting_time(const PlaneTrajectory& tr, const Predicate& pred);

}  // namespace pspin
