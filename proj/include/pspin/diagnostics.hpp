#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pspin/model.hpp"
#include "pspin/regions.hpp"

namespace pspin {

// Where a threshold comes from.
inline constexpr const char* kTheoryScale = "theory-scale";
inline constexpr const char* kDerivedOracle = "derived-oracle";
inline constexpr const char* kRepoCalibration = "repo-calibration";

struct StatReport {
    static constexpr std::size_t kSampleFloor = 10;

    std::string name;
    std::vector<double> values;
    std::size_t N = 0;
    int p = 0;
    double statistic = 0.0;
    double threshold = 0.0;
    std::optional<bool> pass;  // empty when the verdict is refused
    std::string provenance;
    std::string note;
};

struct OpNormResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> rayleigh;  // quotients of the squared matrix, per iteration
};

// Largest |eigenvalue| of a dense symmetric n x n matrix by power iteration
// on its square. Converged when the quotient changes by less than tol
// (relative).
OpNormResult op_norm_symmetric(const Vector& a, std::size_t n, int iters = 200,
                               double tol = 1e-8, std::uint64_t seed = 0);

OpNormResult op_norm_G(const Model& m, const SpherePoint& x, int iters = 200, double tol = 1e-8,
                       std::uint64_t seed = 0);

using ModelFactory = std::function<Model(int p, std::size_t N, std::uint64_t seed)>;

ModelFactory default_factory();

struct TraceStatistics {
    StatReport trace;           // tr G / sqrt(N)
    StatReport trace_sq;        // (tr G^2 - p(p-1)(N-1)) / sqrt(N)
    StatReport trace_sq_ratio;  // tr G^2 / N against p(p-1)
};

// Fresh (J, x) per sample. The squared trace is centered on its exact mean
// p(p-1)(N-1): G lives on the (N-1)-dimensional tangent space.
TraceStatistics trace_statistics(const ModelFactory& factory, int p, std::size_t N,
                                 std::size_t samples, std::uint64_t seed);

struct OpNormStatistics {
    StatReport mean_ratio;  // mean estimate against 2 sqrt(p(p-1))
    std::vector<OpNormResult> runs;
};

OpNormStatistics op_norm_statistics(const ModelFactory& factory, int p, std::size_t N,
                                    std::size_t samples, std::uint64_t seed, int iters = 500);

// max over samples of |Delta H + p H| / N for each N, checked against 5/sqrt(N)
// with a log-log slope <= -0.3.
StatReport laplacian_trend(const ModelFactory& factory, int p, const std::vector<std::size_t>& Ns,
                           std::size_t samples, std::uint64_t seed);

struct BochnerTerms {
    double H = 0.0;
    double grad_sq = 0.0;       // |grad H|^2
    double trace = 0.0;         // tr G
    double trace_sq = 0.0;      // tr G^2
    double grad_trace_dot = 0.0;  // <grad tr G, grad H>
    double half_lap_grad_sq = 0.0;  // (1/2) Delta |grad H|^2
    double A = 0.0;
    double residual = 0.0;  // (half_lap_grad_sq - A) / N
};

// p = 3 only. Uses the exact Ricci curvature (N-2)/N of the sphere of radius
// sqrt(N).
BochnerTerms bochner_residual(const Model& m, const SpherePoint& x);

struct SupNorms {
    StatReport energy;  // sup |H| / N against the window's u range
    StatReport grad;    // sup v against the window's v range
    StatReport op;      // sup ||G||_op against lambda_p
};

// Sampled lower bounds for the sup norms: random points followed by a short
// ascent on |H|. One-sided by construction. Refused below 100 samples.
SupNorms sampled_sup_norms(const Model& m, std::size_t samples, const Window& w, double lambda_p,
                           std::uint64_t seed, int ascent_steps = 20, std::size_t op_samples = 10);

}  // namespace pspin
