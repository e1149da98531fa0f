#pragma once

#include <cstdint>
#include <vector>

#include "pspin/kernels.hpp"
#include "pspin/tensor.hpp"

namespace pspin {

using Vector = std::vector<double>;

// Point on the sphere of radius sqrt(N).
class SpherePoint {
public:
    SpherePoint() = default;
    // Throws DomainError unless |sum x^2 - N| <= tol * N.
    explicit SpherePoint(Vector x, double tol = 1e-8);
    // Rescales a nonzero vector onto the sphere.
    static SpherePoint normalized(Vector x);

    std::size_t dim() const { return x_.size(); }
    const Vector& coords() const { return x_; }
    const double* data() const { return x_.data(); }
    double operator[](std::size_t i) const { return x_[i]; }

private:
    Vector x_;
};

struct ObservableTriple {
    double u = 0.0;  // -H/N
    double v = 0.0;  // |grad H|^2 / N
    double w = 0.0;  // G(grad H, grad H) / N
};

// Spherical p-spin model: raw couplings plus the packed copy the fast
// kernels read.
class Model {
public:
    explicit Model(CouplingTensor couplings);

    int order() const { return raw_.order; }
    std::size_t dim() const { return raw_.dim; }
    double scale() const { return scale_; }  // N^{-(p-1)/2}
    const CouplingTensor& couplings() const { return raw_; }
    const kernels::PackedSymmetric& packed() const { return packed_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

private:
    CouplingTensor raw_;
    kernels::PackedSymmetric packed_;
    double scale_ = 1.0;
    std::uint64_t fingerprint_ = 0;
};

Model sample_model(int order, std::size_t dim, std::uint64_t seed,
                   double budget_bytes = kDefaultMemoryBudget);

SpherePoint uniform_sphere_point(std::size_t dim, std::uint64_t seed);

Vector project_tangent(const SpherePoint& x, const Vector& y);

double energy(const Model& m, const SpherePoint& x);

// Gradient of the polynomial extension of H to R^N.
Vector euclidean_gradient(const Model& m, const SpherePoint& x);

// Tangential projection of the Euclidean gradient.
Vector spherical_gradient(const Model& m, const SpherePoint& x);

// Energy and spherical gradient from one contraction pass.
struct EnergyGradient {
    double energy = 0.0;
    Vector grad;  // spherical
};
EnergyGradient energy_and_gradient(const Model& m, const SpherePoint& x);

// Euclidean Hessian applied to tangent vectors X, Y.
double hessian_form(const Model& m, const SpherePoint& x, const Vector& X, const Vector& Y);

// Dense Euclidean Hessian (row-major N x N). Subject to the memory budget.
Vector euclidean_hessian(const Model& m, const SpherePoint& x,
                         double budget_bytes = kDefaultMemoryBudget);

// Euclidean Hessian restricted to the tangent space, as a dense N x N matrix
// P H P (x is in its kernel).
Vector tangent_hessian(const Model& m, const SpherePoint& x,
                       double budget_bytes = kDefaultMemoryBudget);

double trace_G(const Model& m, const SpherePoint& x);
// Same, reusing an energy value already computed at x.
double trace_G(const Model& m, const SpherePoint& x, double H);
double trace_G2(const Model& m, const SpherePoint& x);

// Spherical gradient of x -> tr G(x).
Vector grad_trace_G(const Model& m, const SpherePoint& x);

// Laplace-Beltrami operator of H on the sphere of radius sqrt(N).
double laplacian(const Model& m, const SpherePoint& x);

ObservableTriple observables(const Model& m, const SpherePoint& x);

// Given H and the spherical gradient already computed at x.
ObservableTriple observables_from(const Model& m, const SpherePoint& x, double H,
                                  const Vector& grad);

}  // namespace pspin
