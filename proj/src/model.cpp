#include "pspin/model.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "pspin/errors.hpp"
#include "pspin/rng.hpp"

namespace pspin {

namespace {

double sum_sq(const Vector& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}

double dotv(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t hash_entries(const CouplingTensor& t) {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(t.order) * 1000003ULL + t.dim);
    for (double e : t.entries) {
        std::uint64_t bits;
        std::memcpy(&bits, &e, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

void require_dim(const Model& m, std::size_t n, const char* what) {
    if (m.dim() != n) {
        std::ostringstream msg;
        msg << what << " has dimension " << n << ", model has " << m.dim();
        throw ArgumentError(msg.str());
    }
}

void require_tangent(const SpherePoint& x, const Vector& X, const char* what) {
    if (X.size() != x.dim()) throw ArgumentError(std::string(what) + " has wrong dimension");
    const double n = std::sqrt(sum_sq(X));
    const double radial = std::abs(dotv(X, x.coords()));
    if (radial > 1e-6 * n * std::sqrt(static_cast<double>(x.dim())))
        throw InvariantError(std::string(what) + " is not tangent to the sphere at x");
}

}  // namespace

SpherePoint::SpherePoint(Vector x, double tol) : x_(std::move(x)) {
    const double n = static_cast<double>(x_.size());
    if (x_.empty() || std::abs(sum_sq(x_) - n) > tol * n)
        throw DomainError("point is not on the sphere of radius sqrt(N)");
}

SpherePoint SpherePoint::normalized(Vector x) {
    const double s = sum_sq(x);
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("cannot normalize a zero vector");
    const double f = std::sqrt(static_cast<double>(x.size()) / s);
    for (double& a : x) a *= f;
    return SpherePoint(std::move(x), 1e-10);
}

Model::Model(CouplingTensor couplings) : raw_(std::move(couplings)) {
    packed_ = kernels::PackedSymmetric::from_dense(raw_);
    scale_ = std::pow(static_cast<double>(raw_.dim), -0.5 * (raw_.order - 1));
    fingerprint_ = hash_entries(raw_);
}

Model sample_model(int order, std::size_t dim, std::uint64_t seed, double budget_bytes) {
    return Model(sample_couplings(order, dim, seed, budget_bytes));
}

SpherePoint uniform_sphere_point(std::size_t dim, std::uint64_t seed) {
    Rng rng(split_seed(seed, 0x5350484552ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(dim);
    for (double& a : x) a = normal(rng);
    return SpherePoint::normalized(std::move(x));
}

Vector project_tangent(const SpherePoint& x, const Vector& y) {
    if (y.size() != x.dim()) throw ArgumentError("vector has wrong dimension");
    const double c = dotv(y, x.coords()) / static_cast<double>(x.dim());
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - c * x[i];
    return out;
}

double energy(const Model& m, const SpherePoint& x) {
    require_dim(m, x.dim(), "point");
    return m.scale() * kernels::form(m.packed(), x.data());
}

Vector euclidean_gradient(const Model& m, const SpherePoint& x) {
    require_dim(m, x.dim(), "point");
    Vector g(m.dim());
    kernels::form_and_gradient(m.packed(), x.data(), g.data());
    for (double& a : g) a *= m.scale();
    return g;
}

EnergyGradient energy_and_gradient(const Model& m, const SpherePoint& x) {
    require_dim(m, x.dim(), "point");
    EnergyGradient out;
    out.grad.resize(m.dim());
    const double f = kernels::form_and_gradient(m.packed(), x.data(), out.grad.data());
    out.energy = m.scale() * f;
    // x . grad F = p F by homogeneity, so the radial part is known exactly
    const double c = static_cast<double>(m.order()) * out.energy / static_cast<double>(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i) out.grad[i] = m.scale() * out.grad[i] - c * x[i];
    return out;
}

Vector spherical_gradient(const Model& m, const SpherePoint& x) {
    return project_tangent(x, euclidean_gradient(m, x));
}

double hessian_form(const Model& m, const SpherePoint& x, const Vector& X, const Vector& Y) {
    require_dim(m, x.dim(), "point");
    require_tangent(x, X, "X");
    require_tangent(x, Y, "Y");
    return m.scale() * kernels::bilinear(m.packed(), x.data(), X.data(), Y.data());
}

Vector euclidean_hessian(const Model& m, const SpherePoint& x, double budget_bytes) {
    require_dim(m, x.dim(), "point");
    const double bytes = static_cast<double>(m.dim()) * static_cast<double>(m.dim()) * 8.0;
    if (bytes > budget_bytes) throw CapacityError("dense Hessian exceeds the memory budget");
    Vector H(m.dim() * m.dim());
    kernels::hessian(m.packed(), x.data(), H.data());
    for (double& a : H) a *= m.scale();
    return H;
}

Vector tangent_hessian(const Model& m, const SpherePoint& x, double budget_bytes) {
    Vector M = euclidean_hessian(m, x, budget_bytes);
    const std::size_t N = m.dim();
    const double invN = 1.0 / static_cast<double>(N);
    Vector Mx(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += M[i * N + j] * x[j];
        Mx[i] = s;
    }
    const double xMx = dotv(Mx, x.coords());
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            M[i * N + j] += -(Mx[i] * x[j] + x[i] * Mx[j]) * invN + xMx * x[i] * x[j] * invN * invN;
    return M;
}

double trace_G(const Model& m, const SpherePoint& x, double H) {
    require_dim(m, x.dim(), "point");
    const double tr = m.scale() * kernels::hessian_trace(m.packed(), x.data());
    const double p = m.order();
    // x^T Hess x = p(p-1) H by homogeneity
    return tr - p * (p - 1.0) * H / static_cast<double>(m.dim());
}

double trace_G(const Model& m, const SpherePoint& x) { return trace_G(m, x, energy(m, x)); }

double trace_G2(const Model& m, const SpherePoint& x) {
    const Vector Q = tangent_hessian(m, x);
    return sum_sq(Q);
}

Vector grad_trace_G(const Model& m, const SpherePoint& x) {
    require_dim(m, x.dim(), "point");
    if (m.order() != 3) throw ArgumentError("grad_trace_G is only supported for p = 3");
    const std::size_t N = m.dim();
    const double p = m.order();
    Vector d(N);
    kernels::hessian_trace_gradient(m.packed(), x.data(), d.data());
    const Vector g = euclidean_gradient(m, x);
    for (std::size_t i = 0; i < N; ++i)
        d[i] = m.scale() * d[i] - p * (p - 1.0) * g[i] / static_cast<double>(N);
    return project_tangent(x, d);
}

double laplacian(const Model& m, const SpherePoint& x) {
    const double N = static_cast<double>(m.dim());
    const double p = m.order();
    return -p * (1.0 - 1.0 / N) * energy(m, x) + trace_G(m, x);
}

ObservableTriple observables_from(const Model& m, const SpherePoint& x, double H,
                                  const Vector& grad) {
    const double N = static_cast<double>(m.dim());
    ObservableTriple o;
    o.u = -H / N;
    o.v = sum_sq(grad) / N;
    o.w = m.scale() * kernels::bilinear(m.packed(), x.data(), grad.data(), grad.data()) / N;
    return o;
}

ObservableTriple observables(const Model& m, const SpherePoint& x) {
    const EnergyGradient eg = energy_and_gradient(m, x);
    return observables_from(m, x, eg.energy, eg.grad);
}

}  // namespace pspin
