#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pspin/diagnostics.hpp"
#include "pspin/errors.hpp"

#ifdef PSPIN_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace pspin;

namespace {

double dot(const Vector& a, const Vector& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

Vector geodesic(const SpherePoint& x, const Vector& e, double s) {
    const double R = std::sqrt(static_cast<double>(x.dim()));
    Vector y(x.dim());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] * std::cos(s / R) + R * e[k] * std::sin(s / R);
    return y;
}

std::vector<Vector> tangent_basis(const SpherePoint& x) {
    const std::size_t N = x.dim();
    const double R = std::sqrt(static_cast<double>(N));
    std::vector<Vector> B;
    Vector xn = x.coords();
    for (auto& a : xn) a /= R;
    for (std::size_t i = 0; i < N && B.size() + 1 < N; ++i) {
        Vector e(N, 0.0);
        e[i] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            double s = dot(e, xn);
            for (std::size_t k = 0; k < N; ++k) e[k] -= s * xn[k];
            for (const auto& q : B) {
                s = dot(e, q);
                for (std::size_t k = 0; k < N; ++k) e[k] -= s * q[k];
            }
        }
        const double n = std::sqrt(dot(e, e));
        if (n < 1e-6) continue;
        for (auto& a : e) a /= n;
        B.push_back(e);
    }
    return B;
}

double grad_sq_at(const Model& m, const Vector& y) {
    const EnergyGradient eg = energy_and_gradient(m, SpherePoint::normalized(y));
    return dot(eg.grad, eg.grad);
}

}  // namespace

TEST_CASE("power iteration on known spectra") {
    // diag(1, -3, 2): norm 3, reached through the negative eigenvalue
    Vector a{1, 0, 0, 0, -3, 0, 0, 0, 2};
    const OpNormResult r = op_norm_symmetric(a, 3, 500, 1e-12, 1);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(r.rayleigh.size() == static_cast<std::size_t>(r.iterations));
    CHECK_THROWS_AS(op_norm_symmetric(a, 4), ArgumentError);
    Vector z(9, 0.0);
    CHECK(op_norm_symmetric(z, 3).value == 0.0);
}

#ifdef PSPIN_HAVE_EIGEN
TEST_CASE("restricted Hessian against a dense eigen-solver") {
    const std::size_t N = 80;
    const Model m = sample_model(3, N, 3);
    const SpherePoint x = uniform_sphere_point(N, 4);
    const Vector G = tangent_hessian(m, x);
    Eigen::MatrixXd A(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) A(i, j) = G[i * N + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double op = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    CHECK(op_norm_G(m, x, 2000, 1e-12).value == doctest::Approx(op).epsilon(1e-4));
    CHECK(trace_G(m, x) == doctest::Approx(ev.sum()).epsilon(1e-9));
    CHECK(trace_G2(m, x) == doctest::Approx(ev.squaredNorm()).epsilon(1e-9));
    // x spans the kernel: one eigenvalue is zero
    CHECK(ev.cwiseAbs().minCoeff() <= 1e-9);
}

TEST_CASE("empirical spectrum has the semicircle edge and second moment") {
    // pooled over draws, eigenvalues of G / sqrt(p(p-1)) fill [-2, 2]
    const int p = 3;
    const std::size_t N = 150;
    const double s = std::sqrt(p * (p - 1.0));
    double m2 = 0.0, edge = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < 4; ++k) {
        const Model m = sample_model(p, N, 100 + k);
        const SpherePoint x = uniform_sphere_point(N, 200 + k);
        const Vector G = tangent_hessian(m, x);
        Eigen::Map<const Eigen::MatrixXd> A(G.data(), N, N);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues() / s;
        m2 += ev.squaredNorm();
        count += N - 1;
        edge = std::max(edge, ev.cwiseAbs().maxCoeff());
    }
    CHECK(m2 / count == doctest::Approx(1.0).epsilon(0.05));
    CHECK(edge == doctest::Approx(2.0).epsilon(0.1));
}
#endif

TEST_CASE("half Laplacian of |grad H|^2 against a geodesic second difference") {
    const std::size_t N = 30;
    const Model m = sample_model(3, N, 11);
    const SpherePoint x = uniform_sphere_point(N, 5);
    const BochnerTerms b = bochner_residual(m, x);
    const double s = 1e-3;
    const double f0 = grad_sq_at(m, x.coords());
    double lap = 0.0;
    for (const auto& e : tangent_basis(x))
        lap += grad_sq_at(m, geodesic(x, e, s)) + grad_sq_at(m, geodesic(x, e, -s)) - 2.0 * f0;
    lap /= s * s;
    CHECK(b.half_lap_grad_sq == doctest::Approx(0.5 * lap).epsilon(1e-5));
    CHECK(b.grad_sq == doctest::Approx(observables(m, x).v * N));
    CHECK(b.residual == doctest::Approx((b.half_lap_grad_sq - b.A) / N));
    CHECK_THROWS_AS(bochner_residual(sample_model(2, 10, 1), uniform_sphere_point(10, 1)), ArgumentError);
}

TEST_CASE("trace statistics report the GOE scale") {
    const TraceStatistics t = trace_statistics(default_factory(), 3, 80, 12, 7);
    REQUIRE(t.trace.pass.has_value());
    CHECK(t.trace.values.size() == 12u);
    CHECK(t.trace_sq_ratio.statistic == doctest::Approx(1.0).epsilon(0.1));
    CHECK(t.trace.provenance == kDerivedOracle);
    CHECK(t.trace_sq_ratio.provenance == kTheoryScale);
    const TraceStatistics few = trace_statistics(default_factory(), 3, 80, 5, 7);
    CHECK_FALSE(few.trace.pass.has_value());
    CHECK(few.trace.note.find("refused") != std::string::npos);
}

TEST_CASE("a custom factory is honoured") {
    int calls = 0;
    const ModelFactory f = [&calls](int p, std::size_t N, std::uint64_t seed) {
        ++calls;
        return sample_model(p, N, seed);
    };
    const OpNormStatistics o = op_norm_statistics(f, 3, 40, 10, 1, 200);
    CHECK(calls == 10);
    CHECK(o.runs.size() == 10u);
    CHECK(o.mean_ratio.pass.has_value());
}

TEST_CASE("Laplacian trend shrinks with N") {
    const StatReport r = laplacian_trend(default_factory(), 3, {40, 80, 160}, 10, 3);
    REQUIRE(r.pass.has_value());
    CHECK(*r.pass);
    CHECK(r.values.size() == 3u);
    CHECK_THROWS_AS(laplacian_trend(default_factory(), 3, {80, 40}, 10, 3), ArgumentError);
}

TEST_CASE("sampled sup norms are one-sided and refuse small samples") {
    const Model m = sample_model(3, 40, 9);
    const Window w;
    const SupNorms few = sampled_sup_norms(m, 50, w, lambda_p_default(3), 1);
    CHECK_FALSE(few.energy.pass.has_value());
    const SupNorms s = sampled_sup_norms(m, 100, w, lambda_p_default(3), 1, 5, 3);
    REQUIRE(s.energy.pass.has_value());
    CHECK(s.energy.values.size() == 100u);
    // ascent only raises the sampled maxima
    const SupNorms s0 = sampled_sup_norms(m, 100, w, lambda_p_default(3), 1, 0, 3);
    CHECK(s.energy.statistic >= s0.energy.statistic - 1e-12);
}
