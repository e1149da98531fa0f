#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <vector>

#include <omp.h>

#include "pspin/errors.hpp"
#include "pspin/kernels.hpp"
#include "pspin/tensor.hpp"

using namespace pspin;
namespace k = pspin::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (auto& a : x) a = g(rng);
    return x;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / std::max(den, 1e-300);
}

// brute force over all index tuples: F(x) = sum_I J_I prod x_{i_a}
double brute_form(const CouplingTensor& t, const std::vector<double>& x) {
    const std::size_t n = t.dim;
    double s = 0.0;
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        std::size_t rem = flat;
        double prod = t.entries[flat];
        for (int a = 0; a < t.order; ++a) {
            prod *= x[rem % n];
            rem /= n;
        }
        s += prod;
    }
    return s;
}

}  // namespace

TEST_CASE("coupling draws are deterministic and budgeted") {
    const CouplingTensor a = sample_couplings(3, 12, 5);
    const CouplingTensor b = sample_couplings(3, 12, 5);
    const CouplingTensor c = sample_couplings(3, 12, 6);
    CHECK(a.size() == 12u * 12u * 12u);
    CHECK(a.entries == b.entries);
    CHECK(a.entries != c.entries);
    CHECK_THROWS_AS(sample_couplings(3, 1000, 1, 1e6), CapacityError);
    CHECK(dense_bytes(3, 10) == doctest::Approx(8000.0));
    // moments of N(0,1)
    const CouplingTensor big = sample_couplings(3, 40, 9);
    const double mean = std::accumulate(big.entries.begin(), big.entries.end(), 0.0) / big.size();
    double var = 0.0;
    for (double e : big.entries) var += (e - mean) * (e - mean);
    var /= big.size();
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("draws do not depend on the thread count") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const CouplingTensor a = sample_couplings(3, 30, 17);
    omp_set_num_threads(4);
    const CouplingTensor b = sample_couplings(3, 30, 17);
    omp_set_num_threads(saved);
    CHECK(a.entries == b.entries);
}

TEST_CASE("packed coefficients sum the raw entries over permutations") {
    const CouplingTensor t = sample_couplings(3, 6, 2);
    const k::PackedSymmetric s = k::PackedSymmetric::from_dense(t);
    auto raw = [&](std::size_t i, std::size_t j, std::size_t l) { return t.entries[(i * 6 + j) * 6 + l]; };
    CHECK(s.coefficient({0, 0, 0}) == doctest::Approx(raw(0, 0, 0)));
    CHECK(s.coefficient({0, 0, 1}) == doctest::Approx(raw(0, 0, 1) + raw(0, 1, 0) + raw(1, 0, 0)));
    CHECK(s.coefficient({1, 2, 4}) == doctest::Approx(raw(1, 2, 4) + raw(1, 4, 2) + raw(2, 1, 4) +
                                                      raw(2, 4, 1) + raw(4, 1, 2) + raw(4, 2, 1)));
    CHECK(s.size() == 56u);  // C(6 + 2, 3)
    CHECK_THROWS_AS(s.coefficient({2, 1, 0}), ArgumentError);
}

TEST_CASE("packed kernels agree with the raw-tensor reference") {
    for (int p : {2, 3, 4}) {
        const std::size_t n = p == 4 ? 9 : 17;
        const CouplingTensor t = sample_couplings(p, n, 100 + p);
        const k::PackedSymmetric s = k::PackedSymmetric::from_dense(t);
        const auto x = random_vec(n, 1), X = random_vec(n, 2), Y = random_vec(n, 3);
        CAPTURE(p);

        const double f_ref = k::reference::form(t, x.data());
        CHECK(std::abs(k::form(s, x.data()) - f_ref) <= 1e-12 * (1.0 + std::abs(f_ref)) * n);
        CHECK(std::abs(brute_form(t, x) - f_ref) <= 1e-10 * (1.0 + std::abs(f_ref)));

        std::vector<double> g(n);
        const double f2 = k::form_and_gradient(s, x.data(), g.data());
        CHECK(std::abs(f2 - f_ref) <= 1e-10 * (1.0 + std::abs(f_ref)));
        CHECK(max_rel(g, k::reference::gradient(t, x.data())) <= 1e-12);

        std::vector<double> h(n * n);
        k::hessian(s, x.data(), h.data());
        const auto h_ref = k::reference::hessian(t, x.data());
        CHECK(max_rel(h, h_ref) <= 1e-12);

        const double b_ref = k::reference::bilinear(t, x.data(), X.data(), Y.data());
        CHECK(std::abs(k::bilinear(s, x.data(), X.data(), Y.data()) - b_ref) <=
              1e-11 * (1.0 + std::abs(b_ref)));

        std::vector<double> hv(n), hv_ref(n, 0.0);
        k::hessian_vector(s, x.data(), Y.data(), hv.data());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) hv_ref[i] += h_ref[i * n + j] * Y[j];
        CHECK(max_rel(hv, hv_ref) <= 1e-12);

        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += h_ref[i * n + i];
        CHECK(std::abs(k::hessian_trace(s, x.data()) - tr) <= 1e-11 * (1.0 + std::abs(tr)));
    }
}

TEST_CASE("Euler identity and homogeneity") {
    const int p = 3;
    const std::size_t n = 15;
    const CouplingTensor t = sample_couplings(p, n, 4);
    const k::PackedSymmetric s = k::PackedSymmetric::from_dense(t);
    auto x = random_vec(n, 8);
    std::vector<double> g(n);
    const double f = k::form_and_gradient(s, x.data(), g.data());
    CHECK(std::inner_product(g.begin(), g.end(), x.begin(), 0.0) == doctest::Approx(p * f).epsilon(1e-12));
    std::vector<double> x2 = x;
    for (auto& a : x2) a *= 1.7;
    CHECK(k::form(s, x2.data()) == doctest::Approx(std::pow(1.7, p) * f).epsilon(1e-12));
}

TEST_CASE("gradient of the Hessian trace against central differences") {
    for (int p : {3, 4}) {
        const std::size_t n = 10;
        const CouplingTensor t = sample_couplings(p, n, 40 + p);
        const k::PackedSymmetric s = k::PackedSymmetric::from_dense(t);
        auto x = random_vec(n, 5);
        std::vector<double> g(n);
        k::hessian_trace_gradient(s, x.data(), g.data());
        const double eps = 1e-5;
        for (std::size_t i = 0; i < n; ++i) {
            auto xp = x, xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            const double fd = (k::hessian_trace(s, xp.data()) - k::hessian_trace(s, xm.data())) / (2 * eps);
            CHECK(std::abs(g[i] - fd) <= 1e-6 * (1.0 + std::abs(fd)));
        }
    }
}

TEST_CASE("parallel kernels are bitwise identical across thread counts") {
    const CouplingTensor t = sample_couplings(3, 60, 11);
    const k::PackedSymmetric s = k::PackedSymmetric::from_dense(t);
    const auto x = random_vec(60, 12);
    const int saved = omp_get_max_threads();
    std::vector<double> g1(60), g4(60);
    omp_set_num_threads(1);
    const double f1 = k::form_and_gradient(s, x.data(), g1.data());
    const double tr1 = k::hessian_trace(s, x.data());
    omp_set_num_threads(4);
    const double f4 = k::form_and_gradient(s, x.data(), g4.data());
    const double tr4 = k::hessian_trace(s, x.data());
    omp_set_num_threads(saved);
    CHECK(std::memcmp(&f1, &f4, sizeof f1) == 0);
    CHECK(std::memcmp(&tr1, &tr4, sizeof tr1) == 0);
    CHECK(g1 == g4);
}

TEST_CASE("mode contraction") {
    // T is 2 x 3 x 2; contract the middle mode with v
    std::vector<double> T(12);
    std::iota(T.begin(), T.end(), 0.0);
    const double v[3] = {1.0, -1.0, 2.0};
    std::vector<double> out(4);
    k::reference::contract_mode(T.data(), 2, 3, 2, v, out.data());
    // out[o, c] = T[o,0,c] - T[o,1,c] + 2 T[o,2,c]
    CHECK(out[0] == doctest::Approx(0 - 2 + 2 * 4));
    CHECK(out[1] == doctest::Approx(1 - 3 + 2 * 5));
    CHECK(out[2] == doctest::Approx(6 - 8 + 2 * 10));
    CHECK(out[3] == doctest::Approx(7 - 9 + 2 * 11));
}
