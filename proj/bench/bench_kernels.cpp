// Parallel packed kernels vs the serial raw-tensor reference.
//
//   bench_kernels [--quick] [--p P] [--n N] [--reps R]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "pspin/kernels.hpp"
#include "pspin/model.hpp"

using namespace pspin;
using Clock = std::chrono::steady_clock;

template <class F>
double time_it(int reps, F&& f) {
    f();  // warm up
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) f();
    return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

int main(int argc, char** argv) {
    bool quick = false;
    int p = 3;
    std::size_t n = 200;
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--quick") {
            quick = true;
        } else if (a == "--p" && i + 1 < argc) {
            p = std::atoi(argv[++i]);
        } else if (a == "--n" && i + 1 < argc) {
            n = std::strtoul(argv[++i], nullptr, 10);
        } else if (a == "--reps" && i + 1 < argc) {
            reps = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: bench_kernels [--quick] [--p P] [--n N] [--reps R]\n");
            return 1;
        }
    }
    if (quick) {
        n = 40;
        reps = 2;
    }

    const Model m = sample_model(p, n, 7);
    const SpherePoint x = uniform_sphere_point(n, 11);
    std::vector<double> g(n);
    std::printf("p=%d N=%zu raw=%zu packed=%zu threads=%d\n", p, n, m.couplings().size(),
                m.packed().size(), omp_get_max_threads());

    double f_ref = 0.0, f_fast = 0.0;
    std::vector<double> g_ref;
    const double t_ref_form =
        time_it(reps, [&] { f_ref = kernels::reference::form(m.couplings(), x.data()); });
    const double t_fast_form =
        time_it(reps, [&] { f_fast = kernels::form(m.packed(), x.data()); });
    const double t_ref_grad =
        time_it(reps, [&] { g_ref = kernels::reference::gradient(m.couplings(), x.data()); });
    const double t_fast_grad =
        time_it(reps, [&] { kernels::form_and_gradient(m.packed(), x.data(), g.data()); });

    double gerr = 0.0, gscale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gerr = std::max(gerr, std::abs(g[i] - g_ref[i]));
        gscale = std::max(gscale, std::abs(g_ref[i]));
    }
    std::printf("%-10s %12s %12s %9s\n", "kernel", "serial_raw", "parallel", "speedup");
    std::printf("%-10s %12.6f %12.6f %9.2f\n", "form", t_ref_form, t_fast_form,
                t_ref_form / t_fast_form);
    std::printf("%-10s %12.6f %12.6f %9.2f\n", "gradient", t_ref_grad, t_fast_grad,
                t_ref_grad / t_fast_grad);
    const double ferr = std::abs(f_ref - f_fast) / std::max(1.0, std::abs(f_ref));
    std::printf("agreement: form rel %.3e, gradient rel %.3e\n", ferr, gerr / gscale);
    return (ferr < 1e-10 && gerr <= 1e-10 * gscale) ? 0 : 1;
}
