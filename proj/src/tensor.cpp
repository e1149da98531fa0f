#include "pspin/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pspin/errors.hpp"
#include "pspin/rng.hpp"

namespace pspin {

namespace {
constexpr std::size_t kChunk = std::size_t{1} << 16;
}

double CouplingTensor::at(std::span<const std::size_t> index) const {
    if (index.size() != static_cast<std::size_t>(order))
        throw ArgumentError("index length does not match tensor order");
    std::size_t flat = 0;
    for (std::size_t i : index) {
        if (i >= dim) throw ArgumentError("tensor index out of range");
        flat = flat * dim + i;
    }
    return entries[flat];
}

double dense_bytes(int order, std::size_t dim) {
    if (order < 1) throw ArgumentError("tensor order must be positive");
    return std::pow(static_cast<double>(dim), order) * sizeof(double);
}

CouplingTensor sample_couplings(int order, std::size_t dim, std::uint64_t seed,
                                double budget_bytes) {
    if (order < 2 || order > 4)
        throw ArgumentError("supported orders are p in {2,3,4}");
    if (dim < 2) throw ArgumentError("dimension must be at least 2");
    const double bytes = dense_bytes(order, dim);
    if (bytes > budget_bytes) {
        std::ostringstream msg;
        msg << "coupling tensor for p=" << order << ", N=" << dim << " needs " << bytes
            << " bytes, over the budget of " << budget_bytes;
        throw CapacityError(msg.str());
    }

    CouplingTensor t;
    t.order = order;
    t.dim = dim;
    t.seed = seed;
    std::size_t total = 1;
    for (int a = 0; a < order; ++a) total *= dim;
    t.entries.resize(total);

    const std::size_t chunks = (total + kChunk - 1) / kChunk;
    double* out = t.entries.data();
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
        Rng rng = make_rng(seed, c);
        std::normal_distribution<double> normal(0.0, 1.0);
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(total, lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) out[i] = normal(rng);
    }
    return t;
}

}  // namespace pspin
