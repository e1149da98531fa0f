#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pspin {

inline constexpr double kDefaultMemoryBudget = 8e8;  // bytes

// Raw order-p coupling array, row-major, entries i.i.d. N(0,1), no symmetry.
struct CouplingTensor {
    int order = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> entries;

    std::size_t size() const { return entries.size(); }
    double at(std::span<const std::size_t> index) const;
};

// Bytes needed for N^p doubles; throws CapacityError on overflow.
double dense_bytes(int order, std::size_t dim);

// Draws couplings deterministically from `seed`. Entries are generated in
// fixed chunks, each with its own split stream, so the result does not
// depend on the thread count.
CouplingTensor sample_couplings(int order, std::size_t dim, std::uint64_t seed,
                                double budget_bytes = kDefaultMemoryBudget);

}  // namespace pspin
