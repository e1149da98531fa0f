#pragma once

// Contraction kernels for the multilinear form F(x) = sum_I J_I x_{i1}...x_{ip}.
//
// Two implementations live here:
//  * `kernels::*` work on a packed symmetric copy of the couplings (one
//    coefficient per sorted index tuple) and are OpenMP-parallel. Work is cut
//    into a fixed number of blocks and partial results are reduced in block
//    order, so output is bitwise identical for any thread count.
//  * `kernels::reference::*` are serial and work on the raw tensor by
//    sequential mode contractions. They are the ground truth in tests and the
//    baseline in the benchmark.
//
// All derivatives are of F itself; the N^{-(p-1)/2} scale is applied by the
// caller.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pspin/tensor.hpp"

namespace pspin::kernels {

class PackedSymmetric {
public:
    PackedSymmetric() = default;
    static PackedSymmetric from_dense(const CouplingTensor& raw);

    int order() const { return order_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return coeffs_.size(); }
    std::size_t num_prefixes() const { return offsets_.size(); }

    // Sorted leading indices (length order-1) of prefix r. The trailing index
    // runs over [prefix(r)[order-2], dim) starting at coeffs()+offset(r).
    const std::uint32_t* prefix(std::size_t r) const {
        return prefix_.data() + r * static_cast<std::size_t>(order_ - 1);
    }
    std::size_t offset(std::size_t r) const { return offsets_[r]; }
    std::size_t run_start(std::size_t r) const { return prefix(r)[order_ - 2]; }
    const double* coeffs() const { return coeffs_.data(); }

    // Prefix ranges of roughly equal work. Independent of the thread count.
    const std::vector<std::size_t>& blocks() const { return blocks_; }
    std::vector<std::size_t> make_blocks(std::size_t count) const;

    // Coefficient of a sorted tuple; for tests.
    double coefficient(const std::vector<std::size_t>& sorted_index) const;

private:
    int order_ = 0;
    std::size_t dim_ = 0;
    std::vector<std::uint32_t> prefix_;
    std::vector<std::size_t> offsets_;
    std::vector<double> coeffs_;
    std::vector<std::size_t> blocks_;
};

double form(const PackedSymmetric& s, const double* x);

// grad[m] = dF/dx_m; returns F(x) computed in the same pass.
double form_and_gradient(const PackedSymmetric& s, const double* x, double* grad);

// X^T (d^2F) Y
double bilinear(const PackedSymmetric& s, const double* x, const double* X, const double* Y);

// out = (d^2F) y
void hessian_vector(const PackedSymmetric& s, const double* x, const double* y, double* out);

// Dense N x N Hessian of F, row-major.
void hessian(const PackedSymmetric& s, const double* x, double* out);

// trace of d^2F
double hessian_trace(const PackedSymmetric& s, const double* x);

// gradient of x -> trace(d^2F(x))
void hessian_trace_gradient(const PackedSymmetric& s, const double* x, double* out);

namespace reference {

// out[o*inner + c] = sum_k T[(o*n + k)*inner + c] * v[k]
void contract_mode(const double* T, std::size_t outer, std::size_t n, std::size_t inner,
                   const double* v, double* out);

// sum_I J_I v_{slot 0}[i1] ... v_{slot p-1}[ip]
double full_contraction(const CouplingTensor& raw, const std::vector<const double*>& per_slot);

double form(const CouplingTensor& raw, const double* x);
std::vector<double> gradient(const CouplingTensor& raw, const double* x);
std::vector<double> hessian(const CouplingTensor& raw, const double* x);
double bilinear(const CouplingTensor& raw, const double* x, const double* X, const double* Y);

}  // namespace reference

}  // namespace pspin::kernels
