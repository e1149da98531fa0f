#include "pspin/kernels.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "pspin/errors.hpp"

namespace pspin::kernels {

namespace {

constexpr std::size_t kVectorBlocks = 64;
constexpr std::size_t kMatrixBlocks = 8;
constexpr int kMaxPrefix = 3;

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// Returns sum c[i]*x[i] and adds alpha*c into g.
inline double dot_axpy(const double* c, const double* x, double alpha, double* g, std::size_t n) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) {
        acc += c[i] * x[i];
        g[i] += alpha * c[i];
    }
    return acc;
}

inline void axpy(double alpha, const double* c, double* g, std::size_t n) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) g[i] += alpha * c[i];
}

// Per-prefix view: indices, the x values at them, and products with slots left out.
struct Prefix {
    int q = 0;
    std::array<std::uint32_t, kMaxPrefix> idx{};
    std::array<double, kMaxPrefix> xv{};
    std::size_t k0 = 0;
    std::size_t n = 0;
    const double* c = nullptr;

    Prefix(const PackedSymmetric& s, std::size_t r, const double* x) : q(s.order() - 1) {
        const std::uint32_t* p = s.prefix(r);
        for (int a = 0; a < q; ++a) {
            idx[a] = p[a];
            xv[a] = x[p[a]];
        }
        k0 = p[q - 1];
        n = s.dim() - k0;
        c = s.coeffs() + s.offset(r);
    }

    // product of xv over slots not in `mask`
    double without(unsigned mask) const {
        double prod = 1.0;
        for (int a = 0; a < q; ++a)
            if (!(mask & (1u << a))) prod *= xv[a];
        return prod;
    }
};

// Runs body(prefix_index, accumulator) over every prefix, one accumulator of
// `width` doubles per block, then sums the blocks in order into `out`.
template <class Body>
void blocked_reduce(const std::vector<std::size_t>& bounds, std::size_t width, double* out,
                    Body&& body) {
    const std::size_t nb = bounds.size() - 1;
    std::vector<double> partial(nb * width, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t b = 0; b < nb; ++b) {
        double* acc = partial.data() + b * width;
        for (std::size_t r = bounds[b]; r < bounds[b + 1]; ++r) body(r, acc);
    }
    std::fill(out, out + width, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const double* acc = partial.data() + b * width;
#pragma omp simd
        for (std::size_t i = 0; i < width; ++i) out[i] += acc[i];
    }
}

void check_dims(const PackedSymmetric& s) {
    if (s.order() < 2) throw ArgumentError("packed tensor is empty");
}

}  // namespace

PackedSymmetric PackedSymmetric::from_dense(const CouplingTensor& raw) {
    if (raw.order < 2 || raw.order > kMaxPrefix + 1)
        throw ArgumentError("packed layout supports orders 2..4");
    PackedSymmetric s;
    s.order_ = raw.order;
    s.dim_ = raw.dim;
    const int q = raw.order - 1;
    const std::size_t N = raw.dim;

    // sorted prefixes in lexicographic order
    std::vector<std::uint32_t> cur(q, 0);
    std::size_t offset = 0;
    while (true) {
        s.prefix_.insert(s.prefix_.end(), cur.begin(), cur.end());
        s.offsets_.push_back(offset);
        offset += N - cur[q - 1];
        int a = q - 1;
        while (a >= 0 && cur[a] == N - 1) --a;
        if (a < 0) break;
        ++cur[a];
        for (int b = a + 1; b < q; ++b) cur[b] = cur[a];
    }
    s.coeffs_.assign(offset, 0.0);

    // Each packed coefficient sums the raw entries over the distinct
    // permutations of its index tuple.
    const std::size_t np = s.offsets_.size();
    const int p = raw.order;
    const double* J = raw.entries.data();
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t r = 0; r < np; ++r) {
        std::array<std::size_t, kMaxPrefix + 1> t{};
        const std::uint32_t* pre = s.prefix_.data() + r * q;
        for (std::size_t k = pre[q - 1]; k < N; ++k) {
            for (int a = 0; a < q; ++a) t[a] = pre[a];
            t[q] = k;
            double sum = 0.0;
            do {
                std::size_t flat = 0;
                for (int a = 0; a < p; ++a) flat = flat * N + t[a];
                sum += J[flat];
            } while (std::next_permutation(t.begin(), t.begin() + p));
            s.coeffs_[s.offsets_[r] + (k - pre[q - 1])] = sum;
        }
    }
    s.blocks_ = s.make_blocks(kVectorBlocks);
    return s;
}

std::vector<std::size_t> PackedSymmetric::make_blocks(std::size_t count) const {
    const std::size_t np = num_prefixes();
    count = std::max<std::size_t>(1, std::min(count, np));
    const double total = static_cast<double>(size()) + static_cast<double>(np);
    std::vector<std::size_t> bounds{0};
    double work = 0.0;
    for (std::size_t r = 0; r < np; ++r) {
        work += static_cast<double>(dim_ - run_start(r)) + 1.0;
        if (work >= total * static_cast<double>(bounds.size()) / static_cast<double>(count) &&
            bounds.size() < count)
            bounds.push_back(r + 1);
    }
    if (bounds.back() != np) bounds.push_back(np);
    return bounds;
}

double PackedSymmetric::coefficient(const std::vector<std::size_t>& sorted_index) const {
    if (sorted_index.size() != static_cast<std::size_t>(order_))
        throw ArgumentError("index length does not match tensor order");
    if (!std::is_sorted(sorted_index.begin(), sorted_index.end()))
        throw ArgumentError("packed coefficients are addressed by sorted tuples");
    const int q = order_ - 1;
    for (std::size_t r = 0; r < num_prefixes(); ++r) {
        const std::uint32_t* pre = prefix(r);
        bool match = true;
        for (int a = 0; a < q; ++a) match = match && pre[a] == sorted_index[a];
        if (match) return coeffs_[offsets_[r] + sorted_index[q] - pre[q - 1]];
    }
    throw ArgumentError("index out of range");
}

double form(const PackedSymmetric& s, const double* x) {
    check_dims(s);
    double out = 0.0;
    blocked_reduce(s.blocks(), 1, &out, [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        acc[0] += pr.without(0) * dot(pr.c, x + pr.k0, pr.n);
    });
    return out;
}

double form_and_gradient(const PackedSymmetric& s, const double* x, double* grad) {
    check_dims(s);
    const std::size_t N = s.dim();
    std::vector<double> out(N + 1);
    blocked_reduce(s.blocks(), N + 1, out.data(), [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        const double pi = pr.without(0);
        const double d = dot_axpy(pr.c, x + pr.k0, pi, acc + pr.k0, pr.n);
        acc[N] += pi * d;
        for (int a = 0; a < pr.q; ++a) acc[pr.idx[a]] += pr.without(1u << a) * d;
    });
    std::copy(out.begin(), out.begin() + N, grad);
    return out[N];
}

double bilinear(const PackedSymmetric& s, const double* x, const double* X, const double* Y) {
    check_dims(s);
    double out = 0.0;
    blocked_reduce(s.blocks(), 1, &out, [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        double dx = 0.0, dX = 0.0, dY = 0.0;
        const double* xs = x + pr.k0;
        const double* Xs = X + pr.k0;
        const double* Ys = Y + pr.k0;
#pragma omp simd reduction(+ : dx, dX, dY)
        for (std::size_t i = 0; i < pr.n; ++i) {
            dx += pr.c[i] * xs[i];
            dX += pr.c[i] * Xs[i];
            dY += pr.c[i] * Ys[i];
        }
        double val = 0.0;
        for (int a = 0; a < pr.q; ++a) {
            const double Xa = X[pr.idx[a]];
            const double Ya = Y[pr.idx[a]];
            const double w1 = pr.without(1u << a);
            val += Xa * w1 * dY + Ya * w1 * dX;
            for (int b = 0; b < pr.q; ++b)
                if (b != a) val += Xa * Y[pr.idx[b]] * pr.without((1u << a) | (1u << b)) * dx;
        }
        acc[0] += val;
    });
    return out;
}

void hessian_vector(const PackedSymmetric& s, const double* x, const double* y, double* out) {
    check_dims(s);
    const std::size_t N = s.dim();
    blocked_reduce(s.blocks(), N, out, [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        double dx = 0.0, dy = 0.0;
        const double* xs = x + pr.k0;
        const double* ys = y + pr.k0;
#pragma omp simd reduction(+ : dx, dy)
        for (std::size_t i = 0; i < pr.n; ++i) {
            dx += pr.c[i] * xs[i];
            dy += pr.c[i] * ys[i];
        }
        double alpha = 0.0;
        for (int a = 0; a < pr.q; ++a) {
            const double w1 = pr.without(1u << a);
            acc[pr.idx[a]] += w1 * dy;
            alpha += y[pr.idx[a]] * w1;
            for (int b = 0; b < pr.q; ++b)
                if (b != a)
                    acc[pr.idx[a]] += y[pr.idx[b]] * pr.without((1u << a) | (1u << b)) * dx;
        }
        axpy(alpha, pr.c, acc + pr.k0, pr.n);
    });
}

void hessian(const PackedSymmetric& s, const double* x, double* out) {
    check_dims(s);
    const std::size_t N = s.dim();
    // acc holds R + Hp/2, where R collects (prefix slot, trailing slot) pairs
    // by row and Hp the symmetric prefix-prefix part; H = acc + acc^T.
    std::vector<double> half(N * N);
    blocked_reduce(s.make_blocks(kMatrixBlocks), N * N, half.data(),
                   [&](std::size_t r, double* acc) {
                       const Prefix pr(s, r, x);
                       double dx = 0.0;
                       if (pr.q > 1) dx = dot(pr.c, x + pr.k0, pr.n);
                       for (int a = 0; a < pr.q; ++a) {
                           double* row = acc + pr.idx[a] * N;
                           axpy(pr.without(1u << a), pr.c, row + pr.k0, pr.n);
                           for (int b = 0; b < pr.q; ++b)
                               if (b != a)
                                   row[pr.idx[b]] +=
                                       0.5 * pr.without((1u << a) | (1u << b)) * dx;
                       }
                   });
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) {
            const double v = half[i * N + j] + half[j * N + i];
            out[i * N + j] = v;
            out[j * N + i] = v;
        }
}

double hessian_trace(const PackedSymmetric& s, const double* x) {
    check_dims(s);
    double out = 0.0;
    blocked_reduce(s.blocks(), 1, &out, [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        double val = 0.0;
        bool need_dx = false;
        for (int a = 0; a < pr.q; ++a)
            for (int b = a + 1; b < pr.q; ++b) need_dx = need_dx || pr.idx[a] == pr.idx[b];
        if (need_dx) {
            const double dx = dot(pr.c, x + pr.k0, pr.n);
            for (int a = 0; a < pr.q; ++a)
                for (int b = a + 1; b < pr.q; ++b)
                    if (pr.idx[a] == pr.idx[b])
                        val += 2.0 * pr.without((1u << a) | (1u << b)) * dx;
        }
        for (int a = 0; a < pr.q; ++a)
            if (pr.idx[a] == pr.k0) val += 2.0 * pr.without(1u << a) * pr.c[0];
        acc[0] += val;
    });
    return out;
}

void hessian_trace_gradient(const PackedSymmetric& s, const double* x, double* out) {
    check_dims(s);
    const std::size_t N = s.dim();
    blocked_reduce(s.blocks(), N, out, [&](std::size_t r, double* acc) {
        const Prefix pr(s, r, x);
        const int q = pr.q;
        // trailing slot free, an equal pair among the prefix slots
        double alpha = 0.0;
        for (int b = 0; b < q; ++b)
            for (int c = b + 1; c < q; ++c)
                if (pr.idx[b] == pr.idx[c]) alpha += 2.0 * pr.without((1u << b) | (1u << c));
        if (alpha != 0.0) axpy(alpha, pr.c, acc + pr.k0, pr.n);
        for (int a = 0; a < q; ++a) {
            // trailing slot paired with a prefix slot d, which forces k = k0
            for (int d = 0; d < q; ++d)
                if (d != a && pr.idx[d] == pr.k0)
                    acc[pr.idx[a]] += 2.0 * pr.without((1u << a) | (1u << d)) * pr.c[0];
            // equal pair strictly inside the prefix, trailing slot contracted with x
            for (int b = 0; b < q; ++b)
                for (int c = b + 1; c < q; ++c)
                    if (b != a && c != a && pr.idx[b] == pr.idx[c]) {
                        const double dx = dot(pr.c, x + pr.k0, pr.n);
                        acc[pr.idx[a]] +=
                            2.0 * pr.without((1u << a) | (1u << b) | (1u << c)) * dx;
                    }
        }
    });
}

namespace reference {

void contract_mode(const double* T, std::size_t outer, std::size_t n, std::size_t inner,
                   const double* v, double* out) {
    for (std::size_t o = 0; o < outer; ++o) {
        double* dst = out + o * inner;
        if (inner == 1) {
            const double* row = T + o * n;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += row[k] * v[k];
            dst[0] = acc;
            continue;
        }
        std::fill(dst, dst + inner, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double* src = T + (o * n + k) * inner;
            const double vk = v[k];
            for (std::size_t c = 0; c < inner; ++c) dst[c] += src[c] * vk;
        }
    }
}

namespace {

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Contracts every mode except `keep` (sorted, size 1 or 2) with the given
// per-slot vectors. Returns a tensor over the kept modes.
std::vector<double> contract_except(const CouplingTensor& raw,
                                    const std::vector<const double*>& per_slot,
                                    const std::vector<int>& keep) {
    const std::size_t N = raw.dim;
    const int p = raw.order;
    const double* data = raw.entries.data();
    std::vector<double> cur;
    std::vector<double> next;
    // modes still present, in order
    std::vector<int> modes(p);
    for (int a = 0; a < p; ++a) modes[a] = a;
    auto contract_at = [&](std::size_t pos) {
        const std::size_t outer = ipow(N, static_cast<int>(pos));
        const std::size_t inner = ipow(N, static_cast<int>(modes.size() - pos - 1));
        next.assign(outer * inner, 0.0);
        contract_mode(data, outer, N, inner, per_slot[modes[pos]], next.data());
        cur.swap(next);
        data = cur.data();
        modes.erase(modes.begin() + static_cast<long>(pos));
    };
    // trailing modes first: keeps the contraction a sequence of row dots
    for (int a = p - 1; a >= 0; --a) {
        if (std::find(keep.begin(), keep.end(), a) != keep.end()) continue;
        const auto pos = static_cast<std::size_t>(
            std::find(modes.begin(), modes.end(), a) - modes.begin());
        contract_at(pos);
    }
    if (cur.empty()) cur.assign(raw.entries.begin(), raw.entries.end());
    return cur;
}

}  // namespace

double full_contraction(const CouplingTensor& raw, const std::vector<const double*>& per_slot) {
    if (per_slot.size() != static_cast<std::size_t>(raw.order))
        throw ArgumentError("one vector per slot required");
    return contract_except(raw, per_slot, {})[0];
}

double form(const CouplingTensor& raw, const double* x) {
    return full_contraction(raw, std::vector<const double*>(raw.order, x));
}

std::vector<double> gradient(const CouplingTensor& raw, const double* x) {
    const std::vector<const double*> slots(raw.order, x);
    std::vector<double> g(raw.dim, 0.0);
    for (int a = 0; a < raw.order; ++a) {
        const auto part = contract_except(raw, slots, {a});
        for (std::size_t i = 0; i < raw.dim; ++i) g[i] += part[i];
    }
    return g;
}

std::vector<double> hessian(const CouplingTensor& raw, const double* x) {
    const std::size_t N = raw.dim;
    const std::vector<const double*> slots(raw.order, x);
    std::vector<double> H(N * N, 0.0);
    for (int a = 0; a < raw.order; ++a)
        for (int b = a + 1; b < raw.order; ++b) {
            const auto B = contract_except(raw, slots, {a, b});
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    H[i * N + j] += B[i * N + j];
                    H[j * N + i] += B[i * N + j];
                }
        }
    return H;
}

double bilinear(const CouplingTensor& raw, const double* x, const double* X, const double* Y) {
    double total = 0.0;
    for (int a = 0; a < raw.order; ++a)
        for (int b = 0; b < raw.order; ++b) {
            if (a == b) continue;
            std::vector<const double*> slots(raw.order, x);
            slots[a] = X;
            slots[b] = Y;
            total += full_contraction(raw, slots);
        }
    return total;
}

}  // namespace reference

}  // namespace pspin::kernels
