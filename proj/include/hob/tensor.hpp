#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "hob/error.hpp"

namespace hob {

using Vec = std::vector<double>;
using IndexTuple = std::vector<int>;

/// One nonzero of a sparse tensor: an index tuple (0-based, length = order)
/// and its value.
struct TensorEntry {
    IndexTuple idx;
    double value = 0.0;
};

/// Sparse m-order n-dimensional real tensor in coordinate form.
///
/// Entries are stored sorted lexicographically by index tuple and grouped
/// by leading index, so iteration over a row is deterministic. Exact zeros
/// are dropped at construction; duplicate index tuples and non-finite
/// values are rejected. Immutable after construction.
class SparseTensor {
public:
    SparseTensor(int order, int dim, std::vector<TensorEntry> entries)
        : order_(order), dim_(dim) {
        if (order < 2)
            throw Error(ErrorKind::InvalidArgument, "tensor order must be >= 2");
        if (dim < 1)
            throw Error(ErrorKind::InvalidArgument, "tensor dimension must be >= 1");

        for (const auto& e : entries) {
            if (static_cast<int>(e.idx.size()) != order)
                throw Error(ErrorKind::InvalidArgument,
                            "entry index tuple length does not match tensor order");
            for (int i : e.idx)
                if (i < 0 || i >= dim)
                    throw Error(ErrorKind::IndexOutOfRange, "index out of range");
            if (!std::isfinite(e.value))
                throw Error(ErrorKind::NonFiniteValue, "non-finite tensor value");
        }

        std::sort(entries.begin(), entries.end(),
                  [](const TensorEntry& a, const TensorEntry& b) { return a.idx < b.idx; });
        for (std::size_t k = 1; k < entries.size(); ++k)
            if (entries[k].idx == entries[k - 1].idx)
                throw Error(ErrorKind::DuplicateIndex, "duplicate index tuple");

        idx_.reserve(entries.size() * order);
        val_.reserve(entries.size());
        for (const auto& e : entries) {
            if (e.value == 0.0) continue;
            idx_.insert(idx_.end(), e.idx.begin(), e.idx.end());
            val_.push_back(e.value);
        }

        row_ptr_.assign(dim_ + 1, 0);
        for (std::size_t k = 0; k < val_.size(); ++k)
            ++row_ptr_[idx_[k * order_] + 1];
        std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
    }

    /// Identity tensor: ones on the diagonal, zeros elsewhere.
    static SparseTensor identity(int order, int dim) {
        std::vector<TensorEntry> entries;
        entries.reserve(dim);
        for (int i = 0; i < dim; ++i)
            entries.push_back({IndexTuple(order, i), 1.0});
        return SparseTensor(order, dim, std::move(entries));
    }

    int order() const noexcept { return order_; }
    int dim() const noexcept { return dim_; }
    int nnz() const noexcept { return static_cast<int>(val_.size()); }

    std::span<const int> index(int e) const {
        return {idx_.data() + static_cast<std::size_t>(e) * order_,
                static_cast<std::size_t>(order_)};
    }
    double value(int e) const { return val_[e]; }

    /// Entry range [row_begin(i), row_end(i)) holds the nonzeros with
    /// leading index i, sorted by tuple.
    int row_begin(int i) const { return row_ptr_[i]; }
    int row_end(int i) const { return row_ptr_[i + 1]; }

    /// Diagonal entry a_{i...i}, zero if absent.
    double diagonal(int i) const {
        for (int e = row_begin(i); e < row_end(i); ++e) {
            auto t = index(e);
            if (std::all_of(t.begin(), t.end(), [i](int j) { return j == i; }))
                return value(e);
        }
        return 0.0;
    }

    std::vector<TensorEntry> entries() const {
        std::vector<TensorEntry> out;
        out.reserve(val_.size());
        for (int e = 0; e < nnz(); ++e) {
            auto t = index(e);
            out.push_back({IndexTuple(t.begin(), t.end()), value(e)});
        }
        return out;
    }

    bool operator==(const SparseTensor& other) const {
        return order_ == other.order_ && dim_ == other.dim_ && idx_ == other.idx_ &&
               val_ == other.val_;
    }

private:
    int order_;
    int dim_;
    std::vector<int> idx_;     // nnz * order, lexicographically sorted tuples
    std::vector<double> val_;  // nnz
    std::vector<int> row_ptr_; // dim + 1
};

inline void check_vec_dim(const SparseTensor& a, const Vec& x) {
    if (static_cast<int>(x.size()) != a.dim())
        throw Error(ErrorKind::DimensionMismatch, "vector length does not match tensor dimension");
}

/// Tensor-vector contraction A x^{m-1}: the i-th output entry is the sum
/// over row-i nonzeros of a_{i i2...im} x_{i2} ... x_{im}.
inline Vec contract(const SparseTensor& a, const Vec& x) {
    check_vec_dim(a, x);
    const int m = a.order();
    Vec out(a.dim(), 0.0);
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        double p = a.value(e);
        for (int s = 1; s < m; ++s) p *= x[t[s]];
        out[t[0]] += p;
    }
    return out;
}

/// Dense row-major matrix, just large enough for Jacobians and small
/// direct solves.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

/// Jacobian of x -> A x^{m-1}:
/// J_{ij} = sum_{s=2..m} sum_{tuples with i_s=j} a_{i i2...im} prod_{t != s} x_{i_t}.
inline Matrix jacobian(const SparseTensor& a, const Vec& x) {
    check_vec_dim(a, x);
    const int m = a.order();
    Matrix j(a.dim(), a.dim());
    std::vector<double> pre(m), suf(m);
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        const double v = a.value(e);
        // pre[s] = prod of x over slots 1..s-1, suf[s] = prod over slots s+1..m-1
        pre[1] = 1.0;
        for (int s = 2; s < m; ++s) pre[s] = pre[s - 1] * x[t[s - 1]];
        suf[m - 1] = 1.0;
        for (int s = m - 2; s >= 1; --s) suf[s] = suf[s + 1] * x[t[s + 1]];
        for (int s = 1; s < m; ++s)
            j(t[0], t[s]) += v * pre[s] * suf[s];
    }
    return j;
}

/// Relabels indices: the result A' has a'_{i1...im} = a_{pi(i1)...pi(im)}.
/// Spectra (and in particular zero eigenvalues) are invariant under this map.
inline SparseTensor permute(const SparseTensor& a, const std::vector<int>& pi) {
    if (static_cast<int>(pi.size()) != a.dim())
        throw Error(ErrorKind::InvalidArgument, "permutation length does not match dimension");
    std::vector<int> inv(pi.size(), -1);
    for (int i = 0; i < a.dim(); ++i) {
        if (pi[i] < 0 || pi[i] >= a.dim() || inv[pi[i]] != -1)
            throw Error(ErrorKind::InvalidArgument, "not a permutation");
        inv[pi[i]] = i;
    }
    std::vector<TensorEntry> entries;
    entries.reserve(a.nnz());
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        IndexTuple mapped(t.size());
        for (std::size_t s = 0; s < t.size(); ++s) mapped[s] = inv[t[s]];
        entries.push_back({std::move(mapped), a.value(e)});
    }
    return SparseTensor(a.order(), a.dim(), std::move(entries));
}

namespace detail {
inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
} // namespace detail

/// Folds lower-order nonnegative tensors B_p (2 <= p < m) into an m-order
/// (n+1)-dimensional tensor A' such that for all x, with y = (x, 1),
///   A' y^{m-1} = (A x^{m-1} - sum_p B_p x^{p-1}, 1).
///
/// Each B_p entry b_{i,j2..jp} contributes -b/C at every ordered placement
/// of (j2..jp) among the m-1 trailing slots, the remaining slots holding
/// the new index n; C = binomial(m-1, p-1) placements keep the identity
/// exact. Entries of repeated-order inputs landing on the same tuple are
/// accumulated.
inline SparseTensor embed_lower_order(const SparseTensor& a,
                                      const std::vector<SparseTensor>& lower) {
    const int m = a.order();
    const int n = a.dim();
    std::map<IndexTuple, double> acc;
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        acc[IndexTuple(t.begin(), t.end())] = a.value(e);
    }
    acc[IndexTuple(m, n)] = 1.0; // corner diagonal of the augmented block

    for (const auto& b : lower) {
        const int p = b.order();
        if (b.dim() != n)
            throw Error(ErrorKind::DimensionMismatch, "lower-order tensor dimension mismatch");
        if (p < 2 || p >= m)
            throw Error(ErrorKind::InvalidArgument, "lower-order tensor order must be in [2, m)");
        const double c = static_cast<double>(detail::binomial(m - 1, p - 1));
        for (int e = 0; e < b.nnz(); ++e) {
            auto t = b.index(e);
            if (b.value(e) < 0.0)
                throw Error(ErrorKind::InvalidArgument, "lower-order tensor must be nonnegative");
            const double w = -b.value(e) / c;
            // every ordered placement of t[1..p-1] among the m-1 trailing slots
            std::vector<int> slots(p - 1);
            for (int s = 0; s < p - 1; ++s) slots[s] = s;
            while (true) {
                IndexTuple tuple(m, n);
                tuple[0] = t[0];
                for (int s = 0; s < p - 1; ++s) tuple[1 + slots[s]] = t[1 + s];
                acc[tuple] += w;
                // next combination of positions
                int s = p - 2;
                while (s >= 0 && slots[s] == m - 2 - (p - 2 - s)) --s;
                if (s < 0) break;
                ++slots[s];
                for (int u = s + 1; u < p - 1; ++u) slots[u] = slots[u - 1] + 1;
            }
        }
    }

    std::vector<TensorEntry> entries;
    entries.reserve(acc.size());
    for (auto& [tuple, v] : acc)
        entries.push_back({tuple, v});
    return SparseTensor(m, n + 1, std::move(entries));
}

inline double inf_norm(const Vec& x) {
    double r = 0.0;
    for (double v : x) r = std::max(r, std::abs(v));
    return r;
}

inline double inf_dist(const Vec& x, const Vec& y) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::abs(x[i] - y[i]));
    return r;
}

} // namespace hob
