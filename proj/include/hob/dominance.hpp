#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hob/tensor.hpp"

namespace hob {

/// Error-free accumulator for sums of doubles (Shewchuk-style expansion).
/// Keeps the exact sum as a list of nonoverlapping components so the sign
/// of the total can be read off exactly. Scheme assembly produces rows
/// whose dominance slack cancels exactly; naive summation would round.
class ExactSum {
public:
    void add(double b) {
        std::vector<double> h;
        h.reserve(parts_.size() + 1);
        double q = b;
        for (double c : parts_) {
            const double s = q + c;
            const double cv = s - q;
            const double err = (q - (s - cv)) + (c - cv);
            if (err != 0.0) h.push_back(err);
            q = s;
        }
        if (q != 0.0) h.push_back(q);
        parts_ = std::move(h);
    }

    /// Exact sign of the accumulated sum: -1, 0 or +1.
    int sign() const {
        if (parts_.empty()) return 0;
        return parts_.back() > 0.0 ? 1 : -1;
    }

    /// Nearest-double approximation of the accumulated sum.
    double value() const {
        double s = 0.0;
        for (double p : parts_) s += p;
        return s;
    }

private:
    std::vector<double> parts_; // nonoverlapping, increasing magnitude
};

/// True iff every stored off-diagonal entry is nonpositive.
inline bool is_z_tensor(const SparseTensor& a) {
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        const int i = t[0];
        const bool diag = std::all_of(t.begin(), t.end(), [i](int j) { return j == i; });
        if (!diag && a.value(e) > 0.0) return false;
    }
    return true;
}

/// True iff every diagonal entry (stored or implicit zero) is nonnegative.
inline bool diag_nonneg(const SparseTensor& a) {
    for (int i = 0; i < a.dim(); ++i)
        if (a.diagonal(i) < 0.0) return false;
    return true;
}

/// Per-row diagonal dominance report. Row i's slack is
/// |a_{i...i}| - sum of |off-diagonal entries in row i|; J(A) collects the
/// rows with positive slack (the strictly diagonally dominant ones).
struct DominanceResult {
    std::vector<double> slack; // approximate slack values, for reports
    std::vector<bool> in_j;
    std::vector<int> sdd_rows; // J(A), ascending
    bool is_wdd = true;
    bool is_sdd = true;
};

/// With slack_eps == 0 the slack sign is computed exactly on the stored
/// values (no epsilon), which scheme assembly relies on. A positive
/// slack_eps switches to approximate comparisons for noisy inputs.
inline DominanceResult dominance(const SparseTensor& a, double slack_eps = 0.0) {
    DominanceResult r;
    const int n = a.dim();
    r.slack.resize(n);
    r.in_j.assign(n, false);
    for (int i = 0; i < n; ++i) {
        ExactSum acc;
        for (int e = a.row_begin(i); e < a.row_end(i); ++e) {
            auto t = a.index(e);
            const bool diag = std::all_of(t.begin(), t.end(), [i](int j) { return j == i; });
            acc.add(diag ? std::abs(a.value(e)) : -std::abs(a.value(e)));
        }
        r.slack[i] = acc.value();
        bool sdd, wdd;
        if (slack_eps == 0.0) {
            const int sign = acc.sign();
            sdd = sign > 0;
            wdd = sign >= 0;
        } else {
            sdd = r.slack[i] > slack_eps;
            wdd = r.slack[i] >= -slack_eps;
        }
        if (sdd) {
            r.in_j[i] = true;
            r.sdd_rows.push_back(i);
        } else {
            r.is_sdd = false;
        }
        if (!wdd) r.is_wdd = false;
    }
    return r;
}

} // namespace hob
