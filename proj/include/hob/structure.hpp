#pragma once

#include <map>
#include <optional>
#include <vector>

#include "hob/dominance.hpp"
#include "hob/graph.hpp"
#include "hob/solve.hpp"
#include "hob/tensor.hpp"

namespace hob {

enum class StrongM { StrongM, NotStrongM, Undecidable };

inline const char* strong_m_name(StrongM d) {
    switch (d) {
    case StrongM::StrongM:     return "StrongM";
    case StrongM::NotStrongM:  return "NotStrongM";
    case StrongM::Undecidable: return "Undecidable";
    }
    return "unknown";
}

struct StrongMResult {
    StrongM decision = StrongM::Undecidable;
    std::optional<Vec> zero_eigvec; // present iff NotStrongM
};

namespace detail {

/// Constructive zero eigenvector for a w.d.d. Z-tensor with nonnegative
/// diagonals that is not w.c.d.d. Rows split into J (strictly dominant),
/// W (reaching J by a walk) and the nonempty remainder R. If R is
/// everything, the all-ones vector already annihilates the tensor (every
/// row sum cancels exactly). Otherwise replace the rows of R by identity
/// rows, keep the rest, and solve that w.c.d.d. auxiliary system against
/// (1 on R, 0 elsewhere); the rhs is nudged by 1e-12 to stay in the
/// positive orthant, well below the verification tolerance.
inline Vec zero_eigenvector(const SparseTensor& a, const WcddResult& wcdd) {
    const int n = a.dim();
    const int m = a.order();
    std::vector<bool> in_r(n);
    bool all_r = true;
    for (int i = 0; i < n; ++i) {
        in_r[i] = !wcdd.reaches_j[i];
        all_r = all_r && in_r[i];
    }
    if (all_r) return Vec(n, 1.0);

    std::vector<TensorEntry> entries;
    for (int i = 0; i < n; ++i) {
        if (in_r[i]) {
            entries.push_back({IndexTuple(m, i), 1.0});
        } else {
            for (int e = a.row_begin(i); e < a.row_end(i); ++e) {
                auto t = a.index(e);
                entries.push_back({IndexTuple(t.begin(), t.end()), a.value(e)});
            }
        }
    }
    const SparseTensor aux(m, n, std::move(entries));

    const double eps = 1e-12;
    Vec rhs(n, eps);
    for (int i = 0; i < n; ++i)
        if (in_r[i]) rhs[i] = 1.0 + eps;

    SolveOptions opts;
    opts.assume_strong_m = true; // w.c.d.d. by construction
    opts.abs_tol = 1e-30;
    opts.rel_tol = 1e-13;
    opts.max_iters = 500;
    return solve_newton(aux, rhs, opts).x;
}

} // namespace detail

/// Decides strong M-ness for w.d.d. Z-tensors with nonnegative diagonals:
/// StrongM iff w.c.d.d.; otherwise NotStrongM together with a constructed
/// zero eigenvector. Outside that hypothesis the answer is Undecidable.
inline StrongMResult decide_strong_m(const SparseTensor& a, double slack_eps = 0.0) {
    StrongMResult r;
    if (!is_z_tensor(a) || !diag_nonneg(a)) return r;
    const DominanceResult dom = dominance(a, slack_eps);
    if (!dom.is_wdd) return r;
    const WcddResult wcdd = is_wcdd(a, dom, build_graph(a));
    if (wcdd.is_wcdd) {
        r.decision = StrongM::StrongM;
    } else {
        r.decision = StrongM::NotStrongM;
        r.zero_eigvec = detail::zero_eigenvector(a, wcdd);
    }
    return r;
}

struct ClassificationReport {
    int order = 0;
    int dim = 0;
    bool is_z = false;
    bool diag_nonneg = false;
    std::vector<double> row_slack;
    std::vector<int> sdd_rows; // J(A)
    bool is_wdd = false;
    bool is_sdd = false;
    bool is_wcdd = false;
    std::map<int, std::vector<int>> wcdd_witness; // row outside J -> walk ending in J
    bool is_weakly_irreducible = false;
    StrongM strong_m = StrongM::Undecidable;
    std::optional<Vec> zero_eigvec;
};

inline ClassificationReport classify(const SparseTensor& a, double slack_eps = 0.0) {
    ClassificationReport rep;
    rep.order = a.order();
    rep.dim = a.dim();
    rep.is_z = is_z_tensor(a);
    rep.diag_nonneg = hob::diag_nonneg(a);

    const DominanceResult dom = dominance(a, slack_eps);
    rep.row_slack = dom.slack;
    rep.sdd_rows = dom.sdd_rows;
    rep.is_wdd = dom.is_wdd;
    rep.is_sdd = dom.is_sdd;

    const TensorGraph g = build_graph(a);
    rep.is_weakly_irreducible = scc_count(g) == 1;

    const WcddResult wcdd = is_wcdd(a, dom, g);
    rep.is_wcdd = wcdd.is_wcdd;
    if (wcdd.is_wcdd) {
        for (int i = 0; i < a.dim(); ++i)
            if (!dom.in_j[i]) rep.wcdd_witness[i] = wcdd.walk(i);
    }

    if (rep.is_z && rep.diag_nonneg && rep.is_wdd) {
        if (rep.is_wcdd) {
            rep.strong_m = StrongM::StrongM;
        } else {
            rep.strong_m = StrongM::NotStrongM;
            rep.zero_eigvec = detail::zero_eigenvector(a, wcdd);
        }
    }
    return rep;
}

} // namespace hob
