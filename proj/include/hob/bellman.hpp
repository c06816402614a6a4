#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hob/solve.hpp"
#include "hob/structure.hpp"
#include "hob/tensor.hpp"

namespace hob {

/// A policy assigns one label per row; labels are indices into that row's
/// finite policy set.
using Policy = std::vector<int>;

struct PolicyHash {
    std::size_t operator()(const Policy& p) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (int v : p) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

using PolicySet = std::unordered_set<Policy, PolicyHash>;

/// Row of the operator for one (row, label) pair: the sparse entries with
/// that leading index, and the rhs entry.
struct PolicyRow {
    std::vector<TensorEntry> entries;
    double rhs = 0.0;
};

using RowGenerator = std::function<PolicyRow(int row, int label)>;

/// Row-decoupled family {A(P), b(P)}: row i depends only on the label
/// chosen for row i. Rows are generated once per (row, label) pair and
/// cached, which also pins down the decoupling.
class PolicyProblem {
public:
    PolicyProblem(int order, int dim, std::vector<int> policy_counts, RowGenerator generate,
                  std::vector<std::vector<std::string>> label_names = {})
        : order_(order), dim_(dim), counts_(std::move(policy_counts)),
          names_(std::move(label_names)) {
        if (order_ < 2) throw Error(ErrorKind::InvalidArgument, "order must be >= 2");
        if (dim_ < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
        if (static_cast<int>(counts_.size()) != dim_)
            throw Error(ErrorKind::InvalidArgument, "one policy count per row required");
        rows_.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            if (counts_[i] < 1)
                throw Error(ErrorKind::InvalidArgument, "every policy set must be nonempty");
            rows_[i].reserve(counts_[i]);
            for (int p = 0; p < counts_[i]; ++p) {
                PolicyRow row = generate(i, p);
                for (const auto& e : row.entries) {
                    if (static_cast<int>(e.idx.size()) != order_)
                        throw Error(ErrorKind::InvalidArgument, "row entry order mismatch");
                    if (e.idx[0] != i)
                        throw Error(ErrorKind::InvalidArgument,
                                    "row entry leading index must equal the row");
                    for (int j : e.idx)
                        if (j < 0 || j >= dim_)
                            throw Error(ErrorKind::IndexOutOfRange, "row entry index out of range");
                }
                if (!std::isfinite(row.rhs))
                    throw Error(ErrorKind::NonFiniteValue, "non-finite rhs entry");
                rows_[i].push_back(std::move(row));
            }
        }
    }

    int order() const noexcept { return order_; }
    int dim() const noexcept { return dim_; }
    int policy_count(int row) const { return counts_[row]; }
    const PolicyRow& row(int i, int label) const { return rows_[i][label]; }

    std::string label_name(int i, int label) const {
        if (i < static_cast<int>(names_.size()) && label < static_cast<int>(names_[i].size()))
            return names_[i][label];
        return std::to_string(label);
    }

    /// |P_1| * ... * |P_n|, saturating at cap.
    long long policy_space_size(long long cap = 1'000'000'000'000'000'000ll) const {
        long long s = 1;
        for (int c : counts_) {
            if (s > cap / c) return cap;
            s *= c;
        }
        return s;
    }

    void validate_policy(const Policy& p) const {
        if (static_cast<int>(p.size()) != dim_)
            throw Error(ErrorKind::InvalidArgument, "policy length must equal dimension");
        for (int i = 0; i < dim_; ++i)
            if (p[i] < 0 || p[i] >= counts_[i])
                throw Error(ErrorKind::InvalidArgument, "policy label out of range");
    }

private:
    int order_;
    int dim_;
    std::vector<int> counts_;
    std::vector<std::vector<PolicyRow>> rows_;
    std::vector<std::vector<std::string>> names_;
};

/// Assembled tensor equation for one policy.
inline std::pair<SparseTensor, Vec> assemble(const PolicyProblem& problem, const Policy& p) {
    problem.validate_policy(p);
    std::vector<TensorEntry> entries;
    Vec b(problem.dim());
    for (int i = 0; i < problem.dim(); ++i) {
        const PolicyRow& row = problem.row(i, p[i]);
        entries.insert(entries.end(), row.entries.begin(), row.entries.end());
        b[i] = row.rhs;
    }
    return {SparseTensor(problem.order(), problem.dim(), std::move(entries)), std::move(b)};
}

/// Per-row residuals (A(P) u^{m-1} - b(P))_i for every local label choice;
/// the coordinatewise minimum over policies decomposes row by row.
inline std::vector<std::vector<double>> local_residuals(const PolicyProblem& problem,
                                                        const Vec& u) {
    if (static_cast<int>(u.size()) != problem.dim())
        throw Error(ErrorKind::DimensionMismatch, "vector length does not match problem");
    std::vector<std::vector<double>> res(problem.dim());
    for (int i = 0; i < problem.dim(); ++i) {
        res[i].resize(problem.policy_count(i));
        for (int p = 0; p < problem.policy_count(i); ++p) {
            const PolicyRow& row = problem.row(i, p);
            double s = 0.0;
            for (const auto& e : row.entries) {
                double v = e.value;
                for (std::size_t t = 1; t < e.idx.size(); ++t) v *= u[e.idx[t]];
                s += v;
            }
            res[i][p] = s - row.rhs;
        }
    }
    return res;
}

/// min_P { A(P) u^{m-1} - b(P) } via rowwise minima.
inline Vec bellman_residual(const PolicyProblem& problem, const Vec& u) {
    const auto res = local_residuals(problem, u);
    Vec out(problem.dim());
    for (int i = 0; i < problem.dim(); ++i)
        out[i] = *std::min_element(res[i].begin(), res[i].end());
    return out;
}

namespace detail {

/// Enumerates choices[0] x choices[1] x ... lexicographically, calling
/// f(policy) until f returns true or max_probes candidates were tried.
/// Returns the accepted policy if any.
inline std::optional<Policy>
lex_search(const std::vector<std::vector<int>>& choices, long long max_probes,
           const std::function<bool(const Policy&)>& accept) {
    const int n = static_cast<int>(choices.size());
    std::vector<int> pos(n, 0);
    Policy p(n);
    for (long long probe = 0; probe < max_probes; ++probe) {
        for (int i = 0; i < n; ++i) p[i] = choices[i][pos[i]];
        if (accept(p)) return p;
        int i = n - 1;
        while (i >= 0 && pos[i] + 1 == static_cast<int>(choices[i].size())) pos[i--] = 0;
        if (i < 0) return std::nullopt; // product space exhausted
        ++pos[i];
    }
    return std::nullopt;
}

} // namespace detail

/// Locally optimal pivot rule: prefer an unvisited policy among the
/// rowwise argmins of A(P) u_prev^{m-1} - b(P) (ties broken by smallest
/// label); failing that, perturb the argmin policy at the smallest row
/// that admits an unvisited alternative (next label cyclically); failing
/// that, any unvisited policy in lexicographic order. Throws when every
/// policy has been visited.
inline Policy pivot_locally_optimal(const PolicyProblem& problem, const Vec& u_prev,
                                    const PolicySet& visited) {
    const int n = problem.dim();
    const auto res = local_residuals(problem, u_prev);

    Policy argmin(n);
    std::vector<std::vector<int>> ties(n);
    for (int i = 0; i < n; ++i) {
        const double best = *std::min_element(res[i].begin(), res[i].end());
        for (int p = 0; p < problem.policy_count(i); ++p)
            if (res[i][p] == best) ties[i].push_back(p);
        argmin[i] = ties[i].front();
    }
    if (!visited.count(argmin)) return argmin;

    const long long probes = static_cast<long long>(visited.size()) + 1;
    auto unvisited = [&](const Policy& p) { return visited.count(p) == 0; };

    // other members of the argmin set
    if (auto p = detail::lex_search(ties, probes, unvisited)) return *p;

    // single-row perturbations of the argmin policy
    for (int i = 0; i < n; ++i) {
        const int count = problem.policy_count(i);
        for (int off = 1; off < count; ++off) {
            Policy p = argmin;
            p[i] = (argmin[i] + off) % count;
            if (unvisited(p)) return p;
        }
    }

    // anything unvisited at all
    std::vector<std::vector<int>> full(n);
    for (int i = 0; i < n; ++i) {
        full[i].resize(problem.policy_count(i));
        for (int p = 0; p < problem.policy_count(i); ++p) full[i][p] = p;
    }
    if (auto p = detail::lex_search(full, probes, unvisited)) return *p;

    throw Error(ErrorKind::PoliciesExhausted, "no solution found");
}

struct BellmanIterate {
    Policy policy;
    Vec u;
    int inner_iterations = 0;
    double step_inf = 0.0;     // ||u_k - u_{k-1}||_inf
    double residual_inf = 0.0; // Bellman residual norm at u_k
};

struct BellmanReport {
    Vec u;
    Policy final_policy;
    int outer_iterations = 0;
    std::vector<int> inner_iteration_counts;
    double residual_inf = 0.0;
    long long visited_policy_count = 0;
    std::vector<BellmanIterate> history;
};

/// Policy iteration: pick an unvisited policy by the locally optimal
/// pivot, solve its tensor equation, stop once the Bellman residual is
/// within outer_tol or consecutive iterates agree to the relative rule
/// 1e-12 + 1e-6 ||u||. Each visited policy must assemble to a strong
/// M-tensor (checked lazily) with nonnegative rhs.
inline BellmanReport policy_iteration(const PolicyProblem& problem,
                                      SolveOptions solve_opts = {},
                                      std::optional<double> outer_tol = std::nullopt,
                                      int max_outer = 10000) {
    BellmanReport rep;
    Vec u_prev(problem.dim(), 0.0);
    PolicySet visited;
    double tol = outer_tol.value_or(-1.0);

    for (int k = 1; k <= max_outer; ++k) {
        Policy pk = pivot_locally_optimal(problem, u_prev, visited);
        visited.insert(pk);

        auto [a, b] = assemble(problem, pk);
        for (double v : b)
            if (v < 0.0)
                throw Error(ErrorKind::NegativeRhs, "policy produced a negative rhs entry");
        if (tol < 0.0) tol = 1e-8 * (1.0 + inf_norm(b));
        if (!detail::passes_strong_m(a))
            throw Error(ErrorKind::StructureViolation,
                        "policy tensor is not a w.c.d.d. strong M-tensor");

        SolveOptions inner = solve_opts;
        inner.assume_strong_m = true;
        const SolveReport sol = solve(a, b, inner);

        const double step = inf_dist(sol.x, u_prev);
        const double res = inf_norm(bellman_residual(problem, sol.x));

        rep.history.push_back({pk, sol.x, sol.iterations, step, res});
        rep.inner_iteration_counts.push_back(sol.iterations);
        rep.outer_iterations = k;

        const bool res_ok = res <= tol;
        const bool step_ok = step <= 1e-12 + 1e-6 * inf_norm(sol.x);
        if (res_ok || step_ok) {
            rep.u = sol.x;
            rep.final_policy = std::move(pk);
            rep.residual_inf = res;
            rep.visited_policy_count = static_cast<long long>(visited.size());
            return rep;
        }
        u_prev = sol.x;
    }
    throw Error(ErrorKind::MaxItersExceeded, "policy iteration did not converge");
}

/// Solutions dominate policy-evaluation iterates: u_star >= u_k up to a
/// 1e-10 slack, componentwise.
inline bool verify_domination(const PolicyProblem& problem, const Vec& u_star, const Vec& u_k,
                              const Policy& /*policy_k*/) {
    if (u_star.size() != u_k.size() ||
        static_cast<int>(u_star.size()) != problem.dim())
        throw Error(ErrorKind::DimensionMismatch, "vector length does not match problem");
    for (std::size_t i = 0; i < u_star.size(); ++i)
        if (u_star[i] < u_k[i] - 1e-10) return false;
    return true;
}

} // namespace hob
