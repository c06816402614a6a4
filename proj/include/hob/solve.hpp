#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hob/dominance.hpp"
#include "hob/graph.hpp"
#include "hob/linalg.hpp"
#include "hob/tensor.hpp"

namespace hob {

enum class SolveMethod { Newton, FixedPoint };

struct SolveOptions {
    SolveMethod method = SolveMethod::Newton;
    double abs_tol = 1e-24;
    double rel_tol = 1e-12;
    int max_iters = 100000;
    double damping_min = 1e-12;
    /// Skip the structural pre-check (caller vouches for strong M-ness).
    bool assume_strong_m = false;
};

struct SolveReport {
    Vec x;
    int iterations = 0;
    double residual_inf = 0.0;       // vs the original (unscaled) system
    std::vector<double> history;     // per-iterate step norms
    bool nonnegative_mode = false;   // rhs had zeros and was nudged positive
};

namespace detail {

inline void validate_options(const SolveOptions& o) {
    if (o.abs_tol < 0 || o.rel_tol < 0 || o.abs_tol + o.rel_tol <= 0)
        throw Error(ErrorKind::InvalidArgument, "need abs_tol + rel_tol > 0");
    if (o.max_iters < 1)
        throw Error(ErrorKind::InvalidArgument, "max_iters must be positive");
    if (!(o.damping_min > 0.0 && o.damping_min <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "damping_min must lie in (0, 1]");
}

inline void tensor_bandwidth(const SparseTensor& a, int& kl, int& ku) {
    kl = 0;
    ku = 0;
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        for (std::size_t s = 1; s < t.size(); ++s) {
            kl = std::max(kl, t[0] - t[s]);
            ku = std::max(ku, t[s] - t[0]);
        }
    }
}

inline BandMatrix jacobian_band(const SparseTensor& a, const Vec& x, int kl, int ku) {
    const int m = a.order();
    BandMatrix j(a.dim(), kl, ku);
    std::vector<double> pre(m), suf(m);
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        const double v = a.value(e);
        pre[1] = 1.0;
        for (int s = 2; s < m; ++s) pre[s] = pre[s - 1] * x[t[s - 1]];
        suf[m - 1] = 1.0;
        for (int s = m - 2; s >= 1; --s) suf[s] = suf[s + 1] * x[t[s + 1]];
        for (int s = 1; s < m; ++s)
            j.at(t[0], t[s]) += v * pre[s] * suf[s];
    }
    return j;
}

inline double band_inf_norm(const BandMatrix& b) {
    double r = 0.0;
    for (int i = 0; i < b.n; ++i) {
        double s = 0.0;
        for (int j = std::max(0, i - b.kl); j <= std::min(b.n - 1, i + b.ku); ++j)
            s += std::abs(b.get(i, j));
        r = std::max(r, s);
    }
    return r;
}

/// StrongM test without the eigenvector construction, used as a solver
/// pre-check.
inline bool passes_strong_m(const SparseTensor& a) {
    if (!is_z_tensor(a) || !diag_nonneg(a)) return false;
    const DominanceResult dom = dominance(a);
    if (!dom.is_wdd) return false;
    return is_wcdd(a, dom, build_graph(a)).is_wcdd;
}

} // namespace detail

/// Newton iteration on F(x) = A x^{m-1} - b from the supersolution start
/// x0 = tau * e, tau = max_i (b_i / y_i)^{1/(m-1)} with y = A e^{m-1};
/// rows where y vanishes fall back to the diagonal scale. Starting at or
/// above the solution keeps the iterates monotone in practice, so the
/// positivity safeguard (step halving with a floor) is an emergency path
/// only. A nonnegative b with zeros is nudged by
/// eps = 1e-10 * max(max b, 1) and the report flagged nonnegative_mode.
inline SolveReport solve_newton(const SparseTensor& a, const Vec& b, SolveOptions opts = {}) {
    detail::validate_options(opts);
    check_vec_dim(a, b);
    const int n = a.dim();
    const int m = a.order();

    bool has_zero = false;
    double bmax = 0.0;
    for (double v : b) {
        if (v < 0.0) throw Error(ErrorKind::NegativeRhs, "right hand side must be nonnegative");
        if (v == 0.0) has_zero = true;
        bmax = std::max(bmax, v);
    }
    Vec beff = b;
    SolveReport rep;
    if (has_zero) {
        const double eps = 1e-10 * std::max(bmax, 1.0);
        for (double& v : beff) v += eps;
        rep.nonnegative_mode = true;
    }

    if (!opts.assume_strong_m && !detail::passes_strong_m(a))
        throw Error(ErrorKind::StructureViolation,
                    "tensor is not a w.c.d.d. Z-tensor with nonnegative diagonals");

    const Vec y = contract(a, Vec(n, 1.0));
    double tau_pow = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a.diagonal(i);
        if (d <= 0.0)
            throw Error(ErrorKind::NonPositiveDiagonal, "non-positive diagonal entry");
        const double base = y[i] > 1e-12 * d ? y[i] : d;
        tau_pow = std::max(tau_pow, beff[i] / base);
    }
    Vec x(n, std::pow(tau_pow, 1.0 / (m - 1)));

    int kl = 0, ku = 0;
    detail::tensor_bandwidth(a, kl, ku);
    const bool banded = std::max(kl, ku) <= 2;

    for (int it = 1; it <= opts.max_iters; ++it) {
        Vec f = contract(a, x);
        for (int i = 0; i < n; ++i) f[i] = beff[i] - f[i]; // -F(x)
        Vec d;
        if (banded) {
            BandMatrix j = detail::jacobian_band(a, x, kl, ku);
            const double scale = detail::band_inf_norm(j);
            d = band_lu_solve(std::move(j), std::move(f), scale);
        } else {
            d = dense_lu_solve(jacobian(a, x), std::move(f));
        }
        double t = 1.0;
        auto stays_positive = [&](double tt) {
            for (int i = 0; i < n; ++i)
                if (x[i] + tt * d[i] <= 0.0) return false;
            return true;
        };
        while (!stays_positive(t)) {
            t *= 0.5;
            if (t < opts.damping_min)
                throw Error(ErrorKind::PositivityLost, "positivity safeguard exhausted");
        }
        double step = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xi = x[i] + t * d[i];
            step = std::max(step, std::abs(xi - x[i]));
            x[i] = xi;
        }
        rep.history.push_back(step);
        rep.iterations = it;
        if (step <= opts.abs_tol + opts.rel_tol * inf_norm(x)) {
            Vec r = contract(a, x);
            for (int i = 0; i < n; ++i) r[i] -= b[i];
            rep.residual_inf = inf_norm(r);
            rep.x = std::move(x);
            return rep;
        }
    }
    throw Error(ErrorKind::MaxItersExceeded, "Newton iteration did not converge");
}

/// Fixed-point iteration u <- ((I - Ahat) u^{m-1} + bhat)^{[1/(m-1)]} after
/// scaling each row by its diagonal. Strictly diagonally dominant tensors
/// iterate directly and must converge within max_iters. A w.c.d.d. tensor
/// goes through the vanishing diagonal shifts 10^-3, 10^-6, 10^-9, 10^-12
/// with warm starts and a max_iters budget per shift; the last iterate is
/// returned with its honest residual. The contraction rate of a shifted
/// system is only 1 - 10^-j, so deep shifts improve the iterate slowly;
/// the Newton method is the practical choice beyond strict dominance.
inline SolveReport solve_fixed_point(const SparseTensor& a, const Vec& b,
                                     SolveOptions opts = {}) {
    detail::validate_options(opts);
    check_vec_dim(a, b);
    const int n = a.dim();
    const int m = a.order();

    for (double v : b)
        if (v < 0.0) throw Error(ErrorKind::NegativeRhs, "right hand side must be nonnegative");

    Vec diag(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = a.diagonal(i);
        if (diag[i] <= 0.0)
            throw Error(ErrorKind::NonPositiveDiagonal, "non-positive diagonal entry");
    }

    // assume_strong_m skips the structural verification, but the choice
    // between direct iteration and the shift cascade still follows the
    // dominance pattern
    if (!opts.assume_strong_m && !is_z_tensor(a))
        throw Error(ErrorKind::StructureViolation, "tensor is not a Z-tensor");
    const DominanceResult dom = dominance(a);
    std::vector<double> shifts{0.0};
    bool budget_is_hard = true;
    if (!dom.is_sdd) {
        if (!opts.assume_strong_m &&
            !(dom.is_wdd && is_wcdd(a, dom, build_graph(a)).is_wcdd))
            throw Error(ErrorKind::StructureViolation,
                        "tensor is neither s.d.d. nor w.c.d.d.");
        shifts = {1e-3, 1e-6, 1e-9, 1e-12};
        budget_is_hard = false;
    }

    // row-scaled copy: unit diagonal
    std::vector<TensorEntry> scaled;
    scaled.reserve(a.nnz());
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        scaled.push_back({IndexTuple(t.begin(), t.end()), a.value(e) / diag[t[0]]});
    }
    const SparseTensor ahat(m, n, std::move(scaled));
    Vec bhat(n);
    for (int i = 0; i < n; ++i) bhat[i] = b[i] / diag[i];

    SolveReport rep;
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = std::pow(bhat[i], 1.0 / (m - 1));

    for (double s : shifts) {
        bool converged = false;
        for (int it = 1; it <= opts.max_iters; ++it) {
            const Vec c = contract(ahat, u);
            double step = 0.0;
            Vec unew(n);
            for (int i = 0; i < n; ++i) {
                const double um = std::pow(u[i], static_cast<double>(m - 1));
                const double v = um - (c[i] + s * um) / (1.0 + s) + bhat[i] / (1.0 + s);
                if (v < 0.0)
                    throw Error(ErrorKind::NegativeRadicand,
                                "negative radicand in fixed-point update");
                unew[i] = std::pow(v, 1.0 / (m - 1));
                step = std::max(step, std::abs(unew[i] - u[i]));
            }
            u = std::move(unew);
            rep.history.push_back(step);
            ++rep.iterations;
            if (step <= opts.abs_tol + opts.rel_tol * inf_norm(u)) {
                converged = true;
                break;
            }
        }
        if (!converged && budget_is_hard)
            throw Error(ErrorKind::MaxItersExceeded, "fixed-point iteration did not converge");
    }

    Vec r = contract(a, u);
    for (int i = 0; i < n; ++i) r[i] -= b[i];
    rep.residual_inf = inf_norm(r);
    rep.x = std::move(u);
    return rep;
}

inline SolveReport solve(const SparseTensor& a, const Vec& b, SolveOptions opts = {}) {
    return opts.method == SolveMethod::Newton ? solve_newton(a, b, opts)
                                              : solve_fixed_point(a, b, opts);
}

} // namespace hob
