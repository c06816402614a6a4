#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hob/error.hpp"
#include "hob/tensor.hpp"

namespace hob {

/// Band matrix in LAPACK-style storage: kl subdiagonals, ku superdiagonals,
/// plus kl spare superdiagonals for pivoting fill. Entry (i, j) lives at
/// row kl + ku + i - j of column j.
struct BandMatrix {
    int n = 0;
    int kl = 0;
    int ku = 0;
    std::vector<double> ab; // (2*kl + ku + 1) rows by n columns, column-major

    BandMatrix() = default;
    BandMatrix(int n_, int kl_, int ku_)
        : n(n_), kl(kl_), ku(ku_),
          ab(static_cast<std::size_t>(2 * kl_ + ku_ + 1) * n_, 0.0) {}

    double& at(int i, int j) {
        return ab[static_cast<std::size_t>(j) * (2 * kl + ku + 1) + (kl + ku + i - j)];
    }
    double get(int i, int j) const {
        if (j - i > ku + kl || i - j > kl) return 0.0;
        return ab[static_cast<std::size_t>(j) * (2 * kl + ku + 1) + (kl + ku + i - j)];
    }
};

namespace detail {

inline double matrix_inf_norm(const Matrix& a) {
    double r = 0.0;
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += std::abs(a(i, j));
        r = std::max(r, s);
    }
    return r;
}

} // namespace detail

/// Gaussian elimination with partial pivoting on a band matrix, solving in
/// place for a single right hand side. A pivot is declared singular when it
/// drops below 1e-14 times the given matrix scale.
inline Vec band_lu_solve(BandMatrix m, Vec r, double scale) {
    const int n = m.n;
    const double tol = 1e-14 * scale;
    for (int k = 0; k < n; ++k) {
        const int last_row = std::min(n - 1, k + m.kl);
        int piv = k;
        for (int i = k + 1; i <= last_row; ++i)
            if (std::abs(m.at(i, k)) > std::abs(m.at(piv, k))) piv = i;
        if (std::abs(m.at(piv, k)) <= tol)
            throw Error(ErrorKind::SingularMatrix, "numerically singular matrix");
        const int last_col = std::min(n - 1, k + m.kl + m.ku);
        if (piv != k) {
            for (int j = k; j <= last_col; ++j) std::swap(m.at(k, j), m.at(piv, j));
            std::swap(r[k], r[piv]);
        }
        for (int i = k + 1; i <= last_row; ++i) {
            const double l = m.at(i, k) / m.at(k, k);
            if (l == 0.0) continue;
            for (int j = k + 1; j <= last_col; ++j) m.at(i, j) -= l * m.at(k, j);
            r[i] -= l * r[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = r[i];
        const int last_col = std::min(n - 1, i + m.kl + m.ku);
        for (int j = i + 1; j <= last_col; ++j) s -= m.at(i, j) * r[j];
        r[i] = s / m.at(i, i);
    }
    return r;
}

/// Dense LU with partial pivoting, solving in place for a single right
/// hand side.
inline Vec dense_lu_solve(Matrix m, Vec r) {
    const int n = m.rows;
    if (m.rows != m.cols)
        throw Error(ErrorKind::InvalidArgument, "matrix must be square");
    const double tol = 1e-14 * detail::matrix_inf_norm(m);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (std::abs(m(piv, k)) <= tol)
            throw Error(ErrorKind::SingularMatrix, "numerically singular matrix");
        if (piv != k) {
            for (int j = k; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(r[k], r[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double l = m(i, k) / m(k, k);
            if (l == 0.0) continue;
            for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
            r[i] -= l * r[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = r[i];
        for (int j = i + 1; j < n; ++j) s -= m(i, j) * r[j];
        r[i] = s / m(i, i);
    }
    return r;
}

/// Direct solve J d = r. Uses banded elimination when the bandwidth is at
/// most 2 (the tridiagonal-like systems of the discretization schemes),
/// dense LU with partial pivoting otherwise.
inline Vec jacobian_solve(const Matrix& j, const Vec& r) {
    if (j.rows != j.cols)
        throw Error(ErrorKind::InvalidArgument, "matrix must be square");
    if (static_cast<int>(r.size()) != j.rows)
        throw Error(ErrorKind::DimensionMismatch, "rhs length does not match matrix");
    int kl = 0, ku = 0;
    for (int i = 0; i < j.rows; ++i)
        for (int c = 0; c < j.cols; ++c)
            if (j(i, c) != 0.0) {
                kl = std::max(kl, i - c);
                ku = std::max(ku, c - i);
            }
    if (std::max(kl, ku) <= 2) {
        BandMatrix b(j.rows, kl, ku);
        for (int i = 0; i < j.rows; ++i)
            for (int c = std::max(0, i - kl); c <= std::min(j.cols - 1, i + ku); ++c)
                b.at(i, c) = j(i, c);
        return band_lu_solve(std::move(b), r, detail::matrix_inf_norm(j));
    }
    return dense_lu_solve(j, r);
}

} // namespace hob
