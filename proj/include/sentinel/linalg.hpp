#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentinel/matrix.hpp"

namespace sentinel {

struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SymmetricEigen {
    std::vector<double> eigenvalues;  // descending
    DenseMatrix eigenvectors;         // orthonormal columns, column i pairs with eigenvalues[i]
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Converges when the off-diagonal Frobenius mass drops below 1e-12 * ||S||_F;
// capped at 100 sweeps. Fine for the <=100-dimensional matrices used here.
inline SymmetricEigen sym_eigen(const DenseMatrix& s) {
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n) throw std::invalid_argument("sym_eigen: matrix must be square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::abs(s(i, j) - s(j, i));
            const double scale = std::max({1.0, std::abs(s(i, j)), std::abs(s(j, i))});
            if (d > 1e-10 * scale)
                throw std::invalid_argument("sym_eigen: input not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
        }

    DenseMatrix a = s;
    // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = a(j, i) = m;
        }
    DenseMatrix v = DenseMatrix::identity(n);

    const double norm_s = frobenius_norm(a);
    const double stop = 1e-12 * norm_s;

    auto off_mass = [&]() {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) m += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(m);
    };

    bool converged = off_mass() <= stop;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double sign = tau >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - sn * akq;
                    a(k, q) = a(q, k) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
        converged = off_mass() <= stop;
    }
    if (!converged)
        throw std::runtime_error("sym_eigen: Jacobi iteration did not converge in 100 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

// Lower-triangular Cholesky factor L with L*L^T = S. Throws
// NotPositiveDefiniteError on a non-positive pivot; callers that can tolerate
// near-singular input should use cholesky_regularized.
inline DenseMatrix cholesky(const DenseMatrix& s) {
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n) throw std::invalid_argument("cholesky: matrix must be square");
    DenseMatrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = s(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(sum > 0.0) || !std::isfinite(sum))
                    throw NotPositiveDefiniteError("cholesky: non-positive pivot at index " +
                                                   std::to_string(i));
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

// Regularization contract shared with callers: when the raw factorization
// fails, retry once on S + eps*I with eps = 1e-9 * trace(S) / dim.
inline DenseMatrix cholesky_regularized(const DenseMatrix& s, bool* regularized = nullptr) {
    if (regularized) *regularized = false;
    try {
        return cholesky(s);
    } catch (const NotPositiveDefiniteError&) {
        const std::size_t n = s.rows();
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += s(i, i);
        const double eps = 1e-9 * trace / static_cast<double>(n);
        DenseMatrix reg = s;
        for (std::size_t i = 0; i < n; ++i) reg(i, i) += eps;
        DenseMatrix l = cholesky(reg);  // rethrows when regularization is not enough
        if (regularized) *regularized = true;
        return l;
    }
}

inline std::vector<double> forward_substitute(const DenseMatrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

inline std::vector<double> back_substitute_transposed(const DenseMatrix& l,
                                                      std::span<const double> y) {
    const std::size_t n = l.rows();
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

inline std::vector<double> solve_spd(const DenseMatrix& s, std::span<const double> b) {
    if (s.rows() != b.size()) throw std::invalid_argument("solve_spd: dimension mismatch");
    const DenseMatrix l = cholesky(s);
    return back_substitute_transposed(l, forward_substitute(l, b));
}

// (x - mu)^T (L L^T)^{-1} (x - mu) via one forward substitution.
inline double mahalanobis_sq(const DenseMatrix& l, std::span<const double> x,
                             std::span<const double> mu) {
    const std::size_t n = l.rows();
    if (x.size() != n || mu.size() != n)
        throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - mu[i];
    const std::vector<double> y = forward_substitute(l, d);
    double s = 0.0;
    for (double v : y) s += v * v;
    return s;
}

}  // namespace sentinel
