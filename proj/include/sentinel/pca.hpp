#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sentinel/linalg.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel {

struct PcaModel {
    std::vector<double> mean;                 // d
    DenseMatrix components;                   // k x d, rows orthonormal
    std::vector<double> explained_variance;   // k, descending, >= 0
    bool degenerate = false;                  // zero-variance input

    std::size_t k() const { return components.rows(); }
    std::size_t dim() const { return components.cols(); }
};

// Top-k eigenvectors of the sample covariance (divisor n-1) of mean-centered
// X. Deterministic sign convention: the largest-magnitude entry of each
// component is made positive (first such entry on ties).
inline PcaModel pca_fit(const DenseMatrix& x, std::size_t k) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min(n, d))
        throw std::invalid_argument("pca_fit: k out of range 1..min(n,d)");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += x(i, j);
    for (double& m : model.mean) m /= static_cast<double>(n);

    DenseMatrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = x(i, a) - model.mean[a];
            for (std::size_t b = a; b < d; ++b)
                cov(a, b) += xa * (x(i, b) - model.mean[b]);
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) cov(b, a) = cov(a, b) /= static_cast<double>(n - 1);

    double trace = 0.0;
    for (std::size_t a = 0; a < d; ++a) trace += cov(a, a);
    if (trace <= 0.0) {
        model.degenerate = true;
        model.components = DenseMatrix(k, d);
        for (std::size_t i = 0; i < k; ++i) model.components(i, i) = 1.0;
        model.explained_variance.assign(k, 0.0);
        return model;
    }

    const SymmetricEigen eig = sym_eigen(cov);
    model.components = DenseMatrix(k, d);
    model.explained_variance.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        model.explained_variance[j] = std::max(eig.eigenvalues[j], 0.0);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(eig.eigenvectors(i, j)) > std::abs(eig.eigenvectors(arg, j))) arg = i;
        const double sign = eig.eigenvectors(arg, j) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) model.components(j, i) = sign * eig.eigenvectors(i, j);
    }
    return model;
}

// Scores = (X - mean) * components^T.
inline DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x) {
    if (x.cols() != model.dim())
        throw std::invalid_argument("pca_transform: column count does not match model");
    DenseMatrix scores(x.rows(), model.k());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < model.k(); ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < model.dim(); ++a)
                s += (x(i, a) - model.mean[a]) * model.components(j, a);
            scores(i, j) = s;
        }
    return scores;
}

inline std::vector<double> pca_transform_row(const PcaModel& model, std::span<const double> x) {
    if (x.size() != model.dim())
        throw std::invalid_argument("pca_transform: dimension does not match model");
    std::vector<double> s(model.k(), 0.0);
    for (std::size_t j = 0; j < model.k(); ++j)
        for (std::size_t a = 0; a < model.dim(); ++a)
            s[j] += (x[a] - model.mean[a]) * model.components(j, a);
    return s;
}

}  // namespace sentinel
