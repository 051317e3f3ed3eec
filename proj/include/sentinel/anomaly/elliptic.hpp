#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentinel/anomaly/common.hpp"
#include "sentinel/data.hpp"
#include "sentinel/linalg.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::anomaly {

// Elliptical envelope around a robust center/covariance estimate. The
// estimator is a concentration-step approximation of minimum covariance
// determinant: from seeded random subsets of size ceil(support_fraction * n),
// alternate (mean/cov of subset -> keep the h points with smallest Mahalanobis
// distance) to a fixed point and keep the lowest-determinant solution.
struct EeModel {
    std::vector<double> center;
    DenseMatrix covariance;
    DenseMatrix chol;  // cached factor, possibly of the regularized covariance
    double threshold = 0.0;
    double contamination = 0.05;
    double support_fraction = 0.8;
    bool regularized = false;
};

namespace ee_detail {

struct Estimate {
    std::vector<double> mean;
    DenseMatrix cov;
    DenseMatrix chol;
    bool regularized = false;
};

inline Estimate estimate(const DenseMatrix& x, const std::vector<std::size_t>& subset) {
    const std::size_t d = x.cols(), h = subset.size();
    Estimate e;
    e.mean.assign(d, 0.0);
    for (std::size_t i : subset)
        for (std::size_t j = 0; j < d; ++j) e.mean[j] += x(i, j);
    for (double& v : e.mean) v /= static_cast<double>(h);

    e.cov = DenseMatrix(d, d);
    for (std::size_t i : subset)
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = x(i, a) - e.mean[a];
            for (std::size_t b = a; b < d; ++b) e.cov(a, b) += xa * (x(i, b) - e.mean[b]);
        }
    const double div = static_cast<double>(h > 1 ? h - 1 : 1);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) e.cov(b, a) = e.cov(a, b) /= div;

    e.chol = cholesky_regularized(e.cov, &e.regularized);
    return e;
}

inline double log_det(const DenseMatrix& chol) {
    double s = 0.0;
    for (std::size_t i = 0; i < chol.rows(); ++i) s += std::log(chol(i, i));
    return 2.0 * s;
}

// h points with smallest squared Mahalanobis distance, ties by index.
inline std::vector<std::size_t> concentrate(const DenseMatrix& x, const Estimate& e,
                                            std::size_t h) {
    std::vector<std::pair<double, std::size_t>> scored(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        scored[i] = {mahalanobis_sq(e.chol, x.row(i), e.mean), i};
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> subset(h);
    for (std::size_t i = 0; i < h; ++i) subset[i] = scored[i].second;
    std::sort(subset.begin(), subset.end());
    return subset;
}

}  // namespace ee_detail

inline EeModel ee_fit(const DenseMatrix& x_train, double contamination,
                      double support_fraction = 0.8, std::uint64_t seed = 0,
                      std::size_t n_restarts = 20) {
    const std::size_t n = x_train.rows(), d = x_train.cols();
    if (n <= 2 * d)
        throw std::invalid_argument("ee_fit: need more than 2*d training points");
    if (!(support_fraction > 0.0 && support_fraction <= 1.0))
        throw std::invalid_argument("ee_fit: support_fraction must be in (0, 1]");
    const std::size_t h = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(support_fraction * static_cast<double>(n))));

    Rng root(seed);
    bool have_best = false;
    double best_det = 0.0;
    ee_detail::Estimate best;

    for (std::size_t r = 0; r < n_restarts; ++r) {
        Rng rng = root.fork(r);
        std::vector<std::size_t> subset = rng.sample_without_replacement(n, h);
        std::sort(subset.begin(), subset.end());

        ee_detail::Estimate est = ee_detail::estimate(x_train, subset);
        for (int step = 0; step < 100; ++step) {
            std::vector<std::size_t> next = ee_detail::concentrate(x_train, est, h);
            if (next == subset) break;
            subset = std::move(next);
            est = ee_detail::estimate(x_train, subset);
        }
        const double det = ee_detail::log_det(est.chol);
        if (!have_best || det < best_det) {
            have_best = true;
            best_det = det;
            best = std::move(est);
        }
    }

    EeModel m;
    m.center = best.mean;
    m.covariance = best.cov;
    m.chol = best.chol;
    m.regularized = best.regularized;
    m.contamination = contamination;
    m.support_fraction = support_fraction;

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i)
        scores[i] = mahalanobis_sq(m.chol, x_train.row(i), m.center);
    m.threshold = threshold_from_scores(scores, contamination);
    return m;
}

inline double ee_score(const EeModel& m, std::span<const double> x) {
    if (x.size() != m.center.size()) throw std::invalid_argument("ee_score: dimension mismatch");
    return mahalanobis_sq(m.chol, x, m.center);
}

inline SeriesLabel ee_predict(const EeModel& m, std::span<const double> x) {
    return ee_score(m, x) > m.threshold ? SeriesLabel::anomalous : SeriesLabel::normal;
}

}  // namespace sentinel::anomaly
