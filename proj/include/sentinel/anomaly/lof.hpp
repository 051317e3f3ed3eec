#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentinel/anomaly/common.hpp"
#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel::anomaly {

// Local outlier factor in novelty mode: the training set is fixed at fit time
// and new points are always scored against it. Scores near 1 mean the point
// sits at the local density of its neighbors; larger means sparser.
struct LofModel {
    DenseMatrix train;
    std::size_t k_neighbors = 20;
    double contamination = 0.05;
    double threshold = 0.0;
    std::vector<double> kdist;         // k-distance per training point
    std::vector<double> lrd;           // local reachability density per training point
    std::vector<std::vector<std::size_t>> neighbors;  // k nearest per training point
    std::vector<double> train_scores;
};

namespace lof_detail {

constexpr double kDensityFloor = 1e-12;

// k nearest rows of `train` to `x`, excluding `exclude` (npos for queries).
inline std::vector<std::size_t> nearest(const DenseMatrix& train, std::span<const double> x,
                                        std::size_t k, std::size_t exclude) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train.rows());
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (i == exclude) continue;
        dist.emplace_back(euclidean(train.row(i), x), i);
    }
    std::sort(dist.begin(), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

}  // namespace lof_detail

inline LofModel lof_fit(const DenseMatrix& x_train, std::size_t k_neighbors,
                        double contamination) {
    const std::size_t n = x_train.rows();
    if (k_neighbors < 1 || k_neighbors >= n)
        throw std::invalid_argument("lof_fit: need 1 <= k_neighbors < training size");

    LofModel m;
    m.train = x_train;
    m.k_neighbors = k_neighbors;
    m.contamination = contamination;
    m.kdist.resize(n);
    m.lrd.resize(n);
    m.neighbors.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        m.neighbors[i] = lof_detail::nearest(x_train, x_train.row(i), k_neighbors, i);
        m.kdist[i] = euclidean(x_train.row(m.neighbors[i].back()), x_train.row(i));
    }
    for (std::size_t i = 0; i < n; ++i) {
        double reach_sum = 0.0;
        for (std::size_t o : m.neighbors[i])
            reach_sum += std::max(m.kdist[o], euclidean(x_train.row(i), x_train.row(o)));
        m.lrd[i] = static_cast<double>(k_neighbors) /
                   std::max(reach_sum, lof_detail::kDensityFloor);
    }
    m.train_scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lrd_sum = 0.0;
        for (std::size_t o : m.neighbors[i]) lrd_sum += m.lrd[o];
        m.train_scores[i] = lrd_sum / (static_cast<double>(k_neighbors) * m.lrd[i]);
    }
    m.threshold = threshold_from_scores(m.train_scores, contamination);
    return m;
}

inline double lof_score(const LofModel& m, std::span<const double> x) {
    if (x.size() != m.train.cols()) throw std::invalid_argument("lof_score: dimension mismatch");
    const std::vector<std::size_t> nn =
        lof_detail::nearest(m.train, x, m.k_neighbors, static_cast<std::size_t>(-1));
    double reach_sum = 0.0, lrd_sum = 0.0;
    for (std::size_t o : nn) {
        reach_sum += std::max(m.kdist[o], euclidean(m.train.row(o), x));
        lrd_sum += m.lrd[o];
    }
    const double lrd_x =
        static_cast<double>(m.k_neighbors) / std::max(reach_sum, lof_detail::kDensityFloor);
    return lrd_sum / (static_cast<double>(m.k_neighbors) * lrd_x);
}

inline SeriesLabel lof_predict(const LofModel& m, std::span<const double> x) {
    return lof_score(m, x) > m.threshold ? SeriesLabel::anomalous : SeriesLabel::normal;
}

}  // namespace sentinel::anomaly
