#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentinel/anomaly/common.hpp"
#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel::classify {

struct Prediction {
    SpectrumLabel label = SpectrumLabel::good;
    double confidence = 0.0;
};

struct KnnModel {
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    std::size_t k = 5;
};

inline KnnModel knn_fit(const DenseMatrix& x, const std::vector<SpectrumLabel>& y,
                        std::size_t k = 5) {
    if (x.rows() != y.size()) throw std::invalid_argument("knn_fit: rows/labels mismatch");
    if (k < 1 || k > x.rows()) throw std::invalid_argument("knn_fit: need 1 <= k <= n");
    return {x, y, k};
}

// Majority vote of the k nearest by Euclidean distance; vote ties go to the
// label of the single nearest neighbor.
inline Prediction knn_predict(const KnnModel& m, std::span<const double> q) {
    if (q.size() != m.x.cols()) throw std::invalid_argument("knn_predict: dimension mismatch");
    std::vector<std::pair<double, std::size_t>> dist(m.x.rows());
    for (std::size_t i = 0; i < m.x.rows(); ++i)
        dist[i] = {anomaly::euclidean(m.x.row(i), q), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m.k), dist.end());

    std::size_t good = 0;
    for (std::size_t i = 0; i < m.k; ++i) good += m.y[dist[i].second] == SpectrumLabel::good;
    const std::size_t bad = m.k - good;

    Prediction p;
    if (good == bad)
        p.label = m.y[dist[0].second];
    else
        p.label = good > bad ? SpectrumLabel::good : SpectrumLabel::bad;
    p.confidence = static_cast<double>(p.label == SpectrumLabel::good ? good : bad) /
                   static_cast<double>(m.k);
    return p;
}

}  // namespace sentinel::classify
