#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace sentinel::anomaly {

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Decision threshold at the (1 - contamination) quantile of training scores:
// with distinct scores, exactly floor(contamination * n) training points score
// strictly above it.
inline double threshold_from_scores(std::vector<double> scores, double contamination) {
    if (!(contamination > 0.0 && contamination < 0.5))
        throw std::invalid_argument("contamination must be in (0, 0.5)");
    if (scores.empty()) throw std::invalid_argument("threshold_from_scores: no scores");
    const std::size_t n = scores.size();
    const std::size_t n_flag =
        static_cast<std::size_t>(std::floor(contamination * static_cast<double>(n) + 1e-9));
    std::sort(scores.begin(), scores.end());
    return scores[n - n_flag - 1];
}

}  // namespace sentinel::anomaly
