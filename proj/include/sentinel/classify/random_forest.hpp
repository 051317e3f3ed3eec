#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentinel/classify/knn.hpp"
#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::classify {

struct RfNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::uint32_t count_good = 0;
    std::uint32_t count_bad = 0;

    bool operator==(const RfNode&) const = default;
};

struct RandomForestModel {
    std::vector<std::vector<RfNode>> trees;
    std::size_t n_trees = 100;
    std::size_t max_features = 0;  // ceil(sqrt(d))
    std::uint64_t seed = 0;
};

namespace rf_detail {

// Binary Gini impurity written as 2*pg*pb: bit-identical under a class swap,
// which keeps split selection exactly label-symmetric.
inline double gini(std::size_t good, std::size_t bad) {
    const double n = static_cast<double>(good + bad);
    if (n == 0.0) return 0.0;
    const double pg = static_cast<double>(good) / n;
    const double pb = static_cast<double>(bad) / n;
    return 2.0 * pg * pb;
}

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Greedy Gini split over the sampled candidate features. Candidates iterate in
// ascending feature index and ascending threshold; only strictly better gain
// replaces the incumbent, which freezes the tie-break.
inline SplitChoice best_split(const DenseMatrix& x, const std::vector<SpectrumLabel>& y,
                              const std::vector<std::size_t>& samples,
                              const std::vector<std::size_t>& candidates) {
    const std::size_t n = samples.size();
    std::size_t total_good = 0;
    for (std::size_t i : samples) total_good += y[i] == SpectrumLabel::good;
    const double parent = gini(total_good, n - total_good);

    SplitChoice best;
    std::vector<std::pair<double, bool>> vals(n);  // (value, is_good)
    for (std::size_t f : candidates) {
        for (std::size_t i = 0; i < n; ++i)
            vals[i] = {x(samples[i], f), y[samples[i]] == SpectrumLabel::good};
        std::sort(vals.begin(), vals.end());

        std::size_t left_good = 0, left_n = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_good += vals[i].second;
            ++left_n;
            if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
            const std::size_t right_n = n - left_n;
            const std::size_t right_good = total_good - left_good;
            const double weighted =
                (static_cast<double>(left_n) * gini(left_good, left_n - left_good) +
                 static_cast<double>(right_n) * gini(right_good, right_n - right_good)) /
                static_cast<double>(n);
            const double gain = parent - weighted;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int build_node(std::vector<RfNode>& tree, const DenseMatrix& x,
                      const std::vector<SpectrumLabel>& y, std::vector<std::size_t> samples,
                      std::size_t max_features, Rng& rng) {
    const int node_id = static_cast<int>(tree.size());
    tree.emplace_back();
    std::size_t good = 0;
    for (std::size_t i : samples) good += y[i] == SpectrumLabel::good;
    tree[node_id].count_good = static_cast<std::uint32_t>(good);
    tree[node_id].count_bad = static_cast<std::uint32_t>(samples.size() - good);

    if (good == 0 || good == samples.size()) return node_id;  // pure leaf

    std::vector<std::size_t> candidates =
        rng.sample_without_replacement(x.cols(), max_features);
    std::sort(candidates.begin(), candidates.end());
    const SplitChoice split = best_split(x, y, samples, candidates);
    if (!split.found) return node_id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : samples)
        (x(i, split.feature) <= split.threshold ? left : right).push_back(i);
    if (left.empty() || right.empty()) return node_id;

    tree[node_id].feature = static_cast<int>(split.feature);
    tree[node_id].threshold = split.threshold;
    const int l = build_node(tree, x, y, std::move(left), max_features, rng);
    tree[node_id].left = l;
    const int r = build_node(tree, x, y, std::move(right), max_features, rng);
    tree[node_id].right = r;
    return node_id;
}

inline const RfNode& walk(const std::vector<RfNode>& tree, std::span<const double> q) {
    int node = 0;
    while (tree[node].feature >= 0)
        node = q[static_cast<std::size_t>(tree[node].feature)] <= tree[node].threshold
                   ? tree[node].left
                   : tree[node].right;
    return tree[node];
}

}  // namespace rf_detail

inline RandomForestModel rf_fit(const DenseMatrix& x, const std::vector<SpectrumLabel>& y,
                                std::size_t n_trees = 100, std::uint64_t seed = 0) {
    const std::size_t n = x.rows();
    if (n < 2 || x.rows() != y.size()) throw std::invalid_argument("rf_fit: bad training set");
    bool has_good = false, has_bad = false;
    for (SpectrumLabel l : y) {
        has_good |= l == SpectrumLabel::good;
        has_bad |= l == SpectrumLabel::bad;
    }
    if (!has_good || !has_bad)
        throw std::invalid_argument("rf_fit: training set must contain both classes");

    RandomForestModel m;
    m.n_trees = n_trees;
    m.seed = seed;
    m.max_features = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    m.trees.resize(n_trees);

    Rng root(seed);
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng = root.fork(t);
        std::vector<std::size_t> bootstrap(n);
        for (auto& i : bootstrap) i = rng.below(n);
        rf_detail::build_node(m.trees[t], x, y, std::move(bootstrap), m.max_features, rng);
    }
    return m;
}

// Majority of tree votes; each tree votes its leaf's majority class (good on
// an exactly tied leaf). The returned confidence is the vote fraction of the
// predicted label.
inline Prediction rf_predict(const RandomForestModel& m, std::span<const double> q) {
    std::size_t votes_good = 0;
    for (const auto& tree : m.trees) {
        const RfNode& leaf = rf_detail::walk(tree, q);
        votes_good += leaf.count_good >= leaf.count_bad;
    }
    Prediction p;
    p.label = 2 * votes_good >= m.trees.size() ? SpectrumLabel::good : SpectrumLabel::bad;
    const std::size_t votes =
        p.label == SpectrumLabel::good ? votes_good : m.trees.size() - votes_good;
    p.confidence = static_cast<double>(votes) / static_cast<double>(m.trees.size());
    return p;
}

}  // namespace sentinel::classify
