#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentinel/anomaly/common.hpp"
#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::anomaly {

struct IforestNode {
    int feature = -1;   // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;       // samples that reached this node (recorded at leaves)

    bool operator==(const IforestNode&) const = default;
};

struct IforestTree {
    std::vector<IforestNode> nodes;  // node 0 is the root

    bool operator==(const IforestTree&) const = default;
};

struct IforestModel {
    std::vector<IforestTree> trees;
    std::size_t n_trees = 100;
    std::size_t subsample = 256;  // actual per-tree sample size
    double contamination = 0.05;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    bool degenerate = false;  // constant dataset: every tree is a single leaf
};

// Average path length of an unsuccessful BST search in a tree of m points,
// the standard normalizer: c(m) = 2 H(m-1) - 2 (m-1)/m, c(1) = c(0) = 0.
inline double iforest_c_factor(std::size_t m) {
    if (m < 2) return 0.0;
    double harmonic = 0.0;
    for (std::size_t i = 1; i < m; ++i) harmonic += 1.0 / static_cast<double>(i);
    return 2.0 * harmonic -
           2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
}

namespace iforest_detail {

inline int build_node(IforestTree& tree, const DenseMatrix& x,
                      std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi,
                      std::size_t depth, std::size_t depth_cap, Rng& rng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].size = static_cast<int>(hi - lo);

    if (hi - lo <= 1 || depth >= depth_cap) return node_id;

    // candidate features are those not constant within this node
    std::vector<std::size_t> candidates;
    std::vector<std::pair<double, double>> ranges(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        double mn = x(idx[lo], f), mx = mn;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            mn = std::min(mn, x(idx[i], f));
            mx = std::max(mx, x(idx[i], f));
        }
        ranges[f] = {mn, mx};
        if (mx > mn) candidates.push_back(f);
    }
    if (candidates.empty()) return node_id;  // all samples identical

    const std::size_t f = candidates[rng.below(candidates.size())];
    const auto [mn, mx] = ranges[f];
    const double split = mn + rng.uniform() * (mx - mn);

    // partition idx[lo, hi): < split left, >= split right
    std::size_t mid = lo;
    for (std::size_t i = lo; i < hi; ++i)
        if (x(idx[i], f) < split) std::swap(idx[i], idx[mid++]);
    if (mid == lo || mid == hi) return node_id;  // degenerate draw at the boundary

    tree.nodes[node_id].feature = static_cast<int>(f);
    tree.nodes[node_id].split = split;
    const int left = build_node(tree, x, idx, lo, mid, depth + 1, depth_cap, rng);
    tree.nodes[node_id].left = left;
    const int right = build_node(tree, x, idx, mid, hi, depth + 1, depth_cap, rng);
    tree.nodes[node_id].right = right;
    return node_id;
}

inline double path_length(const IforestTree& tree, std::span<const double> x) {
    std::size_t depth = 0;
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
        node = x[static_cast<std::size_t>(tree.nodes[node].feature)] < tree.nodes[node].split
                   ? tree.nodes[node].left
                   : tree.nodes[node].right;
        ++depth;
    }
    return static_cast<double>(depth) +
           iforest_c_factor(static_cast<std::size_t>(tree.nodes[node].size));
}

}  // namespace iforest_detail

inline double iforest_score(const IforestModel& m, std::span<const double> x);

inline IforestModel iforest_fit(const DenseMatrix& x_train, std::size_t n_trees,
                                std::size_t subsample, double contamination,
                                std::uint64_t seed) {
    const std::size_t n = x_train.rows();
    if (n < 4) throw std::invalid_argument("iforest_fit: need at least 4 training points");
    if (n_trees < 1) throw std::invalid_argument("iforest_fit: need at least 1 tree");

    IforestModel m;
    m.n_trees = n_trees;
    m.subsample = std::min(subsample, n);
    m.contamination = contamination;
    m.seed = seed;
    const std::size_t depth_cap = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(m.subsample, 2)))));

    Rng root(seed);
    m.trees.resize(n_trees);
    bool all_single_leaf = true;
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng = root.fork(t);
        std::vector<std::size_t> idx = rng.sample_without_replacement(n, m.subsample);
        iforest_detail::build_node(m.trees[t], x_train, idx, 0, idx.size(), 0, depth_cap, rng);
        if (m.trees[t].nodes[0].feature >= 0) all_single_leaf = false;
    }
    m.degenerate = all_single_leaf;

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = iforest_score(m, x_train.row(i));
    m.threshold = threshold_from_scores(scores, contamination);
    return m;
}

inline IforestModel iforest_fit(const DenseMatrix& x_train, double contamination,
                                std::uint64_t seed) {
    return iforest_fit(x_train, 100, std::min<std::size_t>(256, x_train.rows()), contamination,
                       seed);
}

// s = 2^(-E[h] / c(subsample)), in (0, 1]; E[h] = c(subsample) gives exactly 0.5.
inline double iforest_score(const IforestModel& m, std::span<const double> x) {
    double sum = 0.0;
    for (const auto& tree : m.trees) sum += iforest_detail::path_length(tree, x);
    const double mean_path = sum / static_cast<double>(m.trees.size());
    return std::pow(2.0, -mean_path / iforest_c_factor(m.subsample));
}

inline SeriesLabel iforest_predict(const IforestModel& m, std::span<const double> x) {
    return iforest_score(m, x) > m.threshold ? SeriesLabel::anomalous : SeriesLabel::normal;
}

}  // namespace sentinel::anomaly
