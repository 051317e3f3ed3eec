#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sentinel/rng.hpp"

namespace sentinel {

struct SplitAssignment {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

namespace detail {

inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    return idx;
}

inline std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace detail

// Random train/validation split; |train| = round-half-up(train_frac * n),
// remainder goes to validation, test stays empty.
inline SplitAssignment split_uniform(std::size_t n, double train_frac, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("split_uniform: need at least 2 items");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("split_uniform: train_frac must be in (0,1)");

    Rng rng(seed);
    const std::vector<std::size_t> idx = detail::shuffled_indices(n, rng);
    std::size_t n_train = detail::round_half_up(train_frac * static_cast<double>(n));
    n_train = std::max<std::size_t>(1, std::min(n_train, n));

    SplitAssignment out;
    out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    out.train = detail::sorted(std::move(out.train));
    out.validation = detail::sorted(std::move(out.validation));
    return out;
}

// Novelty-detection protocol: train on 80% of the normals only; validation
// gets 10% of normals plus half the anomalies; test gets the rest. Leftovers
// from rounding go to validation first.
inline SplitAssignment split_anomaly(const std::vector<std::size_t>& normals,
                                     const std::vector<std::size_t>& anomalies,
                                     std::uint64_t seed) {
    if (normals.size() < 5) throw std::invalid_argument("split_anomaly: need at least 5 normals");
    if (anomalies.size() < 2)
        throw std::invalid_argument("split_anomaly: need at least 2 anomalies");

    Rng rng(seed);
    std::vector<std::size_t> norm = normals;
    std::vector<std::size_t> anom = anomalies;
    rng.shuffle(norm);
    rng.shuffle(anom);

    const std::size_t n_train = detail::round_half_up(0.8 * static_cast<double>(norm.size()));
    const std::size_t remainder = norm.size() - n_train;
    const std::size_t n_val_norm = (remainder + 1) / 2;  // validation takes the odd one

    const std::size_t n_val_anom = detail::round_half_up(0.5 * static_cast<double>(anom.size()));

    SplitAssignment out;
    out.train.assign(norm.begin(), norm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(norm.begin() + static_cast<std::ptrdiff_t>(n_train),
                          norm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val_norm));
    out.test.assign(norm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val_norm), norm.end());
    out.validation.insert(out.validation.end(), anom.begin(),
                          anom.begin() + static_cast<std::ptrdiff_t>(n_val_anom));
    out.test.insert(out.test.end(), anom.begin() + static_cast<std::ptrdiff_t>(n_val_anom),
                    anom.end());

    out.train = detail::sorted(std::move(out.train));
    out.validation = detail::sorted(std::move(out.validation));
    out.test = detail::sorted(std::move(out.test));
    return out;
}

// Unique-validation protocol: a designated holdout group goes entirely to
// validation together with a sampled fraction of the remaining data. An empty
// holdout degenerates to split_uniform with train_frac = 1 - val_frac_of_rest.
inline SplitAssignment split_unique(std::size_t n, const std::vector<std::size_t>& holdout_group,
                                    double val_frac_of_rest, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("split_unique: need at least 2 items");
    if (!(val_frac_of_rest > 0.0 && val_frac_of_rest < 1.0))
        throw std::invalid_argument("split_unique: val_frac_of_rest must be in (0,1)");
    for (std::size_t h : holdout_group)
        if (h >= n) throw std::invalid_argument("split_unique: holdout index out of range");
    if (holdout_group.empty()) return split_uniform(n, 1.0 - val_frac_of_rest, seed);

    const std::unordered_set<std::size_t> holdout(holdout_group.begin(), holdout_group.end());
    if (holdout.size() >= n)
        throw std::invalid_argument("split_unique: holdout covers the entire dataset");

    std::vector<std::size_t> rest;
    rest.reserve(n - holdout.size());
    for (std::size_t i = 0; i < n; ++i)
        if (!holdout.count(i)) rest.push_back(i);

    Rng rng(seed);
    rng.shuffle(rest);
    const std::size_t n_samp =
        detail::round_half_up(val_frac_of_rest * static_cast<double>(rest.size()));

    SplitAssignment out;
    out.validation.assign(holdout.begin(), holdout.end());
    out.validation.insert(out.validation.end(), rest.begin(),
                          rest.begin() + static_cast<std::ptrdiff_t>(n_samp));
    out.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_samp), rest.end());

    out.train = detail::sorted(std::move(out.train));
    out.validation = detail::sorted(std::move(out.validation));
    return out;
}

}  // namespace sentinel
