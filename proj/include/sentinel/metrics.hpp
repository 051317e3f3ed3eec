#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentinel {

// Raised when a metric's denominator is zero. Returning 0 or NaN instead
// would silently corrupt tuning objectives, so it is always an error.
struct UndefinedMetricError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }

    bool operator==(const ConfusionMatrix&) const = default;
};

// Tally a binary confusion matrix with the designated positive class.
// Labels may be any equality-comparable type; anything that is not `positive`
// must be one single other value.
template <class L>
ConfusionMatrix confusion(const std::vector<L>& predicted, const std::vector<L>& actual,
                          const L& positive) {
    if (predicted.size() != actual.size())
        throw std::invalid_argument("confusion: predicted and actual lengths differ");
    if (predicted.empty()) throw std::invalid_argument("confusion: empty label sequences");

    bool have_negative = false;
    L negative{};
    auto check_binary = [&](const L& v) {
        if (v == positive) return;
        if (!have_negative) {
            negative = v;
            have_negative = true;
        } else if (!(v == negative)) {
            throw std::invalid_argument("confusion: more than two distinct labels");
        }
    };

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        check_binary(predicted[i]);
        check_binary(actual[i]);
        const bool p = predicted[i] == positive;
        const bool a = actual[i] == positive;
        if (p && a)
            ++cm.tp;
        else if (p && !a)
            ++cm.fp;
        else if (!p && a)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw UndefinedMetricError("accuracy: empty confusion matrix");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

inline double precision(const ConfusionMatrix& cm) {
    if (cm.tp + cm.fp == 0) throw UndefinedMetricError("precision: tp+fp is zero");
    return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
}

inline double recall(const ConfusionMatrix& cm) {
    if (cm.tp + cm.fn == 0) throw UndefinedMetricError("recall: tp+fn is zero");
    return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

inline double fdr(const ConfusionMatrix& cm) {
    if (cm.fp + cm.tp == 0) throw UndefinedMetricError("fdr: fp+tp is zero");
    return static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tp);
}

inline double f1(const ConfusionMatrix& cm) {
    const double denom = static_cast<double>(cm.tp) + 0.5 * static_cast<double>(cm.fp + cm.fn);
    if (denom == 0.0) throw UndefinedMetricError("f1: tp+fp+fn is zero");
    return static_cast<double>(cm.tp) / denom;
}

}  // namespace sentinel
