#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel {

inline constexpr const char* kXpcsSchemaVersion = "xpcs-93/v1";
inline constexpr const char* kXafsSchemaVersion = "xafs-20/v1";

enum class ChannelKind { intensity_like, position_like };

// com_x and com_y carry absolute peak positions and keep their displacement
// scale; everything else is magnitude-like and gets mean-normalized.
inline ChannelKind channel_kind(std::size_t channel_index) {
    return (channel_index == 2 || channel_index == 3) ? ChannelKind::position_like
                                                      : ChannelKind::intensity_like;
}

struct XpcsFeatureVector {
    std::vector<double> values;  // exactly 93
    std::string schema_version = kXpcsSchemaVersion;
    std::array<bool, TimeSeriesBundle::kChannels> channel_flags{};

    std::size_t flagged_channels() const {
        std::size_t n = 0;
        for (bool f : channel_flags) n += f;
        return n;
    }
};

struct XafsFeatureVector {
    std::vector<double> values;  // exactly 20
    std::string schema_version = kXafsSchemaVersion;
    bool flagged = false;
};

namespace stats {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Sample standard deviation (divisor n-1); 0 for fewer than two points.
inline double stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

inline double median(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolated quantile on sorted order statistics (q = (n-1)*p).
inline double quantile(std::span<const double> x, double p) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const double q = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(q));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = q - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

inline std::vector<double> first_difference(std::span<const double> x) {
    std::vector<double> d(x.size() > 1 ? x.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
    return d;
}

// Least-squares slope of x against normalized time t = i/(n-1); measures the
// total drift across the scan independent of its length.
inline double trend_slope(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double tm = 0.5;  // mean of t over [0,1] uniform
    const double xm = mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        num += (t - tm) * (x[i] - xm);
        den += (t - tm) * (t - tm);
    }
    return den > 0.0 ? num / den : 0.0;
}

inline double mean_head(std::span<const double> x, std::size_t k = 5) {
    const std::size_t n = std::min(k, x.size());
    return mean(x.subspan(0, n));
}

inline double mean_tail(std::span<const double> x, std::size_t k = 5) {
    const std::size_t n = std::min(k, x.size());
    return mean(x.subspan(x.size() - n, n));
}

}  // namespace stats

struct PreprocessedChannel {
    std::vector<double> series;
    bool flagged = false;
};

// Centering (both kinds) and mean-normalization (intensity-like only, since
// absolute peak displacements are meaningful). A zero mean on an intensity
// channel degrades to centering with the quality flag set.
inline PreprocessedChannel preprocess_channel(std::span<const double> series, ChannelKind kind) {
    if (series.size() < 2)
        throw std::invalid_argument("preprocess_channel: need at least 2 points");
    PreprocessedChannel out;
    const double m = stats::mean(series);
    out.series.resize(series.size());
    if (kind == ChannelKind::position_like) {
        for (std::size_t i = 0; i < series.size(); ++i) out.series[i] = series[i] - m;
        return out;
    }
    if (m == 0.0) {
        out.flagged = true;
        for (std::size_t i = 0; i < series.size(); ++i) out.series[i] = series[i];
        return out;
    }
    for (std::size_t i = 0; i < series.size(); ++i) out.series[i] = (series[i] - m) / m;
    return out;
}

// Pearson correlation between series[:-lag] and series[lag:]; 0 with the flag
// set when either window has zero variance.
inline double autocorr(std::span<const double> series, std::size_t lag, bool* flag = nullptr) {
    if (lag < 1) throw std::invalid_argument("autocorr: lag must be >= 1");
    if (lag >= series.size()) throw std::invalid_argument("autocorr: lag >= series length");
    const std::size_t n = series.size() - lag;
    const std::span<const double> a = series.subspan(0, n);
    const std::span<const double> b = series.subspan(lag, n);
    const double ma = stats::mean(a), mb = stats::mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        if (flag) *flag = true;
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

inline constexpr std::size_t kXpcsPerChannelStats = 15;
inline constexpr std::size_t kXpcsFeatureCount =
    TimeSeriesBundle::kChannels * kXpcsPerChannelStats + 3;
static_assert(kXpcsFeatureCount == 93);

inline constexpr std::array<const char*, kXpcsPerChannelStats> kXpcsStatNames = {
    "dispersion",           // std of the preprocessed series; equals std/mean of
                            // the raw series for intensity-like channels
    "autocorr_lag1", "autocorr_lag2", "autocorr_lag3", "autocorr_lag4",
    "std_over_diff_std",    // std(x) / std(first difference)
    "end_minus_begin",      // mean(last 5) - mean(first 5)
    "mean_abs_diff",
    "max_abs_dev_from_median",
    "trend_slope",          // least-squares slope against t in [0,1]
    "frac_beyond_3std",
    "half_std_ratio",       // std(first half) / std(second half)
    "range_over_std",
    "median",
    "iqr",
};

// The frozen 93-slot XPCS feature schema: 15 statistics per channel on the
// preprocessed series (6 x 15 = 90) plus log-length, the raw total-intensity
// begin/end ratio, and the count of channels with quality flags. Degenerate
// statistics never raise; divide-by-zero slots become 0 with the channel flag
// set.
inline XpcsFeatureVector xpcs_features(const TimeSeriesBundle& bundle) {
    bundle.validate();
    XpcsFeatureVector out;
    out.values.assign(kXpcsFeatureCount, 0.0);

    for (std::size_t c = 0; c < TimeSeriesBundle::kChannels; ++c) {
        PreprocessedChannel pre = preprocess_channel(bundle.channels[c], channel_kind(c));
        bool flag = pre.flagged;
        const std::span<const double> y(pre.series);
        const std::size_t base = c * kXpcsPerChannelStats;

        const double sd = stats::stddev(y);
        out.values[base + 0] = sd;
        for (std::size_t lag = 1; lag <= 4; ++lag)
            out.values[base + lag] = autocorr(y, lag, &flag);

        const std::vector<double> dy = stats::first_difference(y);
        const double sd_dy = stats::stddev(dy);
        if (sd_dy > 0.0) {
            out.values[base + 5] = sd / sd_dy;
        } else {
            out.values[base + 5] = 0.0;
            flag = true;
        }

        out.values[base + 6] = stats::mean_tail(y) - stats::mean_head(y);

        double mad = 0.0;
        for (double v : dy) mad += std::abs(v);
        out.values[base + 7] = dy.empty() ? 0.0 : mad / static_cast<double>(dy.size());

        const double med = stats::median(y);
        double maxdev = 0.0;
        for (double v : y) maxdev = std::max(maxdev, std::abs(v - med));
        out.values[base + 8] = maxdev;

        out.values[base + 9] = stats::trend_slope(y);

        const double m = stats::mean(y);
        std::size_t beyond = 0;
        for (double v : y) beyond += std::abs(v - m) > 3.0 * sd;
        out.values[base + 10] = static_cast<double>(beyond) / static_cast<double>(y.size());

        const std::size_t half = y.size() / 2;
        const double sd1 = stats::stddev(y.subspan(0, half));
        const double sd2 = stats::stddev(y.subspan(half));
        if (sd2 > 0.0) {
            out.values[base + 11] = sd1 / sd2;
        } else {
            out.values[base + 11] = 0.0;
            flag = true;
        }

        const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
        if (sd > 0.0) {
            out.values[base + 12] = (*mx - *mn) / sd;
        } else {
            out.values[base + 12] = 0.0;
            flag = true;
        }

        out.values[base + 13] = med;
        out.values[base + 14] = stats::quantile(y, 0.75) - stats::quantile(y, 0.25);

        out.channel_flags[c] = flag;
    }

    const std::size_t g = TimeSeriesBundle::kChannels * kXpcsPerChannelStats;
    out.values[g + 0] = std::log(static_cast<double>(bundle.length()));
    const std::span<const double> raw_ti(bundle.channels[0]);
    const double tail = stats::mean_tail(raw_ti);
    out.values[g + 1] = tail != 0.0 ? stats::mean_head(raw_ti) / tail : 0.0;
    out.values[g + 2] = static_cast<double>(out.flagged_channels());

    for (double v : out.values)
        if (!std::isfinite(v)) throw std::logic_error("xpcs_features: non-finite feature");
    return out;
}

// Linear resampling onto a uniform grid spanning the original bounds; the
// energy bounds are never adjusted and the endpoints are preserved exactly.
inline Spectrum1D downsample_spectrum(const Spectrum1D& s, std::size_t target = 400) {
    s.validate();
    if (target < 2) throw std::invalid_argument("downsample_spectrum: target must be >= 2");

    Spectrum1D out;
    out.meta = s.meta;
    out.label = s.label;
    out.grid.resize(target);
    out.intensity.resize(target);

    const double lo = s.grid.front(), hi = s.grid.back();
    const double step = (hi - lo) / static_cast<double>(target - 1);
    for (std::size_t i = 0; i < target; ++i)
        out.grid[i] = lo + static_cast<double>(i) * step;
    out.grid.back() = hi;

    std::size_t seg = 0;
    for (std::size_t i = 0; i < target; ++i) {
        const double x = out.grid[i];
        while (seg + 2 < s.grid.size() && s.grid[seg + 1] <= x) ++seg;
        const double x0 = s.grid[seg], x1 = s.grid[seg + 1];
        const double t = (x - x0) / (x1 - x0);
        out.intensity[i] = s.intensity[seg] + t * (s.intensity[seg + 1] - s.intensity[seg]);
    }
    out.intensity.front() = s.intensity.front();
    out.intensity.back() = s.intensity.back();
    return out;
}

inline constexpr std::array<const char*, 10> kXafsStatNames = {
    "autocorr_lag1", "autocorr_lag2", "autocorr_lag3", "autocorr_lag4",
    "mean_first5",   "mean_last5",    "mean",          "std",
    "sum",           "argmax_fraction",
};

// Ten statistics on the 400-point spectrum and the same ten on its first
// forward difference (padded by repeating the last value to stay length 400).
// The argmax location is a fractional index in [0,1], first maximum wins.
inline XafsFeatureVector xafs_features(const Spectrum1D& s) {
    if (s.intensity.size() != 400)
        throw std::invalid_argument("xafs_features: expected a 400-point spectrum, got " +
                                    std::to_string(s.intensity.size()));

    XafsFeatureVector out;
    out.values.reserve(20);

    auto push_stats = [&out](std::span<const double> x) {
        bool flag = false;
        for (std::size_t lag = 1; lag <= 4; ++lag) out.values.push_back(autocorr(x, lag, &flag));
        out.values.push_back(stats::mean_head(x));
        out.values.push_back(stats::mean_tail(x));
        out.values.push_back(stats::mean(x));
        out.values.push_back(stats::stddev(x));
        double sum = 0.0;
        for (double v : x) sum += v;
        out.values.push_back(sum);
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (x[i] > x[argmax]) argmax = i;
        out.values.push_back(static_cast<double>(argmax) / static_cast<double>(x.size() - 1));
        out.flagged = out.flagged || flag;
    };

    push_stats(s.intensity);

    std::vector<double> deriv = stats::first_difference(s.intensity);
    deriv.push_back(deriv.back());
    push_stats(deriv);

    for (double v : out.values)
        if (!std::isfinite(v)) throw std::logic_error("xafs_features: non-finite feature");
    return out;
}

// Per-feature scaling by the training maxima of absolute values; features that
// are constant zero across training get divisor 1.
struct FeatureNormalizer {
    std::vector<double> maxima;

    std::vector<double> apply(std::span<const double> v) const {
        if (v.size() != maxima.size())
            throw std::invalid_argument("FeatureNormalizer: dimension mismatch");
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / maxima[i];
        return out;
    }

    DenseMatrix apply(const DenseMatrix& x) const {
        DenseMatrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const std::vector<double> row = apply(x.row(i));
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = row[j];
        }
        return out;
    }
};

inline FeatureNormalizer fit_normalizer(const DenseMatrix& train) {
    if (train.rows() == 0) throw std::invalid_argument("fit_normalizer: empty training set");
    FeatureNormalizer norm;
    norm.maxima.assign(train.cols(), 0.0);
    for (std::size_t i = 0; i < train.rows(); ++i)
        for (std::size_t j = 0; j < train.cols(); ++j)
            norm.maxima[j] = std::max(norm.maxima[j], std::abs(train(i, j)));
    for (double& m : norm.maxima)
        if (m == 0.0) m = 1.0;
    return norm;
}

// Versioned descriptors of both frozen schemas (names, order, formulas).
inline nlohmann::json xpcs_schema_json() {
    nlohmann::json slots = nlohmann::json::array();
    static constexpr std::array<const char*, kXpcsPerChannelStats> formulas = {
        "stddev(y)  [= std/mean of raw series for intensity-like channels]",
        "pearson(y[:-1], y[1:])",
        "pearson(y[:-2], y[2:])",
        "pearson(y[:-3], y[3:])",
        "pearson(y[:-4], y[4:])",
        "stddev(y) / stddev(diff(y))",
        "mean(y[-5:]) - mean(y[:5])",
        "mean(|diff(y)|)",
        "max(|y - median(y)|)",
        "least-squares slope of y against t = i/(L-1)",
        "count(|y - mean(y)| > 3*stddev(y)) / L",
        "stddev(y[:L/2]) / stddev(y[L/2:])",
        "(max(y) - min(y)) / stddev(y)",
        "median(y)",
        "quantile(y, 0.75) - quantile(y, 0.25)",
    };
    for (std::size_t c = 0; c < TimeSeriesBundle::kChannels; ++c) {
        for (std::size_t k = 0; k < kXpcsPerChannelStats; ++k) {
            slots.push_back({
                {"index", c * kXpcsPerChannelStats + k},
                {"channel", TimeSeriesBundle::channel_names[c]},
                {"kind", channel_kind(c) == ChannelKind::position_like ? "position_like"
                                                                       : "intensity_like"},
                {"name", kXpcsStatNames[k]},
                {"formula", formulas[k]},
            });
        }
    }
    const std::size_t g = TimeSeriesBundle::kChannels * kXpcsPerChannelStats;
    slots.push_back({{"index", g + 0}, {"channel", nullptr}, {"name", "log_length"},
                     {"formula", "ln(L)"}});
    slots.push_back({{"index", g + 1}, {"channel", nullptr}, {"name", "intensity_begin_end_ratio"},
                     {"formula", "mean(raw_total_intensity[:5]) / mean(raw_total_intensity[-5:])"}});
    slots.push_back({{"index", g + 2}, {"channel", nullptr}, {"name", "flagged_channel_count"},
                     {"formula", "count of channels with quality flags"}});
    return {
        {"schema_version", kXpcsSchemaVersion},
        {"length", kXpcsFeatureCount},
        {"preprocessing",
         "intensity-like channels: (x - mean)/mean; position-like channels (com_x, com_y): "
         "x - mean. All statistics use sample stddev (divisor n-1)."},
        {"slots", slots},
    };
}

inline nlohmann::json xafs_schema_json() {
    nlohmann::json slots = nlohmann::json::array();
    for (std::size_t part = 0; part < 2; ++part) {
        const char* on = part == 0 ? "spectrum" : "first_derivative";
        for (std::size_t k = 0; k < kXafsStatNames.size(); ++k)
            slots.push_back({
                {"index", part * 10 + k},
                {"computed_on", on},
                {"name", kXafsStatNames[k]},
            });
    }
    return {
        {"schema_version", kXafsSchemaVersion},
        {"length", 20},
        {"input", "400-point down-sampled spectrum"},
        {"derivative",
         "first forward difference, padded by repeating the last value to length 400"},
        {"argmax", "fractional index argmax/(len-1), first maximum on ties"},
        {"slots", slots},
    };
}

}  // namespace sentinel
