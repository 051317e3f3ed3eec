#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sentinel {

enum class SpectrumLabel { good, bad };
enum class SeriesLabel { normal, anomalous };

inline const char* to_string(SpectrumLabel l) { return l == SpectrumLabel::good ? "good" : "bad"; }
inline const char* to_string(SeriesLabel l) {
    return l == SeriesLabel::normal ? "normal" : "anomalous";
}

// A 1-d intensity profile on a strictly increasing ordinate grid. The unit of
// data for spectral decomposition and good/bad classification.
struct Spectrum1D {
    std::vector<double> grid;
    std::vector<double> intensity;
    std::map<std::string, double> meta;
    std::optional<SpectrumLabel> label;

    void validate() const {
        if (grid.size() != intensity.size())
            throw std::invalid_argument("Spectrum1D: grid and intensity lengths differ");
        if (grid.size() < 2) throw std::invalid_argument("Spectrum1D: need at least 2 points");
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            if (!(grid[i] < grid[i + 1]))
                throw std::invalid_argument("Spectrum1D: grid must be strictly increasing");
        for (double v : grid)
            if (!std::isfinite(v)) throw std::invalid_argument("Spectrum1D: non-finite grid value");
        for (double v : intensity)
            if (!std::isfinite(v))
                throw std::invalid_argument("Spectrum1D: non-finite intensity value");
    }

    std::size_t size() const { return grid.size(); }
};

// Six fixed per-measurement time series reported by the detector software.
// The unit of data for anomaly detection.
struct TimeSeriesBundle {
    static constexpr std::size_t kChannels = 6;
    static constexpr std::array<const char*, kChannels> channel_names = {
        "total_intensity", "intensity_std", "com_x", "com_y", "com_x_std", "com_y_std"};

    std::array<std::vector<double>, kChannels> channels;
    std::optional<SeriesLabel> label;
    std::string id;

    static std::size_t channel_index(const std::string& name) {
        for (std::size_t i = 0; i < kChannels; ++i)
            if (name == channel_names[i]) return i;
        throw std::invalid_argument("TimeSeriesBundle: unknown channel '" + name + "'");
    }

    std::size_t length() const { return channels[0].size(); }

    void validate() const {
        const std::size_t len = channels[0].size();
        for (const auto& c : channels)
            if (c.size() != len)
                throw std::invalid_argument("TimeSeriesBundle: channel lengths differ");
        if (len < 10) throw std::invalid_argument("TimeSeriesBundle: need at least 10 frames");
        for (const auto& c : channels)
            for (double v : c)
                if (!std::isfinite(v))
                    throw std::invalid_argument("TimeSeriesBundle: non-finite value");
    }
};

using Measurement = std::variant<Spectrum1D, TimeSeriesBundle>;

}  // namespace sentinel
