#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

// Seeded generators standing in for the beamline datasets, with ground truth
// carried alongside so benchmarks never re-derive it from the data.
namespace sentinel::synth {

inline constexpr std::uint64_t kRampBenchmarkSeed = 303;
inline constexpr std::uint64_t kXpcsBenchmarkSeed = 101;
inline constexpr std::uint64_t kXafsBenchmarkSeed = 202;

// ---------------------------------------------------------------------------
// Temperature-ramp diffraction analog

struct GaussianPeak {
    double center;
    double width;
    double height;
};

struct Phase {
    std::vector<GaussianPeak> peaks;
};

struct RampSpec {
    std::vector<double> temperatures;  // degrees C
    std::vector<Phase> phases;
    DenseMatrix weights;     // per-temperature non-negative weight per phase
    double t_c = 0.0;        // transition temperature with the abrupt switch
    double noise_sigma = 0.0;  // relative to the clean row maximum
    std::vector<double> grid;

    void validate() const {
        if (phases.size() < 2) throw std::invalid_argument("RampSpec: need at least 2 phases");
        if (temperatures.size() < 2)
            throw std::invalid_argument("RampSpec: need at least 2 temperatures");
        if (weights.rows() != temperatures.size() || weights.cols() != phases.size())
            throw std::invalid_argument("RampSpec: weights shape must be temperatures x phases");
        for (double w : weights.data())
            if (w < 0.0) throw std::invalid_argument("RampSpec: negative weight");
        if (t_c <= temperatures.front() || t_c > temperatures.back())
            throw std::invalid_argument("RampSpec: t_c outside the temperature grid");
        if (grid.size() < 2) throw std::invalid_argument("RampSpec: need an ordinate grid");
        if (noise_sigma < 0.0) throw std::invalid_argument("RampSpec: negative noise");
    }
};

struct RampResult {
    std::vector<Spectrum1D> spectra;  // meta carries temperature_C
    DenseMatrix true_weights;
};

inline double phase_profile(const Phase& phase, double x) {
    double v = 0.0;
    for (const auto& p : phase.peaks) {
        const double z = (x - p.center) / p.width;
        v += p.height * std::exp(-0.5 * z * z);
    }
    return v;
}

inline RampResult gen_ramp(const RampSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    // precompute phase profiles on the shared grid
    DenseMatrix profiles(spec.phases.size(), spec.grid.size());
    for (std::size_t p = 0; p < spec.phases.size(); ++p)
        for (std::size_t j = 0; j < spec.grid.size(); ++j)
            profiles(p, j) = phase_profile(spec.phases[p], spec.grid[j]);

    RampResult out;
    out.true_weights = spec.weights;
    out.spectra.reserve(spec.temperatures.size());
    for (std::size_t i = 0; i < spec.temperatures.size(); ++i) {
        Spectrum1D s;
        s.grid = spec.grid;
        s.intensity.resize(spec.grid.size());
        double clean_max = 0.0;
        for (std::size_t j = 0; j < spec.grid.size(); ++j) {
            double v = 0.0;
            for (std::size_t p = 0; p < spec.phases.size(); ++p)
                v += spec.weights(i, p) * profiles(p, j);
            s.intensity[j] = v;
            clean_max = std::max(clean_max, v);
        }
        if (spec.noise_sigma > 0.0) {
            const double sigma = spec.noise_sigma * clean_max;
            for (double& v : s.intensity) v = std::max(v + sigma * rng.normal(), 0.0);
        }
        s.meta["temperature_C"] = spec.temperatures[i];
        out.spectra.push_back(std::move(s));
    }
    return out;
}

// Canonical ramp: smooth mixing among the low-temperature phases with one
// abrupt switch to the final phase at t_c. The pre-transition weights keep
// phase 0 dominant so the dominant-component identity changes exactly once.
inline RampSpec make_step_ramp(std::size_t n_temps = 60, std::size_t n_phases = 2,
                               double t_lo = 27.0, double t_hi = 690.0, double t_c = 400.0,
                               double noise_sigma = 0.0, std::size_t n_grid = 300) {
    if (n_phases < 2 || n_phases > 4)
        throw std::invalid_argument("make_step_ramp: supports 2..4 phases");
    RampSpec spec;
    spec.t_c = t_c;
    spec.noise_sigma = noise_sigma;
    spec.temperatures.resize(n_temps);
    for (std::size_t i = 0; i < n_temps; ++i)
        spec.temperatures[i] =
            t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(n_temps - 1);
    spec.grid.resize(n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) spec.grid[j] = static_cast<double>(j);

    // well-separated peak sets per phase
    const double span = static_cast<double>(n_grid);
    for (std::size_t p = 0; p < n_phases; ++p) {
        Phase ph;
        for (int k = 0; k < 3; ++k) {
            const double frac = (0.12 + 0.22 * static_cast<double>(k)) +
                                0.07 * static_cast<double>(p) + 0.02 * static_cast<double>(k % 2);
            ph.peaks.push_back({frac * span, span / 60.0, 1.0 - 0.2 * static_cast<double>(k)});
        }
        spec.phases.push_back(std::move(ph));
    }

    spec.weights = DenseMatrix(n_temps, n_phases);
    for (std::size_t i = 0; i < n_temps; ++i) {
        const double t = spec.temperatures[i];
        if (t >= t_c) {
            spec.weights(i, n_phases - 1) = 1.0;
            continue;
        }
        const double u = (t - t_lo) / (t_c - t_lo);  // 0..1 below the transition
        if (n_phases == 2) {
            spec.weights(i, 0) = 1.0;
        } else {
            spec.weights(i, 0) = 1.0 - 0.4 * u;  // stays dominant below t_c
            spec.weights(i, 1) = 0.4 * u;
            if (n_phases == 4) {
                spec.weights(i, 1) = 0.25 * u;
                spec.weights(i, 2) = 0.15 * u;
            }
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// XPCS time-series analog

enum class XpcsKind { none, jump, drift, oscillation };

struct XpcsSpec {
    std::size_t len_min = 30;
    std::size_t len_max = 3000;
    XpcsKind kind = XpcsKind::none;
    double magnitude_sigma = 0.0;  // in units of the channel baseline sigma
    std::vector<std::size_t> affected_channels;

    void validate() const {
        if (len_min < 10 || len_max < len_min)
            throw std::invalid_argument("XpcsSpec: bad length range");
        if (kind != XpcsKind::none) {
            if (magnitude_sigma <= 0.0)
                throw std::invalid_argument("XpcsSpec: anomalous kinds need magnitude > 0");
            if (affected_channels.empty())
                throw std::invalid_argument("XpcsSpec: anomalous kinds need affected channels");
            for (std::size_t c : affected_channels)
                if (c >= TimeSeriesBundle::kChannels)
                    throw std::invalid_argument("XpcsSpec: channel index out of range");
        }
    }
};

inline constexpr std::array<double, 6> kXpcsBaseline = {1000.0, 50.0, 120.0, 85.0, 2.0, 1.5};
inline constexpr std::array<double, 6> kXpcsSigma = {10.0, 1.0, 0.4, 0.4, 0.05, 0.05};

inline TimeSeriesBundle gen_xpcs(const XpcsSpec& spec, std::uint64_t seed, std::string id = "") {
    spec.validate();
    Rng rng(seed);
    const std::size_t len = spec.len_min + rng.below(spec.len_max - spec.len_min + 1);

    TimeSeriesBundle b;
    b.id = std::move(id);
    for (std::size_t c = 0; c < TimeSeriesBundle::kChannels; ++c) {
        b.channels[c].resize(len);
        for (auto& v : b.channels[c]) v = kXpcsBaseline[c] + kXpcsSigma[c] * rng.normal();
    }

    if (spec.kind == XpcsKind::none) {
        b.label = SeriesLabel::normal;
        return b;
    }

    const double t_event = rng.uniform(0.25, 0.75);
    const double cycles = rng.uniform(3.0, 10.0);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (std::size_t c : spec.affected_channels) {
        const double amp = spec.magnitude_sigma * kXpcsSigma[c];
        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(len - 1);
            switch (spec.kind) {
                case XpcsKind::jump:
                    if (t >= t_event) b.channels[c][i] += amp;
                    break;
                case XpcsKind::drift:
                    b.channels[c][i] += amp * t;
                    break;
                case XpcsKind::oscillation:
                    b.channels[c][i] += amp * std::sin(6.283185307179586 * cycles * t + phase);
                    break;
                case XpcsKind::none:
                    break;
            }
        }
    }
    b.label = SeriesLabel::anomalous;
    return b;
}

struct XpcsBenchmark {
    std::vector<TimeSeriesBundle> bundles;

    std::vector<std::size_t> normals() const { return indices_with(SeriesLabel::normal); }
    std::vector<std::size_t> anomalies() const { return indices_with(SeriesLabel::anomalous); }

private:
    std::vector<std::size_t> indices_with(SeriesLabel l) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < bundles.size(); ++i)
            if (bundles[i].label == l) out.push_back(i);
        return out;
    }
};

// Canonical acceptance dataset: 400 normal + 60 anomalous series
// (20 jumps, 20 drifts, 20 oscillations), shuffled, fixed seed.
inline XpcsBenchmark make_xpcs_benchmark(std::uint64_t seed = kXpcsBenchmarkSeed) {
    Rng rng(seed);
    XpcsBenchmark bench;
    std::size_t counter = 0;
    auto next_id = [&counter]() {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "xpcs-%04zu", counter++);
        return std::string(buf);
    };

    for (int i = 0; i < 400; ++i) {
        XpcsSpec spec;
        bench.bundles.push_back(gen_xpcs(spec, rng.next_u64(), next_id()));
    }
    const XpcsKind kinds[3] = {XpcsKind::jump, XpcsKind::drift, XpcsKind::oscillation};
    for (const XpcsKind kind : kinds) {
        for (int i = 0; i < 20; ++i) {
            XpcsSpec spec;
            spec.kind = kind;
            spec.magnitude_sigma = rng.uniform(5.0, 12.0);
            const std::size_t n_ch = 1 + rng.below(3);
            std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
            rng.shuffle(all);
            spec.affected_channels.assign(all.begin(),
                                          all.begin() + static_cast<std::ptrdiff_t>(n_ch));
            std::sort(spec.affected_channels.begin(), spec.affected_channels.end());
            bench.bundles.push_back(gen_xpcs(spec, rng.next_u64(), next_id()));
        }
    }
    rng.shuffle(bench.bundles);
    return bench;
}

// ---------------------------------------------------------------------------
// XAFS spectrum analog

enum class XafsBadKind { white_noise, flat, drifting_background };

struct XafsSpec {
    double edge_fraction = 0.3;    // position of the absorption edge in (0.1, 0.9)
    double edge_sharpness = 0.008; // sigmoid width as a fraction of the span
    double edge_amplitude = 1.0;   // height of the absorption step
    double osc_amplitude = 0.12;   // post-edge damped sinusoid
    double osc_decay = 0.25;       // decay constant as a fraction of the span
    double osc_period = 0.05;      // period as a fraction of the span
    double noise_sigma = 0.01;     // relative to the unit edge step
    SpectrumLabel cls = SpectrumLabel::good;
    XafsBadKind bad_kind = XafsBadKind::white_noise;
    std::size_t n_points = 400;
    double grid_lo = 7000.0;
    double grid_hi = 7400.0;

    void validate() const {
        if (cls == SpectrumLabel::good &&
            !(edge_fraction > 0.1 && edge_fraction < 0.9))
            throw std::invalid_argument("XafsSpec: edge_fraction must be in (0.1, 0.9)");
        if (edge_sharpness <= 0.0 || osc_period <= 0.0 || osc_decay <= 0.0 ||
            edge_amplitude <= 0.0)
            throw std::invalid_argument("XafsSpec: non-positive shape parameter");
        if (noise_sigma < 0.0) throw std::invalid_argument("XafsSpec: negative noise");
        if (n_points < 2 || grid_hi <= grid_lo)
            throw std::invalid_argument("XafsSpec: bad grid");
    }
};

inline Spectrum1D gen_xafs(const XafsSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    Spectrum1D s;
    s.grid.resize(spec.n_points);
    s.intensity.resize(spec.n_points);
    const double span = spec.grid_hi - spec.grid_lo;
    for (std::size_t i = 0; i < spec.n_points; ++i)
        s.grid[i] = spec.grid_lo +
                    span * static_cast<double>(i) / static_cast<double>(spec.n_points - 1);

    if (spec.cls == SpectrumLabel::good) {
        const double xe = spec.grid_lo + spec.edge_fraction * span;
        const double w = spec.edge_sharpness * span;
        for (std::size_t i = 0; i < spec.n_points; ++i) {
            const double x = s.grid[i];
            double v = 0.1 + spec.edge_amplitude / (1.0 + std::exp(-(x - xe) / w));
            if (x > xe) {
                const double dx = x - xe;
                v += spec.edge_amplitude * spec.osc_amplitude *
                     std::exp(-dx / (spec.osc_decay * span)) *
                     std::sin(6.283185307179586 * dx / (spec.osc_period * span));
            }
            s.intensity[i] = v + spec.noise_sigma * rng.normal();
        }
        s.meta["edge_fraction"] = spec.edge_fraction;
        s.label = SpectrumLabel::good;
        return s;
    }

    switch (spec.bad_kind) {
        case XafsBadKind::white_noise: {
            const double level = rng.uniform(0.2, 0.8);
            const double amp = rng.uniform(0.06, 0.3);
            for (auto& v : s.intensity) v = level + amp * rng.normal();
            break;
        }
        case XafsBadKind::flat: {
            const double level = rng.uniform(0.2, 1.1);
            const double amp = rng.uniform(0.005, 0.03);
            for (auto& v : s.intensity) v = level + amp * rng.normal();
            break;
        }
        case XafsBadKind::drifting_background: {
            const double level = rng.uniform(0.1, 0.5);
            const double slope = rng.uniform(0.2, 0.9) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            const double curve = rng.uniform(-0.4, 0.6);
            const double amp = rng.uniform(0.01, 0.04);
            for (std::size_t i = 0; i < spec.n_points; ++i) {
                const double t =
                    static_cast<double>(i) / static_cast<double>(spec.n_points - 1);
                s.intensity[i] = level + slope * t + curve * t * t + amp * rng.normal();
            }
            break;
        }
    }
    s.label = SpectrumLabel::bad;
    return s;
}

struct XafsBenchmark {
    std::vector<Spectrum1D> spectra;        // 711 labeled spectra
    std::vector<std::size_t> holdout;       // the 101 shifted-edge 'very good' indices
};

// Canonical 711-spectrum classification benchmark: 399 regular good spectra
// (edges in [0.15, 0.50]), 101 'very good' shifted-edge spectra (edges in
// [0.55, 0.85], lower noise) forming the unique-validation holdout, and 211
// bad spectra across the three failure kinds. Spectra come in several native
// lengths so the 400-point down-sampling path is exercised.
inline XafsBenchmark make_xafs_benchmark(std::uint64_t seed = kXafsBenchmarkSeed) {
    Rng rng(seed);
    std::vector<Spectrum1D> spectra;
    std::vector<int> is_holdout;

    auto native_points = [&rng]() {
        static constexpr std::array<std::size_t, 3> choices = {400, 600, 800};
        return choices[rng.below(choices.size())];
    };

    for (int i = 0; i < 399; ++i) {
        XafsSpec spec;
        spec.edge_fraction = rng.uniform(0.15, 0.50);
        spec.edge_sharpness = rng.uniform(0.006, 0.014);
        spec.edge_amplitude = rng.uniform(0.45, 1.0);
        spec.osc_amplitude = rng.uniform(0.08, 0.16);
        spec.osc_period = rng.uniform(0.04, 0.07);
        spec.noise_sigma = rng.uniform(0.01, 0.035);
        spec.n_points = native_points();
        spectra.push_back(gen_xafs(spec, rng.next_u64()));
        is_holdout.push_back(0);
    }
    for (int i = 0; i < 101; ++i) {
        XafsSpec spec;
        spec.edge_fraction = rng.uniform(0.55, 0.85);
        spec.edge_sharpness = rng.uniform(0.006, 0.014);
        spec.edge_amplitude = rng.uniform(0.7, 1.0);
        spec.osc_amplitude = rng.uniform(0.08, 0.16);
        spec.osc_period = rng.uniform(0.04, 0.07);
        spec.noise_sigma = 0.005;  // 'very good' measurements
        spec.n_points = native_points();
        Spectrum1D s = gen_xafs(spec, rng.next_u64());
        s.meta["holdout"] = 1.0;
        spectra.push_back(std::move(s));
        is_holdout.push_back(1);
    }
    const XafsBadKind kinds[3] = {XafsBadKind::white_noise, XafsBadKind::flat,
                                  XafsBadKind::drifting_background};
    const int counts[3] = {71, 70, 70};
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < counts[k]; ++i) {
            XafsSpec spec;
            spec.cls = SpectrumLabel::bad;
            spec.bad_kind = kinds[k];
            spec.n_points = native_points();
            spectra.push_back(gen_xafs(spec, rng.next_u64()));
            is_holdout.push_back(0);
        }
    }

    // one shuffle applied to both vectors
    std::vector<std::size_t> order(spectra.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    XafsBenchmark bench;
    bench.spectra.reserve(spectra.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        bench.spectra.push_back(std::move(spectra[order[pos]]));
        if (is_holdout[order[pos]]) bench.holdout.push_back(pos);
    }
    return bench;
}

}  // namespace sentinel::synth
