#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sentinel/features.hpp"
#include "sentinel/jsonl.hpp"
#include "sentinel/nmf.hpp"
#include "sentinel/sha256.hpp"
#include "sentinel/synth.hpp"

using namespace sentinel;
using namespace sentinel::synth;

namespace {

std::string serialize_spectra(const std::vector<Spectrum1D>& spectra) {
    std::ostringstream out;
    for (const auto& s : spectra) out << to_json(s).dump() << "\n";
    return out.str();
}

std::string serialize_bundles(const std::vector<TimeSeriesBundle>& bundles) {
    std::ostringstream out;
    for (const auto& b : bundles) out << to_json(b).dump() << "\n";
    return out.str();
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// dominant component of row i by scale-invariant contribution
std::size_t dominant_component(const NmfModel& m, std::size_t i) {
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t j = 0; j < m.p; ++j) {
        double h2 = 0.0;
        for (std::size_t k = 0; k < m.H.cols(); ++k) h2 += m.H(j, k) * m.H(j, k);
        const double val = m.W(i, j) * std::sqrt(h2);
        if (val > best_val) {
            best_val = val;
            best = j;
        }
    }
    return best;
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(Sha256::hex(""),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(Sha256::hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(Sha256::hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
              "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(GenRamp, SingleActivePhaseIsRankOne) {
    RampSpec spec = make_step_ramp(20, 2, 27.0, 690.0, 400.0, 0.0, 120);
    // zero out the post-transition phase so only phase 0 is ever active
    for (std::size_t i = 0; i < spec.weights.rows(); ++i) {
        spec.weights(i, 0) = 0.5 + 0.02 * static_cast<double>(i);
        spec.weights(i, 1) = 0.0;
    }
    const RampResult r = gen_ramp(spec, 1);
    DenseMatrix v;
    for (const auto& s : r.spectra) v.append_row(s.intensity);
    const NmfModel model = nmf_fit(v, 1, {.max_iter = 1000, .tol = 1e-10, .seed = 2});
    DenseMatrix diff = matmul(model.W, model.H);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) diff(i, j) -= v(i, j);
    EXPECT_LE(frobenius_norm(diff) / frobenius_norm(v), 1e-3);
}

TEST(GenRamp, StepTransitionCrossoverDetectedByNmf) {
    const RampSpec spec = make_step_ramp(60, 2, 27.0, 690.0, 400.0, 0.0, 300);
    const RampResult r = gen_ramp(spec, 7);
    DenseMatrix v;
    std::vector<double> temps;
    for (const auto& s : r.spectra) {
        v.append_row(s.intensity);
        temps.push_back(s.meta.at("temperature_C"));
    }
    const NmfModel model = nmf_fit(v, 2, {.max_iter = 2000, .tol = 1e-10, .seed = 3});

    // ground truth: first index at or above t_c
    std::size_t truth = 0;
    while (temps[truth] < spec.t_c) ++truth;

    std::size_t switches = 0, switch_at = 0;
    for (std::size_t i = 1; i < v.rows(); ++i)
        if (dominant_component(model, i) != dominant_component(model, i - 1)) {
            ++switches;
            switch_at = i;
        }
    EXPECT_EQ(switches, 1u);
    EXPECT_NEAR(static_cast<double>(switch_at), static_cast<double>(truth), 1.0);
}

TEST(GenRamp, ThreePhaseRampWithFourComponents) {
    // over-parameterized fit (p=4 on rank-3 data) still shows exactly one
    // abrupt dominance change at the planted transition
    const RampSpec spec = make_step_ramp(60, 3, 27.0, 690.0, 400.0, 0.0, 300);
    const RampResult r = gen_ramp(spec, 11);
    DenseMatrix v;
    for (const auto& s : r.spectra) v.append_row(s.intensity);
    const NmfModel model = nmf_fit(v, 4, {.max_iter = 2000, .tol = 1e-10, .seed = 2});
    ASSERT_EQ(model.p, 4u);

    std::size_t truth = 0;
    while (spec.temperatures[truth] < spec.t_c) ++truth;
    std::size_t switches = 0, switch_at = 0;
    for (std::size_t i = 1; i < v.rows(); ++i)
        if (dominant_component(model, i) != dominant_component(model, i - 1)) {
            ++switches;
            switch_at = i;
        }
    EXPECT_EQ(switches, 1u);
    EXPECT_NEAR(static_cast<double>(switch_at), static_cast<double>(truth), 1.0);
}

TEST(GenRamp, DeterministicUnderSeed) {
    const RampSpec spec = make_step_ramp(15, 3, 27.0, 690.0, 400.0, 0.02, 100);
    const RampResult a = gen_ramp(spec, 42);
    const RampResult b = gen_ramp(spec, 42);
    EXPECT_EQ(serialize_spectra(a.spectra), serialize_spectra(b.spectra));
    const RampResult c = gen_ramp(spec, 43);
    EXPECT_NE(serialize_spectra(a.spectra), serialize_spectra(c.spectra));
}

TEST(GenRamp, InvalidSpecsRejected) {
    RampSpec spec = make_step_ramp();
    spec.t_c = 10.0;  // outside temperature grid
    EXPECT_THROW(gen_ramp(spec, 0), std::invalid_argument);
    RampSpec neg = make_step_ramp();
    neg.weights(0, 0) = -1.0;
    EXPECT_THROW(gen_ramp(neg, 0), std::invalid_argument);
}

TEST(GenXpcs, KindNoneIsNormal) {
    XpcsSpec spec;
    const TimeSeriesBundle b = gen_xpcs(spec, 5, "n1");
    EXPECT_EQ(b.label, SeriesLabel::normal);
    EXPECT_EQ(b.id, "n1");
    EXPECT_GE(b.length(), spec.len_min);
    EXPECT_LE(b.length(), spec.len_max);
}

TEST(GenXpcs, JumpDominatesEndMinusBeginFeature) {
    // normal population statistics of the total_intensity end-begin slot
    constexpr std::size_t slot = 0 * kXpcsPerChannelStats + 6;
    std::vector<double> population;
    for (int i = 0; i < 100; ++i) {
        XpcsSpec spec;
        spec.len_min = spec.len_max = 500;
        population.push_back(xpcs_features(gen_xpcs(spec, 1000 + i)).values[slot]);
    }
    double mean = 0.0;
    for (double v : population) mean += v;
    mean /= population.size();
    double var = 0.0;
    for (double v : population) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / (population.size() - 1));

    XpcsSpec jump;
    jump.len_min = jump.len_max = 500;
    jump.kind = XpcsKind::jump;
    jump.magnitude_sigma = 10.0;
    jump.affected_channels = {0};
    const double feat = xpcs_features(gen_xpcs(jump, 77)).values[slot];
    EXPECT_GT(std::abs(feat - mean) / sd, 5.0);
}

TEST(GenXpcs, LengthInvarianceRelativeToClassSeparation) {
    // same stationary process at L=100 vs L=1000
    XpcsSpec s100;
    s100.len_min = s100.len_max = 100;
    XpcsSpec s1000;
    s1000.len_min = s1000.len_max = 1000;
    const XpcsFeatureVector f100 = xpcs_features(gen_xpcs(s100, 9));
    const XpcsFeatureVector f1000 = xpcs_features(gen_xpcs(s1000, 10));

    // normalizer fitted on a small normal sample for comparable scales
    DenseMatrix normal_feats;
    for (int i = 0; i < 50; ++i) {
        XpcsSpec spec;
        normal_feats.append_row(xpcs_features(gen_xpcs(spec, 2000 + i)).values);
    }
    const FeatureNormalizer norm = fit_normalizer(normal_feats);

    std::vector<double> sep_acc(93, 0.0);
    for (int i = 0; i < 30; ++i) {
        XpcsSpec spec;
        spec.kind = static_cast<XpcsKind>(1 + i % 3);
        spec.magnitude_sigma = 8.0;
        spec.affected_channels = {static_cast<std::size_t>(i % 6)};
        const auto f = norm.apply(xpcs_features(gen_xpcs(spec, 3000 + i)).values);
        for (std::size_t j = 0; j < 93; ++j) sep_acc[j] += f[j] / 30.0;
    }
    std::vector<double> normal_mean(93, 0.0);
    for (std::size_t i = 0; i < normal_feats.rows(); ++i) {
        const auto f = norm.apply(normal_feats.row(i));
        for (std::size_t j = 0; j < 93; ++j) normal_mean[j] += f[j] / normal_feats.rows();
    }

    const double d_length = euclidean(norm.apply(f100.values), norm.apply(f1000.values));
    const double d_classes = euclidean(normal_mean, sep_acc);
    EXPECT_LT(d_length, d_classes);
}

TEST(GenXpcs, BenchmarkCompositionAndChecksum) {
    const XpcsBenchmark bench = make_xpcs_benchmark();
    ASSERT_EQ(bench.bundles.size(), 460u);
    EXPECT_EQ(bench.normals().size(), 400u);
    EXPECT_EQ(bench.anomalies().size(), 60u);

    // ids unique
    std::set<std::string> ids;
    for (const auto& b : bench.bundles) ids.insert(b.id);
    EXPECT_EQ(ids.size(), 460u);

    const std::string payload = serialize_bundles(bench.bundles);
    EXPECT_EQ(Sha256::hex(payload), "5d23fb50600c67648eb129d0952da659b4fda94e95bdfea4aa86222f2cc03577");

    // determinism
    const XpcsBenchmark again = make_xpcs_benchmark();
    EXPECT_EQ(serialize_bundles(again.bundles), payload);
}

TEST(GenXafs, CleanGoodSpectrumEdgeRecoverable) {
    XafsSpec spec;
    spec.edge_fraction = 0.4;
    spec.noise_sigma = 0.0;
    const Spectrum1D s = gen_xafs(spec, 3);
    const XafsFeatureVector f = xafs_features(s);
    const double argmax_frac = f.values[19];  // derivative argmax fraction
    EXPECT_NEAR(argmax_frac, 0.4, 1.0 / 399.0 + 1e-12);
    EXPECT_EQ(s.label, SpectrumLabel::good);
    EXPECT_DOUBLE_EQ(s.meta.at("edge_fraction"), 0.4);
}

TEST(GenXafs, WhiteNoiseBadHasLowAutocorr) {
    XafsSpec spec;
    spec.cls = SpectrumLabel::bad;
    spec.bad_kind = XafsBadKind::white_noise;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Spectrum1D s = gen_xafs(spec, seed);
        EXPECT_LT(std::abs(autocorr(s.intensity, 1)), 0.2);
        EXPECT_EQ(s.label, SpectrumLabel::bad);
    }
}

TEST(GenXafs, GoodVsBadFeatureSeparation) {
    DenseMatrix good_feats, bad_feats;
    for (int i = 0; i < 25; ++i) {
        XafsSpec g;
        g.edge_fraction = 0.2 + 0.02 * i;
        good_feats.append_row(xafs_features(downsample_spectrum(gen_xafs(g, 50 + i))).values);
        XafsSpec b;
        b.cls = SpectrumLabel::bad;
        b.bad_kind = static_cast<XafsBadKind>(i % 3);
        bad_feats.append_row(xafs_features(downsample_spectrum(gen_xafs(b, 150 + i))).values);
    }
    DenseMatrix all = good_feats;
    for (std::size_t i = 0; i < bad_feats.rows(); ++i) all.append_row(bad_feats.row(i));
    const FeatureNormalizer norm = fit_normalizer(all);

    auto mean_of = [&](const DenseMatrix& m) {
        std::vector<double> acc(m.cols(), 0.0);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto f = norm.apply(m.row(i));
            for (std::size_t j = 0; j < m.cols(); ++j) acc[j] += f[j] / m.rows();
        }
        return acc;
    };
    auto mean_intra = [&](const DenseMatrix& m, const std::vector<double>& center) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            acc += euclidean(norm.apply(m.row(i)), center);
        return acc / m.rows();
    };
    const std::vector<double> gm = mean_of(good_feats);
    const std::vector<double> bm = mean_of(bad_feats);
    const double inter = euclidean(gm, bm);
    EXPECT_GT(inter, mean_intra(good_feats, gm));
    EXPECT_GT(inter, mean_intra(bad_feats, bm));
}

TEST(GenXafs, BenchmarkCompositionAndChecksum) {
    const XafsBenchmark bench = make_xafs_benchmark();
    ASSERT_EQ(bench.spectra.size(), 711u);
    ASSERT_EQ(bench.holdout.size(), 101u);

    std::size_t good = 0, bad = 0;
    for (const auto& s : bench.spectra) {
        ASSERT_TRUE(s.label.has_value());
        (*s.label == SpectrumLabel::good ? good : bad)++;
    }
    EXPECT_EQ(good, 500u);
    EXPECT_EQ(bad, 211u);

    // every holdout entry is a good spectrum with the meta marker and a shifted edge
    for (std::size_t i : bench.holdout) {
        const Spectrum1D& s = bench.spectra[i];
        EXPECT_EQ(s.label, SpectrumLabel::good);
        EXPECT_EQ(s.meta.count("holdout"), 1u);
        EXPECT_GE(s.meta.at("edge_fraction"), 0.55);
    }
    // training-range good spectra stay below the holdout edge range
    for (std::size_t i = 0; i < bench.spectra.size(); ++i) {
        const Spectrum1D& s = bench.spectra[i];
        if (s.label == SpectrumLabel::good && !s.meta.count("holdout")) {
            EXPECT_LE(s.meta.at("edge_fraction"), 0.50);
        }
    }

    const std::string payload = serialize_spectra(bench.spectra);
    EXPECT_EQ(Sha256::hex(payload), "119bd8e5c44644b8c2d98fd49c2cd96fc184aaa0a832a7a070e36e3f8a86bfa6");
}

TEST(GenXafs, InvalidSpecRejected) {
    XafsSpec spec;
    spec.edge_fraction = 0.95;
    EXPECT_THROW(gen_xafs(spec, 0), std::invalid_argument);
}
