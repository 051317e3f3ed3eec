#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "sentinel/classify/eval.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/synth.hpp"

using namespace sentinel;
using namespace sentinel::classify;

namespace {

// Two well-separated Gaussian blobs, good at +offset, bad at -offset.
void make_blobs(std::size_t n, std::size_t d, double offset, Rng& rng, DenseMatrix& x,
                std::vector<SpectrumLabel>& y) {
    x = DenseMatrix();
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const bool good = i % 2 == 0;
        std::vector<double> row(d);
        for (auto& v : row) v = rng.normal() + (good ? offset : -offset);
        x.append_row(row);
        y.push_back(good ? SpectrumLabel::good : SpectrumLabel::bad);
    }
}

SpectrumLabel flip(SpectrumLabel l) {
    return l == SpectrumLabel::good ? SpectrumLabel::bad : SpectrumLabel::good;
}

}  // namespace

TEST(Knn, ExactTrainingPointWinsAtKOne) {
    Rng rng(1);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(20, 3, 0.5, rng, x, y);
    const KnnModel m = knn_fit(x, y, 1);
    for (std::size_t i = 0; i < x.rows(); ++i)
        EXPECT_EQ(knn_predict(m, x.row(i)).label, y[i]);
}

TEST(Knn, SeparableBlobsHighAccuracy) {
    Rng rng(2);
    DenseMatrix x, xt;
    std::vector<SpectrumLabel> y, yt;
    make_blobs(200, 4, 4.0, rng, x, y);
    make_blobs(200, 4, 4.0, rng, xt, yt);
    const KnnModel m = knn_fit(x, y, 5);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xt.rows(); ++i)
        correct += knn_predict(m, xt.row(i)).label == yt[i];
    EXPECT_GE(static_cast<double>(correct) / xt.rows(), 0.99);
}

TEST(Knn, MatchesBruteForceScanOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix x;
        std::vector<SpectrumLabel> y;
        make_blobs(30, 3, 0.3, rng, x, y);
        const std::size_t k = 1 + rng.below(7);
        const KnnModel m = knn_fit(x, y, k);

        std::vector<double> q(3);
        for (auto& v : q) v = rng.normal();

        // oracle: full O(n d) scan with the same tie rules
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 3; ++j) s += (x(i, j) - q[j]) * (x(i, j) - q[j]);
            d.emplace_back(std::sqrt(s), i);
        }
        std::sort(d.begin(), d.end());
        std::size_t good = 0;
        for (std::size_t i = 0; i < k; ++i) good += y[d[i].second] == SpectrumLabel::good;
        SpectrumLabel want;
        if (2 * good == k)
            want = y[d[0].second];
        else
            want = 2 * good > k ? SpectrumLabel::good : SpectrumLabel::bad;

        EXPECT_EQ(knn_predict(m, q).label, want);
    }
}

TEST(Knn, InvariantUnderTrainingPermutation) {
    Rng rng(4);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(40, 3, 1.0, rng, x, y);

    std::vector<std::size_t> perm(x.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    DenseMatrix xp;
    std::vector<SpectrumLabel> yp;
    for (std::size_t i : perm) {
        xp.append_row(x.row(i));
        yp.push_back(y[i]);
    }

    const KnnModel a = knn_fit(x, y, 5);
    const KnnModel b = knn_fit(xp, yp, 5);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> q(3);
        for (auto& v : q) v = rng.normal() * 2.0;
        EXPECT_EQ(knn_predict(a, q).label, knn_predict(b, q).label);
    }
}

TEST(Knn, Errors) {
    DenseMatrix x = DenseMatrix::from_rows({{0.0}, {1.0}});
    const std::vector<SpectrumLabel> y{SpectrumLabel::good, SpectrumLabel::bad};
    EXPECT_THROW(knn_fit(x, y, 3), std::invalid_argument);
    EXPECT_THROW(knn_fit(x, y, 0), std::invalid_argument);
}

TEST(Rf, LearnsThresholdRule) {
    Rng rng(5);
    DenseMatrix x, xt;
    std::vector<SpectrumLabel> y, yt;
    auto gen = [&rng](DenseMatrix& xx, std::vector<SpectrumLabel>& yy, std::size_t n) {
        xx = DenseMatrix();
        yy.clear();
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row(5);
            for (auto& v : row) v = rng.normal();
            xx.append_row(row);
            yy.push_back(row[0] > 0.0 ? SpectrumLabel::good : SpectrumLabel::bad);
        }
    };
    gen(x, y, 300);
    gen(xt, yt, 200);
    const RandomForestModel m = rf_fit(x, y, 100, 7);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xt.rows(); ++i)
        correct += rf_predict(m, xt.row(i)).label == yt[i];
    EXPECT_EQ(correct, xt.rows());
}

TEST(Rf, TrainingPointVoteFraction) {
    Rng rng(6);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(100, 4, 3.5, rng, x, y);
    const RandomForestModel m = rf_fit(x, y, 100, 8);
    for (std::size_t i = 0; i < 20; ++i) {
        const Prediction p = rf_predict(m, x.row(i));
        EXPECT_EQ(p.label, y[i]);
        EXPECT_GE(p.confidence, 0.9);
    }
}

TEST(Rf, DeterministicUnderSeed) {
    Rng rng(7);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(60, 3, 0.8, rng, x, y);
    const RandomForestModel a = rf_fit(x, y, 30, 9);
    const RandomForestModel b = rf_fit(x, y, 30, 9);
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) ASSERT_EQ(a.trees[t], b.trees[t]);
}

TEST(Rf, LabelFlipSymmetry) {
    Rng rng(8);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(80, 4, 0.6, rng, x, y);
    std::vector<SpectrumLabel> y_flipped(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_flipped[i] = flip(y[i]);

    // odd tree count: no forest-level ties; continuous features: pure leaves
    const RandomForestModel a = rf_fit(x, y, 51, 10);
    const RandomForestModel b = rf_fit(x, y_flipped, 51, 10);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> q(4);
        for (auto& v : q) v = rng.normal() * 2.0;
        EXPECT_EQ(rf_predict(a, q).label, flip(rf_predict(b, q).label));
    }
}

TEST(Rf, VoteFractionInUnitRange) {
    Rng rng(9);
    DenseMatrix x;
    std::vector<SpectrumLabel> y;
    make_blobs(50, 3, 0.2, rng, x, y);  // heavily overlapping
    const RandomForestModel m = rf_fit(x, y, 40, 11);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> q(3);
        for (auto& v : q) v = rng.normal();
        const Prediction p = rf_predict(m, q);
        EXPECT_GE(p.confidence, 0.0);
        EXPECT_LE(p.confidence, 1.0);
    }
}

TEST(Rf, SingleClassRejected) {
    DenseMatrix x = DenseMatrix::from_rows({{0.0}, {1.0}});
    EXPECT_THROW(rf_fit(x, {SpectrumLabel::good, SpectrumLabel::good}, 10, 0),
                 std::invalid_argument);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
    Rng rng(10);
    DenseMatrix x(3, 4);
    std::vector<double> y{1.0, 0.0, 1.0};
    for (auto& v : x.data()) v = rng.normal();

    MlpModel m;
    m.opts.hidden = 10;
    m.w1 = DenseMatrix(10, 4);
    for (auto& v : m.w1.data()) v = rng.uniform(-0.5, 0.5);
    m.b1.resize(10);
    for (auto& v : m.b1) v = rng.uniform(-0.1, 0.1);
    m.w2.resize(10);
    for (auto& v : m.w2) v = rng.uniform(-0.5, 0.5);
    m.b2 = 0.1;

    const MlpGradients g = mlp_gradients(m, x, y);
    const double eps = 1e-5;

    double max_rel = 0.0;
    auto check = [&](double* param, double analytic) {
        const double saved = *param;
        *param = saved + eps;
        const double up = mlp_loss(m, x, y);
        *param = saved - eps;
        const double down = mlp_loss(m, x, y);
        *param = saved;
        const double fd = (up - down) / (2.0 * eps);
        const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
        max_rel = std::max(max_rel, rel);
    };
    for (std::size_t k = 0; k < 10; ++k) {
        for (std::size_t j = 0; j < 4; ++j) check(&m.w1(k, j), g.w1(k, j));
        check(&m.b1[k], g.b1[k]);
        check(&m.w2[k], g.w2[k]);
    }
    check(&m.b2, g.b2);
    EXPECT_LE(max_rel, 1e-6);
}

TEST(Mlp, LearnsLinearlySeparableData) {
    Rng rng(11);
    DenseMatrix x;
    std::vector<SpectrumLabel> labels;
    make_blobs(120, 2, 2.0, rng, x, labels);
    std::vector<double> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[i] = labels[i] == SpectrumLabel::good ? 1.0 : 0.0;

    const MlpModel m = mlp_fit(x, y, {.epochs = 200, .learning_rate = 5e-2, .seed = 12});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        correct += mlp_predict(m, x.row(i)).label == labels[i];
    EXPECT_EQ(correct, x.rows());
}

TEST(Mlp, ConstantInputConvergesToPrior) {
    DenseMatrix x(100, 3, 1.0);  // identical rows
    std::vector<double> y(100, 0.0);
    for (std::size_t i = 0; i < 30; ++i) y[i] = 1.0;  // prior 0.3
    const MlpModel m =
        mlp_fit(x, y, {.epochs = 2000, .learning_rate = 0.1, .batch = 100, .seed = 13});
    const double p = mlp_predict(m, x.row(0)).label == SpectrumLabel::good
                         ? mlp_predict(m, x.row(0)).confidence
                         : 1.0 - mlp_predict(m, x.row(0)).confidence;
    EXPECT_NEAR(p, 0.3, 0.02);
}

TEST(Mlp, FullBatchLossNonIncreasingAtSmallLearningRate) {
    Rng rng(14);
    DenseMatrix x;
    std::vector<SpectrumLabel> labels;
    make_blobs(80, 3, 1.0, rng, x, labels);
    std::vector<double> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[i] = labels[i] == SpectrumLabel::good ? 1.0 : 0.0;
    const MlpModel m =
        mlp_fit(x, y, {.epochs = 300, .learning_rate = 1e-3, .batch = 80, .seed = 15});
    for (std::size_t e = 1; e < m.epoch_loss.size(); ++e)
        ASSERT_LE(m.epoch_loss[e], m.epoch_loss[e - 1] + 1e-12);
}

TEST(Mlp, RejectsBadTargets) {
    DenseMatrix x(4, 2, 0.5);
    EXPECT_THROW(mlp_fit(x, {0.0, 1.0, 0.5, 1.0}, {}), std::invalid_argument);
    EXPECT_THROW(mlp_fit(x, {0.0, 1.0}, {}), std::invalid_argument);
}

TEST(EvalSuite, TwelveConsistentRows) {
    const synth::XafsBenchmark bench = synth::make_xafs_benchmark(7);
    // a fast subset: every 4th spectrum, holdout indices remapped
    std::vector<Spectrum1D> data;
    std::vector<std::size_t> holdout;
    std::set<std::size_t> holdout_set(bench.holdout.begin(), bench.holdout.end());
    for (std::size_t i = 0; i < bench.spectra.size(); i += 4) {
        if (holdout_set.count(i)) holdout.push_back(data.size());
        data.push_back(bench.spectra[i]);
    }
    ASSERT_GE(holdout.size(), 10u);

    EvalOptions opts;
    opts.rf_trees = 30;
    opts.mlp.epochs = 200;
    opts.seed = 3;
    const std::vector<EvalRow> rows = eval_suite(data, holdout, opts);
    ASSERT_EQ(rows.size(), 12u);

    std::set<std::string> combos;
    for (const auto& r : rows) {
        combos.insert(std::string(to_string(r.model)) + "/" + to_string(r.representation) +
                      "/" + to_string(r.split));
        // stored F1 consistent with the stored confusion matrix
        EXPECT_NEAR(r.f1_score, f1(r.cm), 1e-12);
        EXPECT_NEAR(r.accuracy_score, accuracy(r.cm), 1e-12);
    }
    EXPECT_EQ(combos.size(), 12u);

    // engineered features with uniform validation separate this benchmark well
    for (const auto& r : rows) {
        if (r.representation == Representation::engineered && r.split == SplitKind::uniform) {
            EXPECT_GE(r.f1_score, 0.9) << to_string(r.model);
        }
    }
}

TEST(EvalSuite, NormalizerFitOnTrainOnly) {
    Rng rng(16);
    DenseMatrix all(20, 3);
    for (auto& v : all.data()) v = rng.uniform(-1.0, 1.0);
    SplitAssignment split;
    for (std::size_t i = 0; i < 15; ++i) split.train.push_back(i);
    for (std::size_t i = 15; i < 20; ++i) split.validation.push_back(i);

    // spike a validation row; the stored maxima must not change
    const SplitMatrices before = make_split_matrices(all, split, true);
    all(17, 1) = 1e6;
    const SplitMatrices after = make_split_matrices(all, split, true);
    ASSERT_TRUE(before.normalizer && after.normalizer);
    EXPECT_EQ(before.normalizer->maxima, after.normalizer->maxima);

    // and they equal the plain train-row maxima
    DenseMatrix train_rows;
    for (std::size_t i : split.train) train_rows.append_row(all.row(i));
    EXPECT_EQ(after.normalizer->maxima, fit_normalizer(train_rows).maxima);
}

TEST(EvalSuite, CsvLayout) {
    std::vector<EvalRow> rows(1);
    rows[0].model = ModelKind::rf;
    rows[0].representation = Representation::engineered;
    rows[0].split = SplitKind::unique;
    rows[0].f1_score = 0.95;
    rows[0].accuracy_score = 0.9;
    rows[0].cm = {19, 1, 8, 1};
    const std::string csv = eval_rows_to_csv(rows);
    EXPECT_NE(csv.find("model,representation,split,f1,accuracy,tp,fp,tn,fn"), std::string::npos);
    EXPECT_NE(csv.find("rf,engineered,unique,0.95,0.9,19,1,8,1"), std::string::npos);
}

TEST(ClassifierPipeline, TrainsAndClassifies) {
    const synth::XafsBenchmark bench = synth::make_xafs_benchmark(9);
    std::vector<Spectrum1D> data(bench.spectra.begin(), bench.spectra.begin() + 200);
    bool has_bad = false;
    for (const auto& s : data) has_bad |= s.label == SpectrumLabel::bad;
    ASSERT_TRUE(has_bad);

    EvalOptions opts;
    opts.rf_trees = 40;
    const ClassifierPipeline p =
        train_classifier_pipeline(data, ModelKind::rf, Representation::engineered, opts);

    std::size_t correct = 0;
    for (const auto& s : data) {
        const ClassifierVerdict v = p.classify(s);
        correct += v.label == *s.label;
        EXPECT_EQ(v.emoji_code, v.label == SpectrumLabel::good ? "white_check_mark" : "x");
    }
    EXPECT_GE(static_cast<double>(correct) / data.size(), 0.95);
}
