#include <gtest/gtest.h>

#include <cmath>

#include "sentinel/anomaly/pipeline.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/synth.hpp"

using namespace sentinel;
using namespace sentinel::anomaly;

namespace {

// ---------------------------------------------------------------------------
// Independent O(n^2) LOF oracle, straight from the definitions.

double brute_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

struct BruteLof {
    std::vector<std::vector<double>> pts;
    std::size_t k;
    std::vector<std::vector<std::size_t>> nn;
    std::vector<double> kdist;
    std::vector<double> lrd;

    BruteLof(std::vector<std::vector<double>> points, std::size_t k_) : pts(std::move(points)), k(k_) {
        const std::size_t n = pts.size();
        nn.resize(n);
        kdist.resize(n);
        lrd.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::pair<double, std::size_t>> d;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) d.emplace_back(brute_dist(pts[i], pts[j]), j);
            std::sort(d.begin(), d.end());
            for (std::size_t j = 0; j < k; ++j) nn[i].push_back(d[j].second);
            kdist[i] = d[k - 1].first;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double reach = 0.0;
            for (std::size_t o : nn[i])
                reach += std::max(kdist[o], brute_dist(pts[i], pts[o]));
            lrd[i] = static_cast<double>(k) / reach;
        }
    }

    double train_score(std::size_t i) const {
        double s = 0.0;
        for (std::size_t o : nn[i]) s += lrd[o];
        return s / (static_cast<double>(k) * lrd[i]);
    }

    double query_score(const std::vector<double>& q) const {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < pts.size(); ++j) d.emplace_back(brute_dist(q, pts[j]), j);
        std::sort(d.begin(), d.end());
        double reach = 0.0, lrd_sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            reach += std::max(kdist[d[j].second], d[j].first);
            lrd_sum += lrd[d[j].second];
        }
        const double lrd_q = static_cast<double>(k) / reach;
        return lrd_sum / (static_cast<double>(k) * lrd_q);
    }
};

DenseMatrix to_matrix(const std::vector<std::vector<double>>& pts) {
    DenseMatrix m;
    for (const auto& p : pts) m.append_row(p);
    return m;
}

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t d, Rng& rng) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
        for (auto& v : p) v = rng.normal();
    return pts;
}

// Explicit matrix inverse by Gauss-Jordan, oracle for the Mahalanobis check.
DenseMatrix brute_inverse(DenseMatrix a) {
    const std::size_t n = a.rows();
    DenseMatrix inv = DenseMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(a(col, j), a(piv, j));
            std::swap(inv(col, j), inv(piv, j));
        }
        const double p = a(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a(col, j) /= p;
            inv(col, j) /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            for (std::size_t j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

}  // namespace

TEST(Lof, MatchesBruteForceOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 12 + rng.below(39);  // 12..50
        const std::size_t d = 1 + rng.below(5);
        for (const std::size_t k : {std::size_t(2), std::size_t(5), std::size_t(10)}) {
            if (k >= n) continue;
            const auto pts = random_points(n, d, rng);
            const BruteLof oracle(pts, k);
            const LofModel model = lof_fit(to_matrix(pts), k, 0.1);
            for (std::size_t i = 0; i < n; ++i)
                ASSERT_NEAR(model.train_scores[i], oracle.train_score(i), 1e-9);
            // query path
            std::vector<double> q(d);
            for (auto& v : q) v = rng.normal();
            ASSERT_NEAR(lof_score(model, q), oracle.query_score(q), 1e-9);
        }
    }
}

TEST(Lof, UniformGridScoresNearOne) {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            pts.push_back({static_cast<double>(i), static_cast<double>(j)});
    const LofModel model = lof_fit(to_matrix(pts), 3, 0.1);
    for (double s : model.train_scores) {
        EXPECT_GE(s, 0.8);
        EXPECT_LE(s, 1.2);
    }
}

TEST(Lof, DuplicatePointsStayFinite) {
    std::vector<std::vector<double>> pts(10, std::vector<double>{1.0, 2.0});
    const LofModel model = lof_fit(to_matrix(pts), 3, 0.1);
    for (double s : model.train_scores) EXPECT_TRUE(std::isfinite(s));
    EXPECT_TRUE(std::isfinite(lof_score(model, std::vector<double>{1.0, 2.0})));
}

TEST(Lof, ContaminationQuantileExactCount) {
    Rng rng(2);
    const auto pts = random_points(100, 3, rng);
    const LofModel model = lof_fit(to_matrix(pts), 5, 0.1);
    std::size_t above = 0;
    for (double s : model.train_scores) above += s > model.threshold;
    EXPECT_EQ(above, 10u);
}

TEST(Lof, OutlierScoresHigh) {
    // uniform grid cluster
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            pts.push_back({static_cast<double>(i), static_cast<double>(j)});
    const LofModel model = lof_fit(to_matrix(pts), 5, 0.05);
    EXPECT_GT(lof_score(model, std::vector<double>{25.0, -30.0}), 2.0);
    EXPECT_EQ(lof_predict(model, std::vector<double>{25.0, -30.0}), SeriesLabel::anomalous);

    // a duplicate of a training point inside the uniform cluster is ordinary
    const double dup = lof_score(model, std::vector<double>{3.0, 4.0});
    EXPECT_NEAR(dup, 1.0, 0.25);
}

TEST(Lof, SmoothAcrossK) {
    Rng rng(4);
    const auto pts = random_points(80, 3, rng);
    std::vector<double> q{0.3, -0.2, 0.1};
    for (std::size_t k = 2; k <= 20; ++k) {
        const LofModel model = lof_fit(to_matrix(pts), k, 0.05);
        const double s = lof_score(model, q);
        ASSERT_TRUE(std::isfinite(s)) << "k=" << k;
    }
}

TEST(Lof, Errors) {
    Rng rng(5);
    const auto pts = random_points(10, 2, rng);
    EXPECT_THROW(lof_fit(to_matrix(pts), 10, 0.1), std::invalid_argument);
    EXPECT_THROW(lof_fit(to_matrix(pts), 0, 0.1), std::invalid_argument);
    const LofModel model = lof_fit(to_matrix(pts), 3, 0.1);
    EXPECT_THROW(lof_score(model, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST(Ee, CalibratedOnCleanGaussian) {
    Rng rng(6);
    DenseMatrix x(1000, 2);
    for (std::size_t i = 0; i < 1000; ++i) {
        x(i, 0) = 3.0 + 2.0 * rng.normal();
        x(i, 1) = -1.0 + 0.5 * rng.normal();
    }
    for (const double c : {0.02, 0.05, 0.1}) {
        const EeModel m = ee_fit(x, c, 0.8, 7);
        EXPECT_NEAR(m.center[0], 3.0, 0.2);   // 0.1 sigma of the wider axis
        EXPECT_NEAR(m.center[1], -1.0, 0.05);
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < 1000; ++i)
            flagged += ee_predict(m, x.row(i)) == SeriesLabel::anomalous;
        EXPECT_NEAR(static_cast<double>(flagged) / 1000.0, c, 0.02);
        // flagged fraction on the training set equals contamination within 1/n
        EXPECT_LE(std::abs(static_cast<double>(flagged) / 1000.0 - c), 1.0 / 1000.0 + 1e-12);
    }
}

TEST(Ee, RobustToPlantedOutliers) {
    Rng rng(7);
    const std::size_t n = 400, d = 3;
    DenseMatrix x(n, d);
    // clean data: identity covariance
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
    // 15% far outliers
    for (std::size_t i = 0; i < n * 15 / 100; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = 12.0 + 2.0 * rng.normal();

    const EeModel m = ee_fit(x, 0.05, 0.8, 8);

    // plain empirical covariance of everything
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& v : mean) v /= static_cast<double>(n);
    DenseMatrix emp(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                emp(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / (n - 1.0);

    DenseMatrix err_robust = m.covariance, err_emp = emp;
    for (std::size_t a = 0; a < d; ++a) {
        err_robust(a, a) -= 1.0;
        err_emp(a, a) -= 1.0;
    }
    EXPECT_LT(frobenius_norm(err_robust), frobenius_norm(err_emp));
}

TEST(Ee, OneDimensionalReduction) {
    Rng rng(8);
    DenseMatrix x(100, 1);
    for (std::size_t i = 0; i < 100; ++i) x(i, 0) = 5.0 + 2.0 * rng.normal();
    const EeModel m = ee_fit(x, 0.1, 0.8, 9);

    const double mu = m.center[0];
    const double var = m.covariance(0, 0);
    std::vector<double> scores;
    for (std::size_t i = 0; i < 100; ++i) {
        const double z2 = (x(i, 0) - mu) * (x(i, 0) - mu) / var;
        EXPECT_NEAR(ee_score(m, x.row(i)), z2, 1e-10 * std::max(1.0, z2));
        scores.push_back(z2);
    }
    EXPECT_NEAR(m.threshold, threshold_from_scores(scores, 0.1), 1e-10);
}

TEST(Ee, CenterScoresZeroAndIdentityIsEuclidean) {
    EeModel m;
    m.center = {1.0, 2.0, 3.0};
    m.covariance = DenseMatrix::identity(3);
    m.chol = DenseMatrix::identity(3);
    m.threshold = 1.0;
    EXPECT_DOUBLE_EQ(ee_score(m, std::vector<double>{1.0, 2.0, 3.0}), 0.0);
    EXPECT_DOUBLE_EQ(ee_score(m, std::vector<double>{2.0, 2.0, 3.0}), 1.0);
    EXPECT_DOUBLE_EQ(ee_score(m, std::vector<double>{2.0, 4.0, 1.0}), 9.0);
}

TEST(Ee, MatchesExplicitInverseOracle) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        DenseMatrix a(4, 4);
        for (auto& v : a.data()) v = rng.normal();
        DenseMatrix sigma = matmul(transpose(a), a);
        for (std::size_t i = 0; i < 4; ++i) sigma(i, i) += 0.5;

        EeModel m;
        m.center = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        m.covariance = sigma;
        m.chol = cholesky(sigma);

        std::vector<double> x(4);
        for (auto& v : x) v = rng.normal() * 3.0;

        const DenseMatrix inv = brute_inverse(sigma);
        std::vector<double> diff(4);
        for (std::size_t i = 0; i < 4; ++i) diff[i] = x[i] - m.center[i];
        double want = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) want += diff[i] * inv(i, j) * diff[j];
        EXPECT_NEAR(ee_score(m, x), want, 1e-8 * std::max(1.0, want));
    }
}

TEST(Ee, RejectsTooFewPoints) {
    const DenseMatrix x(8, 4, 1.0);
    EXPECT_THROW(ee_fit(x, 0.1), std::invalid_argument);
}

TEST(Iforest, IsolatesSingleOutlier) {
    DenseMatrix x(100, 1);
    for (std::size_t i = 0; i < 99; ++i) x(i, 0) = 0.0;
    x(99, 0) = 100.0;
    const IforestModel m = iforest_fit(x, 0.05, 11);

    double outlier_path = 0.0, inlier_path = 0.0;
    for (const auto& tree : m.trees) {
        outlier_path += iforest_detail::path_length(tree, x.row(99));
        inlier_path += iforest_detail::path_length(tree, x.row(0));
    }
    EXPECT_LT(outlier_path, inlier_path);
    EXPECT_GT(iforest_score(m, x.row(99)), iforest_score(m, x.row(0)));
    EXPECT_EQ(iforest_predict(m, x.row(99)), SeriesLabel::anomalous);

    // per-tree dominance implies strictly ordered scores (monotonicity)
    bool dominated = true;
    for (const auto& tree : m.trees)
        dominated = dominated && iforest_detail::path_length(tree, x.row(99)) <
                                     iforest_detail::path_length(tree, x.row(0));
    EXPECT_TRUE(dominated);
}

TEST(Iforest, CFactorValues) {
    EXPECT_DOUBLE_EQ(iforest_c_factor(0), 0.0);
    EXPECT_DOUBLE_EQ(iforest_c_factor(1), 0.0);
    EXPECT_DOUBLE_EQ(iforest_c_factor(2), 1.0);                 // 2*1 - 2*(1/2)
    EXPECT_DOUBLE_EQ(iforest_c_factor(3), 2.0 * 1.5 - 4.0 / 3.0);
}

TEST(Iforest, ScoreOfMeanPathEqualsHalf) {
    // E[h] == c(n) gives s == 0.5 exactly: a single tree over a constant
    // dataset realizes the fixed point without mean-accumulation rounding.
    DenseMatrix x(50, 2, 3.25);
    const IforestModel one = iforest_fit(x, 1, 50, 0.1, 12);
    EXPECT_TRUE(one.degenerate);
    EXPECT_DOUBLE_EQ(iforest_score(one, x.row(0)), 0.5);

    const IforestModel many = iforest_fit(x, 0.1, 12);
    EXPECT_TRUE(many.degenerate);
    EXPECT_NEAR(iforest_score(many, x.row(0)), 0.5, 1e-12);
}

TEST(Iforest, DeterministicUnderSeed) {
    Rng rng(13);
    DenseMatrix x(200, 4);
    for (auto& v : x.data()) v = rng.normal();
    const IforestModel a = iforest_fit(x, 0.05, 99);
    const IforestModel b = iforest_fit(x, 0.05, 99);
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) ASSERT_EQ(a.trees[t], b.trees[t]);
    EXPECT_EQ(a.threshold, b.threshold);

    const IforestModel c = iforest_fit(x, 0.05, 100);
    bool any_different = false;
    for (std::size_t t = 0; t < a.trees.size() && !any_different; ++t)
        any_different = !(a.trees[t] == c.trees[t]);
    EXPECT_TRUE(any_different);
}

TEST(Iforest, DepthNeverExceedsCap) {
    Rng rng(21);
    DenseMatrix x(300, 4);
    for (auto& v : x.data()) v = rng.normal();
    const IforestModel m = iforest_fit(x, 0.05, 3);
    const std::size_t cap = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(m.subsample))));

    for (const auto& tree : m.trees) {
        // walk every node tracking depth
        std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            const auto [node, depth] = stack.back();
            stack.pop_back();
            ASSERT_LE(depth, cap);
            if (tree.nodes[node].feature >= 0) {
                stack.emplace_back(tree.nodes[node].left, depth + 1);
                stack.emplace_back(tree.nodes[node].right, depth + 1);
            }
        }
    }
}

TEST(Iforest, ScoresInUnitInterval) {
    Rng rng(14);
    DenseMatrix x(150, 3);
    for (auto& v : x.data()) v = rng.normal();
    const IforestModel m = iforest_fit(x, 0.05, 15);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double s = iforest_score(m, x.row(i));
        EXPECT_GT(s, 0.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Iforest, OutlierBeats95thPercentileInlier) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(20 + seed);
        DenseMatrix x(256, 2);
        for (auto& v : x.data()) v = rng.normal();
        const IforestModel m = iforest_fit(x, 0.05, seed);
        std::vector<double> inlier_scores;
        for (std::size_t i = 0; i < x.rows(); ++i)
            inlier_scores.push_back(iforest_score(m, x.row(i)));
        std::sort(inlier_scores.begin(), inlier_scores.end());
        const double p95 = inlier_scores[static_cast<std::size_t>(0.95 * 256)];
        const double outlier = iforest_score(m, std::vector<double>{10.0, 10.0});
        EXPECT_GT(outlier, p95);
    }
}

TEST(Tune, SingleCellGridIsBest) {
    Rng rng(16);
    DenseMatrix train(60, 5), val(30, 5);
    for (auto& v : train.data()) v = rng.normal();
    std::vector<SeriesLabel> labels;
    for (std::size_t i = 0; i < 30; ++i) {
        const bool anom = i < 6;
        for (std::size_t j = 0; j < 5; ++j) val(i, j) = rng.normal() + (anom ? 8.0 : 0.0);
        labels.push_back(anom ? SeriesLabel::anomalous : SeriesLabel::normal);
    }
    TuneGrid grid;
    grid.n_components = {3};
    grid.contamination = {0.05};
    const TuneResult r = tune(DetectorKind::ee, train, val, labels, grid, {});
    EXPECT_EQ(r.table.size(), 1u);
    EXPECT_EQ(r.best_n_components, 3u);
    EXPECT_DOUBLE_EQ(r.best_contamination, 0.05);
    EXPECT_DOUBLE_EQ(r.best_objective, r.table[0].objective);
}

TEST(Tune, TableCoversGridAndBestRowConsistent) {
    Rng rng(17);
    DenseMatrix train(80, 6), val(40, 6);
    for (auto& v : train.data()) v = rng.normal();
    std::vector<SeriesLabel> labels;
    for (std::size_t i = 0; i < 40; ++i) {
        const bool anom = i % 5 == 0;
        for (std::size_t j = 0; j < 6; ++j) val(i, j) = rng.normal() + (anom ? 6.0 : 0.0);
        labels.push_back(anom ? SeriesLabel::anomalous : SeriesLabel::normal);
    }
    TuneGrid grid;
    grid.n_components = {2, 3, 4};
    grid.contamination = {0.02, 0.1};
    const TuneResult r = tune(DetectorKind::iforest, train, val, labels, grid, {.seed = 3});
    EXPECT_EQ(r.table.size(), 6u);
    double best_seen = -1.0;
    for (const auto& cell : r.table) {
        const double recomputed =
            cell.cm.tp == 0 ? 0.0
                            : recall(cell.cm) * (1.0 - static_cast<double>(cell.cm.fp) /
                                                           (cell.cm.fp + cell.cm.tp));
        EXPECT_NEAR(cell.objective, recomputed, 1e-12);
        best_seen = std::max(best_seen, cell.objective);
        if (cell.n_components == r.best_n_components &&
            cell.contamination == r.best_contamination) {
            EXPECT_DOUBLE_EQ(cell.objective, r.best_objective);
        }
    }
    EXPECT_DOUBLE_EQ(best_seen, r.best_objective);
}

TEST(Tune, Errors) {
    DenseMatrix train(20, 4, 0.5), val(5, 4, 0.5);
    std::vector<SeriesLabel> one_class(5, SeriesLabel::normal);
    TuneGrid empty;
    empty.n_components = {};
    EXPECT_THROW(tune(DetectorKind::ee, train, val, one_class, empty, {}),
                 std::invalid_argument);
    EXPECT_THROW(tune(DetectorKind::ee, train, val, one_class, {}, {}), std::invalid_argument);
}

TEST(Pipeline, TrainsOnSyntheticDataAndScores) {
    // small, fast dataset: short series, modest counts
    std::vector<TimeSeriesBundle> data;
    Rng rng(18);
    for (int i = 0; i < 120; ++i) {
        synth::XpcsSpec spec;
        spec.len_min = 60;
        spec.len_max = 200;
        data.push_back(synth::gen_xpcs(spec, rng.next_u64(), "n" + std::to_string(i)));
    }
    for (int i = 0; i < 16; ++i) {
        synth::XpcsSpec spec;
        spec.len_min = 60;
        spec.len_max = 200;
        spec.kind = static_cast<synth::XpcsKind>(1 + i % 3);
        spec.magnitude_sigma = 9.0;
        spec.affected_channels = {static_cast<std::size_t>(i % 6)};
        data.push_back(synth::gen_xpcs(spec, rng.next_u64(), "a" + std::to_string(i)));
    }

    TuneGrid grid;
    grid.n_components = {2, 3};
    grid.contamination = {0.02, 0.05};
    const AnomalyTraining training =
        train_anomaly_pipeline(data, DetectorKind::ee, grid, {.seed = 5}, 1);

    EXPECT_EQ(training.split.train.size() + training.split.validation.size() +
                  training.split.test.size(),
              data.size());
    EXPECT_EQ(training.test.cm.total(), training.split.test.size());
    EXPECT_GT(training.tuning.best_objective, 0.5);

    // scoring agrees with the verdict label
    const AnomalyVerdict v = training.pipeline.score(data[3]);
    EXPECT_EQ(v.label, v.score > v.threshold ? SeriesLabel::anomalous : SeriesLabel::normal);
    EXPECT_EQ(v.id, data[3].id);
}

TEST(Pipeline, UnlabeledRecordRejected) {
    std::vector<TimeSeriesBundle> data;
    synth::XpcsSpec spec;
    data.push_back(synth::gen_xpcs(spec, 1, "x"));
    data[0].label.reset();
    try {
        train_anomaly_pipeline(data, DetectorKind::ee, {}, {}, 0);
        FAIL() << "expected error about the unlabeled record";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
    }
}
