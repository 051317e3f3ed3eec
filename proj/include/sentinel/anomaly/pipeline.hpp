#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sentinel/anomaly/elliptic.hpp"
#include "sentinel/anomaly/iforest.hpp"
#include "sentinel/anomaly/lof.hpp"
#include "sentinel/data.hpp"
#include "sentinel/features.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/pca.hpp"
#include "sentinel/splits.hpp"

namespace sentinel::anomaly {

enum class DetectorKind { lof, ee, iforest };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::lof: return "lof";
        case DetectorKind::ee: return "ee";
        case DetectorKind::iforest: return "iforest";
    }
    return "?";
}

inline DetectorKind detector_kind_from_string(const std::string& s) {
    if (s == "lof") return DetectorKind::lof;
    if (s == "ee") return DetectorKind::ee;
    if (s == "iforest") return DetectorKind::iforest;
    throw std::invalid_argument("unknown detector kind '" + s + "'");
}

using DetectorModel = std::variant<LofModel, EeModel, IforestModel>;

struct DetectorOptions {
    std::size_t lof_k = 20;
    double ee_support_fraction = 0.8;
    std::size_t iforest_trees = 100;
    std::size_t iforest_subsample = 256;
    std::uint64_t seed = 0;
};

inline DetectorModel fit_detector(DetectorKind kind, const DenseMatrix& x_train,
                                  double contamination, const DetectorOptions& opts) {
    switch (kind) {
        case DetectorKind::lof:
            return lof_fit(x_train, std::min(opts.lof_k, x_train.rows() - 1), contamination);
        case DetectorKind::ee:
            return ee_fit(x_train, contamination, opts.ee_support_fraction, opts.seed);
        case DetectorKind::iforest:
            return iforest_fit(x_train, opts.iforest_trees,
                               std::min(opts.iforest_subsample, x_train.rows()), contamination,
                               opts.seed);
    }
    throw std::logic_error("fit_detector: unreachable");
}

inline double detector_score(const DetectorModel& m, std::span<const double> x) {
    return std::visit(
        [&](const auto& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, LofModel>) return lof_score(model, x);
            if constexpr (std::is_same_v<T, EeModel>) return ee_score(model, x);
            if constexpr (std::is_same_v<T, IforestModel>) return iforest_score(model, x);
        },
        m);
}

inline double detector_threshold(const DetectorModel& m) {
    return std::visit([](const auto& model) { return model.threshold; }, m);
}

inline SeriesLabel detector_predict(const DetectorModel& m, std::span<const double> x) {
    return detector_score(m, x) > detector_threshold(m) ? SeriesLabel::anomalous
                                                        : SeriesLabel::normal;
}

// ---------------------------------------------------------------------------
// Hyperparameter tuning over PCA dimensionality and contamination

struct TuneGrid {
    std::vector<std::size_t> n_components = {2, 3, 5, 8, 12, 20};
    std::vector<double> contamination = {0.01, 0.02, 0.05, 0.1};
};

struct TuneCell {
    std::size_t n_components = 0;
    double contamination = 0.0;
    ConfusionMatrix cm;  // positive class: anomalous
    double recall_anomaly = 0.0;
    double fdr_value = 0.0;
    double objective = 0.0;
};

struct TuneResult {
    std::size_t best_n_components = 0;
    double best_contamination = 0.0;
    double best_objective = 0.0;
    std::vector<TuneCell> table;
};

// Grid search maximizing recall_anomaly * (1 - FDR) on the validation split.
// Ties prefer fewer components, then smaller contamination. Cells that flag
// nothing score 0 (their FDR is undefined and recorded as 0 in the table).
inline TuneResult tune(DetectorKind kind, const DenseMatrix& train_feats,
                       const DenseMatrix& val_feats, const std::vector<SeriesLabel>& val_labels,
                       const TuneGrid& grid = {}, const DetectorOptions& opts = {}) {
    if (grid.n_components.empty() || grid.contamination.empty())
        throw std::invalid_argument("tune: empty grid");
    if (val_feats.rows() != val_labels.size())
        throw std::invalid_argument("tune: validation features/labels size mismatch");
    bool has_normal = false, has_anomalous = false;
    for (SeriesLabel l : val_labels) {
        has_normal |= l == SeriesLabel::normal;
        has_anomalous |= l == SeriesLabel::anomalous;
    }
    if (!has_normal || !has_anomalous)
        throw std::invalid_argument("tune: validation set must contain both classes");

    TuneResult result;
    bool have_best = false;
    for (std::size_t k : grid.n_components) {
        if (k > std::min(train_feats.rows(), train_feats.cols()))
            throw std::invalid_argument("tune: n_components exceeds min(n, d)");
        const PcaModel pca = pca_fit(train_feats, k);
        const DenseMatrix train_scores = pca_transform(pca, train_feats);
        const DenseMatrix val_scores = pca_transform(pca, val_feats);

        for (double c : grid.contamination) {
            const DetectorModel detector = fit_detector(kind, train_scores, c, opts);
            std::vector<SeriesLabel> pred(val_scores.rows());
            for (std::size_t i = 0; i < val_scores.rows(); ++i)
                pred[i] = detector_predict(detector, val_scores.row(i));

            TuneCell cell;
            cell.n_components = k;
            cell.contamination = c;
            cell.cm = confusion(pred, val_labels, SeriesLabel::anomalous);
            cell.recall_anomaly = recall(cell.cm);
            if (cell.cm.tp + cell.cm.fp > 0) {
                cell.fdr_value = fdr(cell.cm);
                cell.objective =
                    cell.cm.tp == 0 ? 0.0 : cell.recall_anomaly * (1.0 - cell.fdr_value);
            }
            result.table.push_back(cell);
            if (!have_best || cell.objective > result.best_objective) {
                have_best = true;
                result.best_objective = cell.objective;
                result.best_n_components = k;
                result.best_contamination = c;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// The deployable pipeline: normalizer -> PCA -> detector

struct AnomalyVerdict {
    double score = 0.0;
    double threshold = 0.0;
    SeriesLabel label = SeriesLabel::normal;
    std::array<bool, TimeSeriesBundle::kChannels> channel_flags{};
    std::string id;
};

struct AnomalyPipeline {
    FeatureNormalizer normalizer;
    PcaModel pca;
    DetectorKind kind = DetectorKind::ee;
    DetectorModel detector = EeModel{};
    std::string feature_schema = kXpcsSchemaVersion;
    std::size_t n_components = 0;
    double contamination = 0.0;

    AnomalyVerdict score(const TimeSeriesBundle& bundle) const {
        const XpcsFeatureVector feats = xpcs_features(bundle);
        const std::vector<double> scores =
            pca_transform_row(pca, normalizer.apply(feats.values));
        AnomalyVerdict v;
        v.score = detector_score(detector, scores);
        v.threshold = detector_threshold(detector);
        v.label = v.score > v.threshold ? SeriesLabel::anomalous : SeriesLabel::normal;
        v.channel_flags = feats.channel_flags;
        v.id = bundle.id;
        return v;
    }
};

struct DetectorEvaluation {
    ConfusionMatrix cm;  // positive class: anomalous
    double recall_anomaly = 0.0;
    double fdr_value = 0.0;
};

struct AnomalyTraining {
    AnomalyPipeline pipeline;
    TuneResult tuning;
    SplitAssignment split;
    DetectorEvaluation test;
};

inline DenseMatrix feature_matrix(const std::vector<TimeSeriesBundle>& data,
                                  const std::vector<std::size_t>& idx) {
    DenseMatrix out;
    for (std::size_t i : idx) out.append_row(xpcs_features(data[i]).values);
    return out;
}

// Full training protocol on a labeled dataset: anomaly-free 80/10/10 split,
// train-only normalizer, tuning on validation, final fit at the best cell,
// evaluation on the held-out test split.
inline AnomalyTraining train_anomaly_pipeline(const std::vector<TimeSeriesBundle>& data,
                                              DetectorKind kind, const TuneGrid& grid = {},
                                              const DetectorOptions& opts = {},
                                              std::uint64_t split_seed = 0) {
    std::vector<std::size_t> normals, anomalies;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].label)
            throw std::invalid_argument("train_anomaly_pipeline: record " + std::to_string(i) +
                                        " (id '" + data[i].id + "') has no label");
        (*data[i].label == SeriesLabel::normal ? normals : anomalies).push_back(i);
    }

    AnomalyTraining out;
    out.split = split_anomaly(normals, anomalies, split_seed);

    const DenseMatrix train_raw = feature_matrix(data, out.split.train);
    out.pipeline.normalizer = fit_normalizer(train_raw);
    const DenseMatrix train_feats = out.pipeline.normalizer.apply(train_raw);
    const DenseMatrix val_feats =
        out.pipeline.normalizer.apply(feature_matrix(data, out.split.validation));

    std::vector<SeriesLabel> val_labels;
    for (std::size_t i : out.split.validation) val_labels.push_back(*data[i].label);

    out.tuning = tune(kind, train_feats, val_feats, val_labels, grid, opts);

    out.pipeline.kind = kind;
    out.pipeline.n_components = out.tuning.best_n_components;
    out.pipeline.contamination = out.tuning.best_contamination;
    out.pipeline.pca = pca_fit(train_feats, out.tuning.best_n_components);
    const DenseMatrix train_scores = pca_transform(out.pipeline.pca, train_feats);
    out.pipeline.detector =
        fit_detector(kind, train_scores, out.tuning.best_contamination, opts);

    std::vector<SeriesLabel> test_pred, test_actual;
    for (std::size_t i : out.split.test) {
        test_pred.push_back(out.pipeline.score(data[i]).label);
        test_actual.push_back(*data[i].label);
    }
    out.test.cm = confusion(test_pred, test_actual, SeriesLabel::anomalous);
    out.test.recall_anomaly = recall(out.test.cm);
    out.test.fdr_value = out.test.cm.tp + out.test.cm.fp > 0 ? fdr(out.test.cm) : 0.0;
    return out;
}

}  // namespace sentinel::anomaly
