#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sentinel/classify/knn.hpp"
#include "sentinel/classify/mlp.hpp"
#include "sentinel/classify/random_forest.hpp"
#include "sentinel/data.hpp"
#include "sentinel/features.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/splits.hpp"

namespace sentinel::classify {

enum class Representation { raw, engineered };
enum class SplitKind { uniform, unique };
enum class ModelKind { knn, rf, mlp };

inline const char* to_string(Representation r) {
    return r == Representation::raw ? "raw" : "engineered";
}
inline const char* to_string(SplitKind s) { return s == SplitKind::uniform ? "uniform" : "unique"; }
inline const char* to_string(ModelKind m) {
    switch (m) {
        case ModelKind::knn: return "knn";
        case ModelKind::rf: return "rf";
        case ModelKind::mlp: return "mlp";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "knn") return ModelKind::knn;
    if (s == "rf") return ModelKind::rf;
    if (s == "mlp") return ModelKind::mlp;
    throw std::invalid_argument("unknown classifier model '" + s + "'");
}

inline Representation representation_from_string(const std::string& s) {
    if (s == "raw") return Representation::raw;
    if (s == "engineered") return Representation::engineered;
    throw std::invalid_argument("unknown representation '" + s + "'");
}

struct EvalRow {
    ModelKind model = ModelKind::knn;
    Representation representation = Representation::raw;
    SplitKind split = SplitKind::uniform;
    double f1_score = 0.0;
    double accuracy_score = 0.0;
    ConfusionMatrix cm;  // positive class: good
};

struct EvalOptions {
    std::size_t knn_k = 5;
    std::size_t rf_trees = 100;
    MlpOptions mlp;
    double train_frac = 0.8;
    double unique_val_frac = 0.1;
    std::uint64_t seed = 0;
};

// The per-spectrum max-normalized 400-point raw representation.
inline std::vector<double> raw_vector(const Spectrum1D& s400) {
    double mx = 0.0;
    for (double v : s400.intensity) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) mx = 1.0;
    std::vector<double> out(s400.intensity);
    for (double& v : out) v /= mx;
    return out;
}

struct SplitMatrices {
    DenseMatrix train;
    DenseMatrix validation;
    std::optional<FeatureNormalizer> normalizer;  // set when normalize was requested
};

// Train/validation matrices for a split; the engineered path fits the
// normalizer on the training rows only.
inline SplitMatrices make_split_matrices(const DenseMatrix& all, const SplitAssignment& split,
                                         bool normalize) {
    SplitMatrices out;
    for (std::size_t i : split.train) out.train.append_row(all.row(i));
    for (std::size_t i : split.validation) out.validation.append_row(all.row(i));
    if (normalize) {
        out.normalizer = fit_normalizer(out.train);
        out.train = out.normalizer->apply(out.train);
        out.validation = out.normalizer->apply(out.validation);
    }
    return out;
}

namespace eval_detail {

inline std::vector<SpectrumLabel> predict_all(ModelKind kind, const DenseMatrix& train_x,
                                              const std::vector<SpectrumLabel>& train_y,
                                              const DenseMatrix& val_x,
                                              const EvalOptions& opts) {
    std::vector<SpectrumLabel> pred(val_x.rows());
    switch (kind) {
        case ModelKind::knn: {
            const KnnModel m = knn_fit(train_x, train_y, opts.knn_k);
            for (std::size_t i = 0; i < val_x.rows(); ++i)
                pred[i] = knn_predict(m, val_x.row(i)).label;
            break;
        }
        case ModelKind::rf: {
            const RandomForestModel m = rf_fit(train_x, train_y, opts.rf_trees, opts.seed);
            for (std::size_t i = 0; i < val_x.rows(); ++i)
                pred[i] = rf_predict(m, val_x.row(i)).label;
            break;
        }
        case ModelKind::mlp: {
            std::vector<double> targets(train_y.size());
            for (std::size_t i = 0; i < train_y.size(); ++i)
                targets[i] = train_y[i] == SpectrumLabel::good ? 1.0 : 0.0;
            MlpOptions mo = opts.mlp;
            mo.seed = opts.seed;
            const MlpModel m = mlp_fit(train_x, targets, mo);
            for (std::size_t i = 0; i < val_x.rows(); ++i)
                pred[i] = mlp_predict(m, val_x.row(i)).label;
            break;
        }
    }
    return pred;
}

}  // namespace eval_detail

// Table-2-style protocol: 3 models x {raw, engineered} x {uniform, unique}
// validation, F1 with good as the positive class.
inline std::vector<EvalRow> eval_suite(const std::vector<Spectrum1D>& dataset,
                                       const std::vector<std::size_t>& holdout_group,
                                       const EvalOptions& opts = {}) {
    const std::size_t n = dataset.size();
    if (n < 4) throw std::invalid_argument("eval_suite: dataset too small");

    std::vector<SpectrumLabel> labels(n);
    bool has_good = false, has_bad = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!dataset[i].label)
            throw std::invalid_argument("eval_suite: record " + std::to_string(i) +
                                        " has no label");
        labels[i] = *dataset[i].label;
        has_good |= labels[i] == SpectrumLabel::good;
        has_bad |= labels[i] == SpectrumLabel::bad;
    }
    if (!has_good || !has_bad)
        throw std::invalid_argument("eval_suite: dataset must contain both classes");

    DenseMatrix raw_all, eng_all;
    for (const auto& s : dataset) {
        const Spectrum1D d = downsample_spectrum(s, 400);
        raw_all.append_row(raw_vector(d));
        eng_all.append_row(xafs_features(d).values);
    }

    const SplitAssignment uniform = split_uniform(n, opts.train_frac, opts.seed);
    const SplitAssignment unique =
        split_unique(n, holdout_group, opts.unique_val_frac, opts.seed);

    std::vector<EvalRow> rows;
    for (const ModelKind model : {ModelKind::knn, ModelKind::rf, ModelKind::mlp}) {
        for (const Representation rep : {Representation::raw, Representation::engineered}) {
            const DenseMatrix& all = rep == Representation::raw ? raw_all : eng_all;
            for (const SplitKind sk : {SplitKind::uniform, SplitKind::unique}) {
                const SplitAssignment& split = sk == SplitKind::uniform ? uniform : unique;
                const SplitMatrices mats =
                    make_split_matrices(all, split, rep == Representation::engineered);

                std::vector<SpectrumLabel> train_y, val_y;
                for (std::size_t i : split.train) train_y.push_back(labels[i]);
                for (std::size_t i : split.validation) val_y.push_back(labels[i]);

                const std::vector<SpectrumLabel> pred = eval_detail::predict_all(
                    model, mats.train, train_y, mats.validation, opts);

                EvalRow row;
                row.model = model;
                row.representation = rep;
                row.split = sk;
                row.cm = confusion(pred, val_y, SpectrumLabel::good);
                row.f1_score = f1(row.cm);
                row.accuracy_score = accuracy(row.cm);
                rows.push_back(row);
            }
        }
    }
    return rows;
}

inline std::string eval_rows_to_csv(const std::vector<EvalRow>& rows) {
    std::ostringstream out;
    out << "model,representation,split,f1,accuracy,tp,fp,tn,fn\n";
    for (const auto& r : rows)
        out << to_string(r.model) << ',' << to_string(r.representation) << ','
            << to_string(r.split) << ',' << r.f1_score << ',' << r.accuracy_score << ','
            << r.cm.tp << ',' << r.cm.fp << ',' << r.cm.tn << ',' << r.cm.fn << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Deployable classifier: downsample -> representation -> model

struct ClassifierVerdict {
    SpectrumLabel label = SpectrumLabel::good;
    double confidence = 0.0;
    std::string emoji_code;  // "white_check_mark" | "x"
};

struct ClassifierPipeline {
    Representation representation = Representation::engineered;
    ModelKind model_kind = ModelKind::rf;
    std::optional<FeatureNormalizer> normalizer;  // engineered only
    std::variant<KnnModel, RandomForestModel, MlpModel> model = KnnModel{};
    std::string feature_schema = kXafsSchemaVersion;

    ClassifierVerdict classify(const Spectrum1D& s) const {
        const Spectrum1D d = downsample_spectrum(s, 400);
        std::vector<double> v;
        if (representation == Representation::raw) {
            v = raw_vector(d);
        } else {
            if (!normalizer) throw std::logic_error("ClassifierPipeline: missing normalizer");
            v = normalizer->apply(xafs_features(d).values);
        }
        Prediction p;
        switch (model_kind) {
            case ModelKind::knn: p = knn_predict(std::get<KnnModel>(model), v); break;
            case ModelKind::rf: p = rf_predict(std::get<RandomForestModel>(model), v); break;
            case ModelKind::mlp: p = mlp_predict(std::get<MlpModel>(model), v); break;
        }
        ClassifierVerdict out;
        out.label = p.label;
        out.confidence = p.confidence;
        out.emoji_code = p.label == SpectrumLabel::good ? "white_check_mark" : "x";
        return out;
    }
};

// Final deployment model trained on the full labeled dataset.
inline ClassifierPipeline train_classifier_pipeline(const std::vector<Spectrum1D>& dataset,
                                                    ModelKind kind, Representation rep,
                                                    const EvalOptions& opts = {}) {
    std::vector<SpectrumLabel> labels;
    DenseMatrix x;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!dataset[i].label)
            throw std::invalid_argument("train_classifier_pipeline: record " +
                                        std::to_string(i) + " has no label");
        labels.push_back(*dataset[i].label);
        const Spectrum1D d = downsample_spectrum(dataset[i], 400);
        x.append_row(rep == Representation::raw ? raw_vector(d) : xafs_features(d).values);
    }

    ClassifierPipeline p;
    p.representation = rep;
    p.model_kind = kind;
    if (rep == Representation::engineered) {
        p.normalizer = fit_normalizer(x);
        x = p.normalizer->apply(x);
    }
    switch (kind) {
        case ModelKind::knn: p.model = knn_fit(x, labels, opts.knn_k); break;
        case ModelKind::rf: p.model = rf_fit(x, labels, opts.rf_trees, opts.seed); break;
        case ModelKind::mlp: {
            std::vector<double> targets(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i)
                targets[i] = labels[i] == SpectrumLabel::good ? 1.0 : 0.0;
            MlpOptions mo = opts.mlp;
            mo.seed = opts.seed;
            p.model = mlp_fit(x, targets, mo);
            break;
        }
    }
    return p;
}

}  // namespace sentinel::classify
