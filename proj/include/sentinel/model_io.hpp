#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sentinel/anomaly/pipeline.hpp"
#include "sentinel/classify/eval.hpp"
#include "sentinel/features.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/pca.hpp"

// JSON converters for every fitted model. Doubles round-trip exactly through
// nlohmann's shortest-representation printing, so a reloaded model reproduces
// predictions bit for bit.
namespace sentinel::model_io {

using nlohmann::json;

inline json matrix_to_json(const DenseMatrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline DenseMatrix matrix_from_json(const json& j) {
    return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                       j.at("data").get<std::vector<double>>());
}

inline json normalizer_to_json(const FeatureNormalizer& n) { return {{"maxima", n.maxima}}; }

inline FeatureNormalizer normalizer_from_json(const json& j) {
    return {j.at("maxima").get<std::vector<double>>()};
}

inline json pca_to_json(const PcaModel& m) {
    return {{"mean", m.mean},
            {"components", matrix_to_json(m.components)},
            {"explained_variance", m.explained_variance},
            {"degenerate", m.degenerate}};
}

inline PcaModel pca_from_json(const json& j) {
    PcaModel m;
    m.mean = j.at("mean").get<std::vector<double>>();
    m.components = matrix_from_json(j.at("components"));
    m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    m.degenerate = j.at("degenerate").get<bool>();
    return m;
}

// --- detectors -------------------------------------------------------------

inline json lof_to_json(const anomaly::LofModel& m) {
    return {{"train", matrix_to_json(m.train)},
            {"k_neighbors", m.k_neighbors},
            {"contamination", m.contamination},
            {"threshold", m.threshold},
            {"kdist", m.kdist},
            {"lrd", m.lrd},
            {"neighbors", m.neighbors},
            {"train_scores", m.train_scores}};
}

inline anomaly::LofModel lof_from_json(const json& j) {
    anomaly::LofModel m;
    m.train = matrix_from_json(j.at("train"));
    m.k_neighbors = j.at("k_neighbors").get<std::size_t>();
    m.contamination = j.at("contamination").get<double>();
    m.threshold = j.at("threshold").get<double>();
    m.kdist = j.at("kdist").get<std::vector<double>>();
    m.lrd = j.at("lrd").get<std::vector<double>>();
    m.neighbors = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
    m.train_scores = j.at("train_scores").get<std::vector<double>>();
    return m;
}

inline json ee_to_json(const anomaly::EeModel& m) {
    return {{"center", m.center},
            {"covariance", matrix_to_json(m.covariance)},
            {"chol", matrix_to_json(m.chol)},
            {"threshold", m.threshold},
            {"contamination", m.contamination},
            {"support_fraction", m.support_fraction},
            {"regularized", m.regularized}};
}

inline anomaly::EeModel ee_from_json(const json& j) {
    anomaly::EeModel m;
    m.center = j.at("center").get<std::vector<double>>();
    m.covariance = matrix_from_json(j.at("covariance"));
    m.chol = matrix_from_json(j.at("chol"));
    m.threshold = j.at("threshold").get<double>();
    m.contamination = j.at("contamination").get<double>();
    m.support_fraction = j.at("support_fraction").get<double>();
    m.regularized = j.at("regularized").get<bool>();
    return m;
}

inline json iforest_to_json(const anomaly::IforestModel& m) {
    json trees = json::array();
    for (const auto& tree : m.trees) {
        json nodes = json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
        trees.push_back(std::move(nodes));
    }
    return {{"trees", trees},        {"n_trees", m.n_trees},
            {"subsample", m.subsample}, {"contamination", m.contamination},
            {"threshold", m.threshold}, {"seed", m.seed},
            {"degenerate", m.degenerate}};
}

inline anomaly::IforestModel iforest_from_json(const json& j) {
    anomaly::IforestModel m;
    for (const auto& tj : j.at("trees")) {
        anomaly::IforestTree tree;
        for (const auto& nj : tj) {
            anomaly::IforestNode n;
            n.feature = nj.at(0).get<int>();
            n.split = nj.at(1).get<double>();
            n.left = nj.at(2).get<int>();
            n.right = nj.at(3).get<int>();
            n.size = nj.at(4).get<int>();
            tree.nodes.push_back(n);
        }
        m.trees.push_back(std::move(tree));
    }
    m.n_trees = j.at("n_trees").get<std::size_t>();
    m.subsample = j.at("subsample").get<std::size_t>();
    m.contamination = j.at("contamination").get<double>();
    m.threshold = j.at("threshold").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.degenerate = j.at("degenerate").get<bool>();
    return m;
}

inline json detector_to_json(const anomaly::DetectorModel& m) {
    json j;
    std::visit(
        [&j](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, anomaly::LofModel>) {
                j = lof_to_json(model);
                j["kind"] = "lof";
            } else if constexpr (std::is_same_v<T, anomaly::EeModel>) {
                j = ee_to_json(model);
                j["kind"] = "ee";
            } else {
                j = iforest_to_json(model);
                j["kind"] = "iforest";
            }
        },
        m);
    return j;
}

inline anomaly::DetectorModel detector_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "lof") return lof_from_json(j);
    if (kind == "ee") return ee_from_json(j);
    if (kind == "iforest") return iforest_from_json(j);
    throw std::invalid_argument("detector_from_json: unknown kind '" + kind + "'");
}

inline json anomaly_pipeline_to_json(const anomaly::AnomalyPipeline& p) {
    return {{"normalizer", normalizer_to_json(p.normalizer)},
            {"pca", pca_to_json(p.pca)},
            {"detector", detector_to_json(p.detector)},
            {"feature_schema", p.feature_schema},
            {"n_components", p.n_components},
            {"contamination", p.contamination}};
}

inline anomaly::AnomalyPipeline anomaly_pipeline_from_json(const json& j) {
    anomaly::AnomalyPipeline p;
    p.normalizer = normalizer_from_json(j.at("normalizer"));
    p.pca = pca_from_json(j.at("pca"));
    p.detector = detector_from_json(j.at("detector"));
    p.kind = anomaly::detector_kind_from_string(j.at("detector").at("kind").get<std::string>());
    p.feature_schema = j.at("feature_schema").get<std::string>();
    p.n_components = j.at("n_components").get<std::size_t>();
    p.contamination = j.at("contamination").get<double>();
    return p;
}

// --- classifiers -----------------------------------------------------------

inline json labels_to_json(const std::vector<SpectrumLabel>& y) {
    json out = json::array();
    for (SpectrumLabel l : y) out.push_back(to_string(l));
    return out;
}

inline std::vector<SpectrumLabel> labels_from_json(const json& j) {
    std::vector<SpectrumLabel> y;
    for (const auto& v : j)
        y.push_back(v.get<std::string>() == "good" ? SpectrumLabel::good : SpectrumLabel::bad);
    return y;
}

inline json knn_to_json(const classify::KnnModel& m) {
    return {{"x", matrix_to_json(m.x)}, {"y", labels_to_json(m.y)}, {"k", m.k}};
}

inline classify::KnnModel knn_from_json(const json& j) {
    classify::KnnModel m;
    m.x = matrix_from_json(j.at("x"));
    m.y = labels_from_json(j.at("y"));
    m.k = j.at("k").get<std::size_t>();
    return m;
}

inline json rf_to_json(const classify::RandomForestModel& m) {
    json trees = json::array();
    for (const auto& tree : m.trees) {
        json nodes = json::array();
        for (const auto& n : tree)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count_good, n.count_bad});
        trees.push_back(std::move(nodes));
    }
    return {{"trees", trees},
            {"n_trees", m.n_trees},
            {"max_features", m.max_features},
            {"seed", m.seed}};
}

inline classify::RandomForestModel rf_from_json(const json& j) {
    classify::RandomForestModel m;
    for (const auto& tj : j.at("trees")) {
        std::vector<classify::RfNode> tree;
        for (const auto& nj : tj) {
            classify::RfNode n;
            n.feature = nj.at(0).get<int>();
            n.threshold = nj.at(1).get<double>();
            n.left = nj.at(2).get<int>();
            n.right = nj.at(3).get<int>();
            n.count_good = nj.at(4).get<std::uint32_t>();
            n.count_bad = nj.at(5).get<std::uint32_t>();
            tree.push_back(n);
        }
        m.trees.push_back(std::move(tree));
    }
    m.n_trees = j.at("n_trees").get<std::size_t>();
    m.max_features = j.at("max_features").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

inline json mlp_to_json(const classify::MlpModel& m) {
    return {{"w1", matrix_to_json(m.w1)},
            {"b1", m.b1},
            {"w2", m.w2},
            {"b2", m.b2},
            {"hidden", m.opts.hidden},
            {"epochs", m.opts.epochs},
            {"learning_rate", m.opts.learning_rate},
            {"batch", m.opts.batch},
            {"seed", m.opts.seed}};
}

inline classify::MlpModel mlp_from_json(const json& j) {
    classify::MlpModel m;
    m.w1 = matrix_from_json(j.at("w1"));
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<double>();
    m.opts.hidden = j.at("hidden").get<std::size_t>();
    m.opts.epochs = j.at("epochs").get<std::size_t>();
    m.opts.learning_rate = j.at("learning_rate").get<double>();
    m.opts.batch = j.at("batch").get<std::size_t>();
    m.opts.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

inline json classifier_pipeline_to_json(const classify::ClassifierPipeline& p) {
    json j;
    j["representation"] = classify::to_string(p.representation);
    j["model_kind"] = classify::to_string(p.model_kind);
    j["feature_schema"] = p.feature_schema;
    j["normalizer"] =
        p.normalizer ? normalizer_to_json(*p.normalizer) : json(nullptr);
    switch (p.model_kind) {
        case classify::ModelKind::knn:
            j["model"] = knn_to_json(std::get<classify::KnnModel>(p.model));
            break;
        case classify::ModelKind::rf:
            j["model"] = rf_to_json(std::get<classify::RandomForestModel>(p.model));
            break;
        case classify::ModelKind::mlp:
            j["model"] = mlp_to_json(std::get<classify::MlpModel>(p.model));
            break;
    }
    return j;
}

inline classify::ClassifierPipeline classifier_pipeline_from_json(const json& j) {
    classify::ClassifierPipeline p;
    p.representation =
        classify::representation_from_string(j.at("representation").get<std::string>());
    p.model_kind = classify::model_kind_from_string(j.at("model_kind").get<std::string>());
    p.feature_schema = j.at("feature_schema").get<std::string>();
    if (!j.at("normalizer").is_null()) p.normalizer = normalizer_from_json(j.at("normalizer"));
    switch (p.model_kind) {
        case classify::ModelKind::knn: p.model = knn_from_json(j.at("model")); break;
        case classify::ModelKind::rf: p.model = rf_from_json(j.at("model")); break;
        case classify::ModelKind::mlp: p.model = mlp_from_json(j.at("model")); break;
    }
    return p;
}

}  // namespace sentinel::model_io
