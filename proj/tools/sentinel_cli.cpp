// sentinel: streaming beamline-monitor toolkit.
//   synth  - write the built-in benchmark datasets
//   train  - fit the anomaly or classification pipeline, report metrics
//   eval   - score a labeled dataset with a saved artifact
//   nmf    - run a live decomposition session over stored patterns
//   watch  - monitor a directory and push reports to sinks

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "sentinel/agent.hpp"
#include "sentinel/config.hpp"
#include "sentinel/ingest/artifact.hpp"
#include "sentinel/ingest/watcher.hpp"
#include "sentinel/ingest/webhook.hpp"
#include "sentinel/jsonl.hpp"
#include "sentinel/synth.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitThreshold = 3;
constexpr int kExitRuntime = 4;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ThresholdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};
void handle_signal(int) { g_interrupted = true; }

void print_resolved(const std::string& name, const Resolved& r) {
    std::cout << "config: " << name << " = " << (r.value.empty() ? "(unset)" : r.value) << "  ["
              << r.source << "]\n";
}

std::vector<Measurement> read_measurement_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return read_measurements(in);
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<TimeSeriesBundle> require_labeled_bundles(const std::vector<Measurement>& ms) {
    std::vector<TimeSeriesBundle> out;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto* b = std::get_if<TimeSeriesBundle>(&ms[i]);
        if (!b)
            throw DataError("record " + std::to_string(i + 1) +
                            " is not a series record; the anomaly pipeline needs series data");
        if (!b->label)
            throw DataError("record " + std::to_string(i + 1) + " (id '" + b->id +
                            "') has no label; training data must be labeled");
        out.push_back(*b);
    }
    return out;
}

std::vector<Spectrum1D> require_labeled_spectra(const std::vector<Measurement>& ms) {
    std::vector<Spectrum1D> out;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto* s = std::get_if<Spectrum1D>(&ms[i]);
        if (!s)
            throw DataError("record " + std::to_string(i + 1) +
                            " is not a spectrum record; the classify pipeline needs spectra");
        if (!s->label)
            throw DataError("record " + std::to_string(i + 1) +
                            " has no label; training data must be labeled");
        out.push_back(*s);
    }
    return out;
}

void refuse_overwrite(const fs::path& path, bool force) {
    if (!force && fs::exists(path))
        throw UsageError(path.string() + " already exists; pass --force to overwrite");
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& kind, const fs::path& out_dir,
              std::optional<std::uint64_t> seed, bool force) {
    fs::create_directories(out_dir);

    if (kind == "xpcs") {
        const fs::path path = out_dir / "xpcs_benchmark.jsonl";
        refuse_overwrite(path, force);
        const auto bench = synth::make_xpcs_benchmark(seed.value_or(synth::kXpcsBenchmarkSeed));
        std::ofstream out(path);
        for (const auto& b : bench.bundles) out << to_json(b).dump() << "\n";
        std::cout << "wrote " << bench.bundles.size() << " series records to " << path.string()
                  << "\n";
        return kExitOk;
    }
    if (kind == "xafs") {
        const fs::path path = out_dir / "xafs_benchmark.jsonl";
        refuse_overwrite(path, force);
        const auto bench = synth::make_xafs_benchmark(seed.value_or(synth::kXafsBenchmarkSeed));
        std::ofstream out(path);
        for (const auto& s : bench.spectra) out << to_json(s).dump() << "\n";
        std::cout << "wrote " << bench.spectra.size() << " spectrum records to " << path.string()
                  << " (" << bench.holdout.size() << " holdout, flagged in meta)\n";
        return kExitOk;
    }
    if (kind == "ramp") {
        const fs::path path = out_dir / "ramp.jsonl";
        const fs::path weights_path = out_dir / "ramp_true_weights.csv";
        refuse_overwrite(path, force);
        const synth::RampSpec spec = synth::make_step_ramp(60, 3, 27.0, 690.0, 400.0, 0.01, 300);
        const synth::RampResult r =
            synth::gen_ramp(spec, seed.value_or(synth::kRampBenchmarkSeed));
        std::ofstream out(path);
        for (const auto& s : r.spectra) out << to_json(s).dump() << "\n";
        std::ofstream wout(weights_path);
        wout << "temperature_C";
        for (std::size_t p = 0; p < r.true_weights.cols(); ++p) wout << ",phase_" << p;
        wout << "\n";
        for (std::size_t i = 0; i < r.true_weights.rows(); ++i) {
            wout << spec.temperatures[i];
            for (std::size_t p = 0; p < r.true_weights.cols(); ++p)
                wout << ',' << r.true_weights(i, p);
            wout << "\n";
        }
        std::cout << "wrote " << r.spectra.size() << " spectrum records to " << path.string()
                  << " and ground-truth weights to " << weights_path.string() << "\n";
        return kExitOk;
    }
    throw UsageError("unknown synth kind '" + kind + "' (expected xpcs, xafs, or ramp)");
}

// ---------------------------------------------------------------------------
// train / eval

struct StrictThresholds {
    double min_recall = 0.90;
    double max_fdr = 0.10;
    double min_recall_all = 0.85;
    double min_f1 = 0.95;
};

int cmd_train_anomaly(const fs::path& data, const fs::path& out_artifact,
                      const std::string& detector, std::uint64_t seed,
                      const std::optional<fs::path>& report_path, bool strict,
                      const StrictThresholds& thresholds) {
    const std::vector<TimeSeriesBundle> bundles =
        require_labeled_bundles(read_measurement_file(data));

    const anomaly::DetectorKind kinds[3] = {anomaly::DetectorKind::lof,
                                            anomaly::DetectorKind::ee,
                                            anomaly::DetectorKind::iforest};
    std::map<std::string, anomaly::AnomalyTraining> trained;
    for (const anomaly::DetectorKind kind : kinds) {
        anomaly::DetectorOptions opts;
        opts.seed = seed;
        trained.emplace(anomaly::to_string(kind),
                        anomaly::train_anomaly_pipeline(bundles, kind, {}, opts, seed));
    }

    // Table-1-style layout: metric rows, one column per detector
    std::cout << std::left << std::setw(30) << "Model" << std::setw(9) << "LOD"
              << std::setw(9) << "EE" << std::setw(9) << "IFT" << "\n";
    std::cout << std::left << std::setw(30) << "Recall Anomaly";
    for (const char* k : {"lof", "ee", "iforest"})
        std::cout << std::setw(9) << std::setprecision(3) << trained.at(k).test.recall_anomaly;
    std::cout << "\n" << std::left << std::setw(30) << "False Anomaly Discovery Rate";
    for (const char* k : {"lof", "ee", "iforest"})
        std::cout << std::setw(9) << std::setprecision(3) << trained.at(k).test.fdr_value;
    std::cout << "\n";
    for (const char* k : {"lof", "ee", "iforest"}) {
        const auto& t = trained.at(k);
        std::cout << k << ": best n_components=" << t.tuning.best_n_components
                  << " contamination=" << t.tuning.best_contamination
                  << " validation objective=" << t.tuning.best_objective << "\n";
    }

    if (report_path) {
        nlohmann::json report;
        for (const auto& [name, t] : trained) {
            nlohmann::json table = nlohmann::json::array();
            for (const auto& cell : t.tuning.table)
                table.push_back({{"n_components", cell.n_components},
                                 {"contamination", cell.contamination},
                                 {"recall_anomaly", cell.recall_anomaly},
                                 {"fdr", cell.fdr_value},
                                 {"objective", cell.objective}});
            report[name] = {
                {"test",
                 {{"recall_anomaly", t.test.recall_anomaly},
                  {"fdr", t.test.fdr_value},
                  {"tp", t.test.cm.tp},
                  {"fp", t.test.cm.fp},
                  {"tn", t.test.cm.tn},
                  {"fn", t.test.cm.fn}}},
                {"best",
                 {{"n_components", t.tuning.best_n_components},
                  {"contamination", t.tuning.best_contamination},
                  {"objective", t.tuning.best_objective}}},
                {"grid", table}};
        }
        std::ofstream(report_path->string()) << report.dump(2) << "\n";
        std::cout << "metrics report written to " << report_path->string() << "\n";
    }

    const auto& chosen = trained.at(detector);
    ingest::save_model(ingest::make_artifact(chosen.pipeline), out_artifact);
    std::cout << "artifact (" << detector << ") written to " << out_artifact.string() << "\n";

    if (strict) {
        for (const auto& [name, t] : trained)
            if (t.test.recall_anomaly < thresholds.min_recall_all)
                throw ThresholdError(name + " recall " + std::to_string(t.test.recall_anomaly) +
                                     " below required " +
                                     std::to_string(thresholds.min_recall_all));
        if (chosen.test.recall_anomaly < thresholds.min_recall)
            throw ThresholdError(detector + " recall below --min-recall");
        if (chosen.test.fdr_value > thresholds.max_fdr)
            throw ThresholdError(detector + " FDR above --max-fdr");
    }
    return kExitOk;
}

int cmd_train_classify(const fs::path& data, const fs::path& out_artifact,
                       const std::string& model, const std::string& representation,
                       std::uint64_t seed, const std::optional<fs::path>& report_path,
                       bool strict, const StrictThresholds& thresholds) {
    const std::vector<Spectrum1D> spectra = require_labeled_spectra(read_measurement_file(data));

    std::vector<std::size_t> holdout;
    for (std::size_t i = 0; i < spectra.size(); ++i)
        if (spectra[i].meta.count("holdout") && spectra[i].meta.at("holdout") != 0.0)
            holdout.push_back(i);

    classify::EvalOptions opts;
    opts.seed = seed;
    const std::vector<classify::EvalRow> rows = classify::eval_suite(spectra, holdout, opts);
    const std::string csv = classify::eval_rows_to_csv(rows);
    std::cout << csv;
    if (report_path) {
        std::ofstream(report_path->string()) << csv;
        std::cout << "metrics report written to " << report_path->string() << "\n";
    }

    const classify::ClassifierPipeline pipeline = classify::train_classifier_pipeline(
        spectra, classify::model_kind_from_string(model),
        classify::representation_from_string(representation), opts);
    ingest::save_model(ingest::make_artifact(pipeline), out_artifact);
    std::cout << "artifact (" << model << ", " << representation << ") written to "
              << out_artifact.string() << "\n";

    if (strict) {
        for (const auto& row : rows) {
            if (row.representation == classify::Representation::engineered &&
                row.split == classify::SplitKind::uniform && row.f1_score < thresholds.min_f1)
                throw ThresholdError(std::string(classify::to_string(row.model)) +
                                     " engineered/uniform F1 " + std::to_string(row.f1_score) +
                                     " below required " + std::to_string(thresholds.min_f1));
        }
    }
    return kExitOk;
}

int cmd_eval(const fs::path& artifact_path, const fs::path& data, bool strict,
             const StrictThresholds& thresholds) {
    const ingest::ModelArtifact artifact = ingest::load_model(artifact_path);
    const std::vector<Measurement> ms = read_measurement_file(data);

    if (artifact.kind == "anomaly") {
        const anomaly::AnomalyPipeline pipeline =
            model_io::anomaly_pipeline_from_json(artifact.body);
        std::vector<SeriesLabel> pred, actual;
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const auto* b = std::get_if<TimeSeriesBundle>(&ms[i]);
            if (!b || !b->label)
                throw DataError("record " + std::to_string(i + 1) +
                                " is not a labeled series record");
            pred.push_back(pipeline.score(*b).label);
            actual.push_back(*b->label);
        }
        const ConfusionMatrix cm = confusion(pred, actual, SeriesLabel::anomalous);
        const double rec = recall(cm);
        const double fd = cm.tp + cm.fp > 0 ? fdr(cm) : 0.0;
        std::cout << "confusion: tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn
                  << " fn=" << cm.fn << "\n";
        std::cout << "Recall Anomaly " << std::setprecision(3) << rec << "\n";
        std::cout << "False Anomaly Discovery Rate " << std::setprecision(3) << fd << "\n";
        if (strict) {
            if (rec < thresholds.min_recall) throw ThresholdError("recall below --min-recall");
            if (fd > thresholds.max_fdr) throw ThresholdError("FDR above --max-fdr");
        }
        return kExitOk;
    }
    if (artifact.kind == "classify") {
        const classify::ClassifierPipeline pipeline =
            model_io::classifier_pipeline_from_json(artifact.body);
        std::vector<SpectrumLabel> pred, actual;
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const auto* s = std::get_if<Spectrum1D>(&ms[i]);
            if (!s || !s->label)
                throw DataError("record " + std::to_string(i + 1) +
                                " is not a labeled spectrum record");
            pred.push_back(pipeline.classify(*s).label);
            actual.push_back(*s->label);
        }
        const ConfusionMatrix cm = confusion(pred, actual, SpectrumLabel::good);
        std::cout << "confusion: tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn
                  << " fn=" << cm.fn << "\n";
        std::cout << "F1 " << std::setprecision(4) << f1(cm) << "\n";
        std::cout << "Accuracy " << std::setprecision(4) << accuracy(cm) << "\n";
        if (strict && f1(cm) < thresholds.min_f1)
            throw ThresholdError("F1 below --min-f1");
        return kExitOk;
    }
    throw UsageError("artifact kind '" + artifact.kind + "' cannot be evaluated");
}

// ---------------------------------------------------------------------------
// nmf

std::vector<Spectrum1D> read_patterns(const fs::path& data) {
    std::vector<Spectrum1D> out;
    auto take = [&out](const fs::path& file) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot read " + file.string());
        in >> std::ws;
        char first = 0;
        in.get(first);
        in.unget();
        if (first == '{') {
            for (const auto& m : read_measurements(in)) {
                const auto* s = std::get_if<Spectrum1D>(&m);
                if (!s) throw DataError(file.string() + ": expected spectrum records");
                out.push_back(*s);
            }
        } else {
            out.push_back(read_two_column(in));
        }
    };

    if (fs::is_directory(data)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(data))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) take(f);
    } else {
        take(data);
    }
    if (out.empty()) throw DataError("no patterns found in " + data.string());
    return out;
}

void write_matrix_csv(const fs::path& path, const std::string& index_name,
                      const std::vector<double>& index, const DenseMatrix& m,
                      const std::string& col_prefix) {
    std::ofstream out(path);
    out << index_name;
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << col_prefix << j;
    out << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << index[i];
        for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
        out << "\n";
    }
}

int cmd_nmf(const fs::path& data, std::size_t p,
            const std::optional<std::pair<std::size_t, std::size_t>>& window,
            const fs::path& out_dir, std::size_t max_iter, double tol, std::uint64_t seed) {
    const std::vector<Spectrum1D> patterns = read_patterns(data);
    fs::create_directories(out_dir);

    NmfSession session(p, {.max_iter = max_iter, .tol = tol, .seed = seed}, window);
    std::size_t step = 0;
    for (const auto& pattern : patterns) {
        try {
            session.tell(pattern);
        } catch (const std::exception& e) {
            throw DataError("pattern " + std::to_string(step + 1) + ": " + e.what());
        }
        ++step;

        char dir_name[32];
        std::snprintf(dir_name, sizeof(dir_name), "step_%04zu", step);
        const fs::path snap = out_dir / dir_name;
        fs::create_directories(snap);

        const NmfReport report = session.report();
        std::ofstream(snap / "report.json") << to_json(report).dump(2) << "\n";

        // plot-ready CSV, one file per panel
        const std::size_t lo = report.window ? report.window->first : 0;
        std::vector<double> ordinate(report.components.cols());
        for (std::size_t j = 0; j < ordinate.size(); ++j)
            ordinate[j] = session.grid()[lo + j];
        write_matrix_csv(snap / "components.csv", "ordinate", ordinate,
                         transpose(report.components), "component_");
        write_matrix_csv(snap / "weights.csv", "meta", report.meta_values, report.weights,
                         "weight_");
        {
            std::ofstream out(snap / "rel_errors.csv");
            out << "meta,rel_error\n";
            for (std::size_t i = 0; i < report.rel_errors.size(); ++i)
                out << report.meta_values[i] << ',' << report.rel_errors[i] << "\n";
        }
        write_matrix_csv(snap / "residuals.csv", "meta", report.meta_values, report.residuals,
                         "r_");
    }
    std::cout << "processed " << step << " patterns; snapshots under " << out_dir.string()
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// watch

int cmd_watch(const ConfigFile* config, std::optional<std::string> dir_flag,
              std::optional<std::string> glob_flag, std::optional<std::string> artifact_flag,
              std::optional<std::string> url_flag, std::optional<std::string> archive_flag,
              double interval, int debounce, std::size_t pause_after, bool slack,
              std::uint64_t max_files, double drain_timeout) {
    const Resolved data_dir =
        resolve_config(dir_flag, "SENTINEL_DATA_DIR", config, "watch.data_dir", ".");
    const Resolved glob = resolve_config(glob_flag, nullptr, config, "watch.glob", "*.json");
    const Resolved artifact_path =
        resolve_config(artifact_flag, nullptr, config, "watch.artifact", "");
    const Resolved url =
        resolve_config(url_flag, "SENTINEL_WEBHOOK_URL", config, "webhook.url", "");
    const Resolved archive =
        resolve_config(archive_flag, nullptr, config, "watch.archive", "reports.jsonl");

    print_resolved("data_dir", data_dir);
    print_resolved("glob", glob);
    print_resolved("artifact", artifact_path);
    print_resolved("webhook_url", url);
    print_resolved("archive", archive);

    if (artifact_path.value.empty())
        throw UsageError("watch needs a model artifact (--artifact or watch.artifact)");

    const ingest::ModelArtifact artifact = ingest::load_model(artifact_path.value);
    const std::unique_ptr<Agent> agent =
        ingest::agent_from_artifact(artifact, artifact.kind + "-watch", pause_after);
    std::cout << "config: agent_kind = " << artifact.kind << "  [artifact]\n";

    ingest::FileArchiveSink archive_sink{fs::path(archive.value)};
    std::vector<ingest::ReportSink*> sinks{&archive_sink};
    std::unique_ptr<ingest::WebhookSink> webhook;
    if (!url.value.empty()) {
        ingest::WebhookOptions wopts;
        wopts.url = url.value;
        wopts.slack_format = slack;
        webhook = std::make_unique<ingest::WebhookSink>(wopts);
        sinks.push_back(webhook.get());
    }

    ingest::WatchConfig wconfig;
    wconfig.directory = data_dir.value;
    wconfig.glob = glob.value;
    wconfig.poll_interval_s = interval;
    wconfig.debounce_polls = debounce;

    ingest::Watcher watcher(wconfig, *agent, sinks);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    watcher.start();
    std::cout << "watching " << data_dir.value << " (glob " << glob.value
              << ", agent " << artifact.kind << "); Ctrl-C to stop\n";

    while (!g_interrupted) {
        if (max_files > 0 && watcher.stats().files_seen >= max_files) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    watcher.stop();
    if (webhook) webhook->shutdown(drain_timeout);

    std::cout << "summary: " << watcher.summary() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentinel: streaming ML monitor for beamline data"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "TOML-style config file");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a built-in benchmark dataset");
    std::string synth_kind;
    std::string synth_out = ".";
    std::optional<std::uint64_t> synth_seed;
    bool synth_force = false;
    synth_cmd->add_option("--kind", synth_kind, "dataset kind: xpcs, xafs, or ramp")
        ->required();
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--seed", synth_seed, "generator seed (defaults to the canonical seed)");
    synth_cmd->add_flag("--force", synth_force, "overwrite existing files");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a pipeline and write its artifact");
    std::string train_pipeline, train_data, train_out;
    std::string train_detector = "ee";
    std::string train_model = "rf";
    std::string train_representation = "engineered";
    std::uint64_t train_seed = 0;
    std::optional<std::string> train_report;
    bool train_strict = false;
    StrictThresholds thresholds;
    train_cmd->add_option("--pipeline", train_pipeline, "anomaly or classify")->required();
    train_cmd->add_option("--data", train_data, "labeled JSON Lines dataset")->required();
    train_cmd->add_option("--out", train_out, "artifact output path")->required();
    train_cmd->add_option("--detector", train_detector, "anomaly detector: lof, ee, iforest");
    train_cmd->add_option("--model", train_model, "classifier model: knn, rf, mlp");
    train_cmd->add_option("--representation", train_representation,
                          "classifier representation: raw, engineered");
    train_cmd->add_option("--seed", train_seed, "split/tuning seed");
    train_cmd->add_option("--report", train_report, "metrics report output path");
    train_cmd->add_flag("--strict", train_strict, "nonzero exit when thresholds fail");
    train_cmd->add_option("--min-recall", thresholds.min_recall,
                          "strict: minimum recall for the chosen detector");
    train_cmd->add_option("--max-fdr", thresholds.max_fdr,
                          "strict: maximum FDR for the chosen detector");
    train_cmd->add_option("--min-recall-all", thresholds.min_recall_all,
                          "strict: minimum recall for every detector");
    train_cmd->add_option("--min-f1", thresholds.min_f1,
                          "strict: minimum engineered/uniform F1 per classifier");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate an artifact on a labeled dataset");
    std::string eval_artifact, eval_data;
    bool eval_strict = false;
    eval_cmd->add_option("--artifact", eval_artifact, "model artifact path")->required();
    eval_cmd->add_option("--data", eval_data, "labeled JSON Lines dataset")->required();
    eval_cmd->add_flag("--strict", eval_strict, "nonzero exit when thresholds fail");
    eval_cmd->add_option("--min-recall", thresholds.min_recall, "strict: minimum recall");
    eval_cmd->add_option("--max-fdr", thresholds.max_fdr, "strict: maximum FDR");
    eval_cmd->add_option("--min-f1", thresholds.min_f1, "strict: minimum F1");

    // nmf
    auto* nmf_cmd = app.add_subcommand("nmf", "run a decomposition session over patterns");
    std::string nmf_data, nmf_out = "nmf_out";
    std::optional<std::size_t> nmf_p;
    std::optional<std::string> nmf_window;
    std::size_t nmf_max_iter = 500;
    double nmf_tol = 1e-6;
    std::uint64_t nmf_seed = 0;
    nmf_cmd->add_option("--data", nmf_data, "JSON Lines file or directory of pattern files")
        ->required();
    nmf_cmd->add_option("--p", nmf_p, "number of components");
    nmf_cmd->add_option("--window", nmf_window, "ordinate index window lo:hi");
    nmf_cmd->add_option("--out", nmf_out, "snapshot output directory");
    nmf_cmd->add_option("--max-iter", nmf_max_iter, "update sweeps per refit");
    nmf_cmd->add_option("--tol", nmf_tol, "relative objective-decrease tolerance");
    nmf_cmd->add_option("--seed", nmf_seed, "initialization seed");

    // watch
    auto* watch_cmd = app.add_subcommand("watch", "monitor a directory with a saved model");
    std::optional<std::string> watch_dir, watch_glob, watch_artifact, watch_url, watch_archive;
    double watch_interval = 0.5;
    int watch_debounce = 2;
    std::size_t watch_pause_after = 3;
    bool watch_slack = false;
    std::uint64_t watch_max_files = 0;
    double watch_drain = 10.0;
    watch_cmd->add_option("--dir", watch_dir, "directory to watch");
    watch_cmd->add_option("--glob", watch_glob, "filename glob");
    watch_cmd->add_option("--artifact", watch_artifact, "model artifact path");
    watch_cmd->add_option("--url", watch_url, "webhook endpoint URL");
    watch_cmd->add_option("--archive", watch_archive, "report archive path");
    watch_cmd->add_option("--interval", watch_interval, "poll interval in seconds");
    watch_cmd->add_option("--debounce", watch_debounce, "polls of stable size before telling");
    watch_cmd->add_option("--pause-after", watch_pause_after,
                          "consecutive alarms before a Pause directive");
    watch_cmd->add_flag("--slack", watch_slack, "wrap webhook payloads in Slack format");
    watch_cmd->add_option("--max-files", watch_max_files, "exit after this many files (0 = run)");
    watch_cmd->add_option("--drain-timeout", watch_drain,
                          "seconds to drain the webhook queue on shutdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        std::optional<ConfigFile> config;
        if (!config_path.empty()) config = ConfigFile::load(config_path);
        const ConfigFile* cfg = config ? &*config : nullptr;

        if (*synth_cmd) return cmd_synth(synth_kind, synth_out, synth_seed, synth_force);

        if (*train_cmd) {
            print_resolved("data", {train_data, "flag"});
            print_resolved("artifact", {train_out, "flag"});
            if (train_pipeline == "anomaly")
                return cmd_train_anomaly(train_data, train_out, train_detector, train_seed,
                                         train_report ? std::optional<fs::path>(*train_report)
                                                      : std::nullopt,
                                         train_strict, thresholds);
            if (train_pipeline == "classify")
                return cmd_train_classify(train_data, train_out, train_model,
                                          train_representation, train_seed,
                                          train_report ? std::optional<fs::path>(*train_report)
                                                       : std::nullopt,
                                          train_strict, thresholds);
            throw UsageError("unknown pipeline '" + train_pipeline +
                             "' (expected anomaly or classify)");
        }

        if (*eval_cmd) return cmd_eval(eval_artifact, eval_data, eval_strict, thresholds);

        if (*nmf_cmd) {
            const Resolved p_resolved = resolve_config(
                nmf_p ? std::optional<std::string>(std::to_string(*nmf_p)) : std::nullopt,
                nullptr, cfg, "nmf.p", "4");
            const Resolved window_resolved =
                resolve_config(nmf_window, nullptr, cfg, "nmf.window", "");
            print_resolved("nmf_p", p_resolved);
            print_resolved("nmf_window", window_resolved);

            std::optional<std::pair<std::size_t, std::size_t>> window;
            if (!window_resolved.value.empty()) {
                const std::size_t colon = window_resolved.value.find(':');
                if (colon == std::string::npos)
                    throw UsageError("--window expects lo:hi index range");
                window = std::make_pair(
                    static_cast<std::size_t>(std::stoull(window_resolved.value.substr(0, colon))),
                    static_cast<std::size_t>(std::stoull(window_resolved.value.substr(colon + 1))));
            }
            return cmd_nmf(nmf_data, std::stoull(p_resolved.value), window, nmf_out,
                           nmf_max_iter, nmf_tol, nmf_seed);
        }

        if (*watch_cmd)
            return cmd_watch(cfg, watch_dir, watch_glob, watch_artifact, watch_url,
                             watch_archive, watch_interval, watch_debounce, watch_pause_after,
                             watch_slack, watch_max_files, watch_drain);

        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ThresholdError& e) {
        std::cerr << "threshold failure: " << e.what() << "\n";
        return kExitThreshold;
    } catch (const ingest::ArtifactError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "runtime fault: " << e.what() << "\n";
        return kExitRuntime;
    }
}
