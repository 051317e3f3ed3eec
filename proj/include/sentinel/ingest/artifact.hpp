#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sentinel/agent.hpp"
#include "sentinel/model_io.hpp"
#include "sentinel/sha256.hpp"

namespace sentinel::ingest {

inline constexpr const char* kArtifactSchemaVersion = "artifact/1";

struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ChecksumError : ArtifactError {
    using ArtifactError::ArtifactError;
};
struct VersionError : ArtifactError {
    using ArtifactError::ArtifactError;
};

// Versioned, checksummed envelope around a serialized model body.
struct ModelArtifact {
    std::string schema_version = kArtifactSchemaVersion;
    std::string kind;  // "anomaly" | "classify" | "nmf"
    std::string created;
    std::string feature_schema;
    nlohmann::json body;
};

inline void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
    nlohmann::json envelope;
    envelope["schema_version"] = artifact.schema_version;
    envelope["kind"] = artifact.kind;
    envelope["created"] = artifact.created;
    envelope["feature_schema"] = artifact.feature_schema;
    envelope["checksum_sha256"] = Sha256::hex(artifact.body.dump());
    envelope["body"] = artifact.body;

    std::ofstream out(path);
    if (!out) throw ArtifactError("save_model: cannot write " + path.string());
    out << envelope.dump(2) << "\n";
    if (!out.good()) throw ArtifactError("save_model: write failed for " + path.string());
}

inline ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("load_model: cannot read " + path.string());
    nlohmann::json envelope;
    try {
        envelope = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ArtifactError("load_model: invalid JSON in " + path.string() + ": " + e.what());
    }

    ModelArtifact artifact;
    artifact.schema_version = envelope.at("schema_version").get<std::string>();
    if (artifact.schema_version != kArtifactSchemaVersion)
        throw VersionError("load_model: artifact version '" + artifact.schema_version +
                           "' needs migration; this build reads '" + kArtifactSchemaVersion +
                           "'");
    artifact.kind = envelope.at("kind").get<std::string>();
    artifact.created = envelope.at("created").get<std::string>();
    artifact.feature_schema = envelope.at("feature_schema").get<std::string>();
    artifact.body = envelope.at("body");

    const std::string expected = envelope.at("checksum_sha256").get<std::string>();
    const std::string actual = Sha256::hex(artifact.body.dump());
    if (expected != actual)
        throw ChecksumError("load_model: checksum mismatch in " + path.string() +
                            " (stored " + expected + ", computed " + actual + ")");
    return artifact;
}

inline ModelArtifact make_artifact(const anomaly::AnomalyPipeline& p) {
    ModelArtifact a;
    a.kind = "anomaly";
    a.created = utc_timestamp();
    a.feature_schema = p.feature_schema;
    a.body = model_io::anomaly_pipeline_to_json(p);
    return a;
}

inline ModelArtifact make_artifact(const classify::ClassifierPipeline& p) {
    ModelArtifact a;
    a.kind = "classify";
    a.created = utc_timestamp();
    a.feature_schema = p.feature_schema;
    a.body = model_io::classifier_pipeline_to_json(p);
    return a;
}

inline ModelArtifact make_artifact(const NmfSession& session) {
    ModelArtifact a;
    a.kind = "nmf";
    a.created = utc_timestamp();
    a.feature_schema = "none";
    a.body = session.to_json();
    return a;
}

// Reconstructs the matching agent from a loaded artifact.
inline std::unique_ptr<Agent> agent_from_artifact(const ModelArtifact& artifact,
                                                  std::string agent_id,
                                                  std::size_t pause_after = 3) {
    if (artifact.kind == "anomaly")
        return std::make_unique<AnomalyAgent>(
            std::move(agent_id), model_io::anomaly_pipeline_from_json(artifact.body),
            pause_after);
    if (artifact.kind == "classify")
        return std::make_unique<ClassifierAgent>(
            std::move(agent_id), model_io::classifier_pipeline_from_json(artifact.body));
    if (artifact.kind == "nmf")
        return std::make_unique<NmfAgent>(std::move(agent_id),
                                          NmfSession::from_json(artifact.body));
    throw ArtifactError("agent_from_artifact: unknown artifact kind '" + artifact.kind + "'");
}

}  // namespace sentinel::ingest
