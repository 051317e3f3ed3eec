#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include <json.hpp>

#include "sentinel/anomaly/pipeline.hpp"
#include "sentinel/classify/eval.hpp"
#include "sentinel/data.hpp"
#include "sentinel/nmf.hpp"

namespace sentinel {

inline constexpr const char* kReportSchemaVersion = "report/v1";

enum class AgentKind { nmf, anomaly, classification };
enum class ReportStatus { ok, warning, alarm };
enum class DirectiveAction { Continue, Pause, Alert };

inline const char* to_string(AgentKind k) {
    switch (k) {
        case AgentKind::nmf: return "nmf";
        case AgentKind::anomaly: return "anomaly";
        case AgentKind::classification: return "classification";
    }
    return "?";
}

inline const char* to_string(ReportStatus s) {
    switch (s) {
        case ReportStatus::ok: return "ok";
        case ReportStatus::warning: return "warning";
        case ReportStatus::alarm: return "alarm";
    }
    return "?";
}

inline const char* to_string(DirectiveAction a) {
    switch (a) {
        case DirectiveAction::Continue: return "continue";
        case DirectiveAction::Pause: return "pause";
        case DirectiveAction::Alert: return "alert";
    }
    return "?";
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() %
        1000;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms));
    return buf;
}

struct Report {
    std::string timestamp;
    std::string agent_id;
    AgentKind kind = AgentKind::nmf;
    ReportStatus status = ReportStatus::ok;
    std::uint64_t sequence = 0;  // strictly increasing per agent
    nlohmann::json payload;

    nlohmann::json to_json() const {
        return {{"schema_version", kReportSchemaVersion},
                {"timestamp", timestamp},
                {"agent_id", agent_id},
                {"kind", sentinel::to_string(kind)},
                {"status", sentinel::to_string(status)},
                {"sequence", sequence},
                {"payload", payload}};
    }
};

struct Directive {
    DirectiveAction action = DirectiveAction::Continue;
    std::string reason;

    bool operator==(const Directive&) const = default;

    nlohmann::json to_json() const {
        return {{"kind", "directive"}, {"action", sentinel::to_string(action)},
                {"reason", reason}};
    }
};

// The uniform tell-report-ask contract. tell is single-writer; report and ask
// may be called from other threads and observe a consistent snapshot.
class Agent {
public:
    explicit Agent(std::string id) : id_(std::move(id)) {}
    virtual ~Agent() = default;

    // Returns the per-agent event count after ingesting the measurement.
    std::uint64_t tell(const Measurement& m) {
        const std::lock_guard lock(mutex_);
        tell_locked(m);
        return ++events_;
    }

    Report report() {
        const std::lock_guard lock(mutex_);
        if (events_ == 0) throw std::logic_error("Agent::report: no data told yet");
        Report r;
        r.timestamp = utc_timestamp();
        r.agent_id = id_;
        r.kind = kind();
        r.status = status_locked();
        r.sequence = ++sequence_;
        r.payload = payload_locked();
        return r;
    }

    Directive ask() const {
        const std::lock_guard lock(mutex_);
        return ask_locked();
    }

    const std::string& id() const { return id_; }
    virtual AgentKind kind() const = 0;

    std::uint64_t events_told() const {
        const std::lock_guard lock(mutex_);
        return events_;
    }

protected:
    virtual void tell_locked(const Measurement& m) = 0;
    virtual nlohmann::json payload_locked() const = 0;
    virtual ReportStatus status_locked() const = 0;
    virtual Directive ask_locked() const = 0;

    mutable std::mutex mutex_;

private:
    std::string id_;
    std::uint64_t events_ = 0;
    std::uint64_t sequence_ = 0;
};

// Monitoring-only decomposition agent: every tell refits the model and the
// report carries the full decomposition snapshot.
class NmfAgent final : public Agent {
public:
    NmfAgent(std::string id, std::size_t p, NmfOptions opts = {},
             std::optional<std::pair<std::size_t, std::size_t>> window = std::nullopt)
        : Agent(std::move(id)), session_(p, opts, window) {}

    NmfAgent(std::string id, NmfSession session)
        : Agent(std::move(id)), session_(std::move(session)) {}

    AgentKind kind() const override { return AgentKind::nmf; }

    const NmfSession& session() const { return session_; }

protected:
    void tell_locked(const Measurement& m) override {
        const auto* s = std::get_if<Spectrum1D>(&m);
        if (!s) throw std::invalid_argument("NmfAgent: expected a spectrum record");
        session_.tell(*s);
    }

    nlohmann::json payload_locked() const override {
        return sentinel::to_json(session_.report());
    }

    ReportStatus status_locked() const override { return ReportStatus::ok; }

    Directive ask_locked() const override { return {DirectiveAction::Continue, ""}; }

private:
    NmfSession session_;
};

// Pre-trained novelty detector: tell scores, never refits. A single anomalous
// measurement asks for an Alert; pause_after consecutive ones ask for a Pause.
class AnomalyAgent final : public Agent {
public:
    AnomalyAgent(std::string id, anomaly::AnomalyPipeline pipeline, std::size_t pause_after = 3)
        : Agent(std::move(id)), pipeline_(std::move(pipeline)), pause_after_(pause_after) {
        if (pause_after_ < 1)
            throw std::invalid_argument("AnomalyAgent: pause_after must be >= 1");
    }

    AgentKind kind() const override { return AgentKind::anomaly; }

    const anomaly::AnomalyPipeline& pipeline() const { return pipeline_; }

protected:
    void tell_locked(const Measurement& m) override {
        const auto* b = std::get_if<TimeSeriesBundle>(&m);
        if (!b) throw std::invalid_argument("AnomalyAgent: expected a series record");
        last_ = pipeline_.score(*b);
        if (last_->label == SeriesLabel::anomalous) {
            ++consecutive_alarms_;
            recent_anomalous_ids_.push_back(last_->id.empty() ? "(unnamed)" : last_->id);
            while (recent_anomalous_ids_.size() > pause_after_)
                recent_anomalous_ids_.pop_front();
        } else {
            consecutive_alarms_ = 0;
            recent_anomalous_ids_.clear();
        }
    }

    nlohmann::json payload_locked() const override {
        nlohmann::json flags = nlohmann::json::array();
        for (std::size_t c = 0; c < TimeSeriesBundle::kChannels; ++c)
            if (last_->channel_flags[c]) flags.push_back(TimeSeriesBundle::channel_names[c]);
        return {{"score", last_->score},
                {"threshold", last_->threshold},
                {"label", to_string(last_->label)},
                {"feature_flags", flags},
                {"id", last_->id},
                {"consecutive_alarms", consecutive_alarms_}};
    }

    ReportStatus status_locked() const override {
        return last_->label == SeriesLabel::anomalous ? ReportStatus::alarm : ReportStatus::ok;
    }

    Directive ask_locked() const override {
        if (!last_) return {DirectiveAction::Continue, ""};
        if (consecutive_alarms_ >= pause_after_) {
            std::string ids;
            for (const auto& id : recent_anomalous_ids_) {
                if (!ids.empty()) ids += ", ";
                ids += id;
            }
            return {DirectiveAction::Pause,
                    std::to_string(consecutive_alarms_) +
                        " consecutive anomalous measurements: " + ids};
        }
        if (last_->label == SeriesLabel::anomalous)
            return {DirectiveAction::Alert, "anomalous measurement " +
                                                (last_->id.empty() ? "(unnamed)" : last_->id)};
        return {DirectiveAction::Continue, ""};
    }

private:
    anomaly::AnomalyPipeline pipeline_;
    std::size_t pause_after_;
    std::optional<anomaly::AnomalyVerdict> last_;
    std::size_t consecutive_alarms_ = 0;
    std::deque<std::string> recent_anomalous_ids_;
};

// Pre-trained good/bad classifier: Alert on any bad spectrum.
class ClassifierAgent final : public Agent {
public:
    ClassifierAgent(std::string id, classify::ClassifierPipeline pipeline)
        : Agent(std::move(id)), pipeline_(std::move(pipeline)) {}

    AgentKind kind() const override { return AgentKind::classification; }

    const classify::ClassifierPipeline& pipeline() const { return pipeline_; }

protected:
    void tell_locked(const Measurement& m) override {
        const auto* s = std::get_if<Spectrum1D>(&m);
        if (!s) throw std::invalid_argument("ClassifierAgent: expected a spectrum record");
        last_ = pipeline_.classify(*s);
        ++told_;
    }

    nlohmann::json payload_locked() const override {
        return {{"label", to_string(last_->label)},
                {"confidence", last_->confidence},
                {"emoji_code", last_->emoji_code}};
    }

    ReportStatus status_locked() const override {
        return last_->label == SpectrumLabel::bad ? ReportStatus::alarm : ReportStatus::ok;
    }

    Directive ask_locked() const override {
        if (last_ && last_->label == SpectrumLabel::bad)
            return {DirectiveAction::Alert,
                    "bad spectrum classified (measurement #" + std::to_string(told_) + ")"};
        return {DirectiveAction::Continue, ""};
    }

private:
    classify::ClassifierPipeline pipeline_;
    std::optional<classify::ClassifierVerdict> last_;
    std::uint64_t told_ = 0;
};

}  // namespace sentinel
