#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/jsonl.hpp"

namespace sentinel::ingest {

// Violation of the start/events/stop framing grammar.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DocType { start, event, stop };

inline const char* to_string(DocType t) {
    switch (t) {
        case DocType::start: return "start";
        case DocType::event: return "event";
        case DocType::stop: return "stop";
    }
    return "?";
}

// One line of the document stream. Start carries plan metadata, events carry
// one measurement record each, stop carries the exit status.
struct Document {
    DocType doc_type = DocType::event;
    std::string run_id;
    std::uint64_t seq = 0;
    std::string time;
    nlohmann::json body;

    nlohmann::json to_json() const {
        return {{"doc_type", to_string(doc_type)},
                {"run_id", run_id},
                {"seq", seq},
                {"time", time},
                {"body", body}};
    }

    static Document from_json(const nlohmann::json& j) {
        Document d;
        const std::string t = j.at("doc_type").get<std::string>();
        if (t == "start")
            d.doc_type = DocType::start;
        else if (t == "event")
            d.doc_type = DocType::event;
        else if (t == "stop")
            d.doc_type = DocType::stop;
        else
            throw ProtocolError("unknown doc_type '" + t + "'");
        d.run_id = j.at("run_id").get<std::string>();
        d.seq = j.at("seq").get<std::uint64_t>();
        if (j.contains("time") && j["time"].is_string()) d.time = j["time"].get<std::string>();
        if (j.contains("body")) d.body = j["body"];
        return d;
    }
};

struct StreamWarning {
    std::string run_id;
    std::uint64_t seq = 0;
    std::string message;
};

// Push-style reader enforcing the framing grammar per run: exactly one start
// before any event, strictly increasing seq, exactly one stop after. Seq gaps
// warn rather than fail since real acquisitions drop frames.
class DocumentStreamReader {
public:
    std::function<void(const std::string& run_id, const Measurement&)> on_record;
    std::function<void(const std::string& run_id, const std::string& exit_status)>
        on_run_complete;
    std::function<void(const StreamWarning&)> on_warning;

    void feed(const Document& doc) {
        RunState& run = runs_[doc.run_id];
        const std::string at = "run '" + doc.run_id + "' seq " + std::to_string(doc.seq);

        if (run.stopped)
            throw ProtocolError(at + ": document after stop");
        if (run.has_seq && doc.seq <= run.last_seq)
            throw ProtocolError(at + ": seq not increasing (previous " +
                                std::to_string(run.last_seq) + ")");
        switch (doc.doc_type) {
            case DocType::start:
                if (run.started) throw ProtocolError(at + ": duplicate start");
                run.started = true;
                break;
            case DocType::event: {
                if (!run.started) throw ProtocolError(at + ": event before start");
                if (run.has_seq && doc.seq > run.last_seq + 1 && on_warning)
                    on_warning({doc.run_id, doc.seq,
                                at + ": seq gap after " + std::to_string(run.last_seq)});
                Measurement m = measurement_from_json(doc.body);
                if (on_record) on_record(doc.run_id, m);
                break;
            }
            case DocType::stop: {
                if (!run.started) throw ProtocolError(at + ": stop before start");
                run.stopped = true;
                std::string status = "unknown";
                if (doc.body.is_object() && doc.body.contains("exit_status"))
                    status = doc.body["exit_status"].get<std::string>();
                if (on_run_complete) on_run_complete(doc.run_id, status);
                break;
            }
        }
        run.last_seq = doc.seq;
        run.has_seq = true;
    }

    void feed_line(const std::string& line) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ProtocolError(std::string("invalid document JSON: ") + e.what());
        }
        feed(Document::from_json(j));
    }

    // Emits incomplete-run warnings for runs that never saw their stop.
    void end_of_feed() {
        for (const auto& [run_id, state] : runs_) {
            if (state.started && !state.stopped && on_warning)
                on_warning({run_id, state.last_seq,
                            "run '" + run_id + "' ended without a stop document"});
        }
    }

private:
    struct RunState {
        bool started = false;
        bool stopped = false;
        bool has_seq = false;
        std::uint64_t last_seq = 0;
    };
    std::map<std::string, RunState> runs_;
};

struct RunRecords {
    std::string run_id;
    std::vector<Measurement> records;  // in seq order
    bool completed = false;
    std::string exit_status;
};

// Convenience wrapper grouping a whole JSON Lines feed by run.
inline std::vector<RunRecords> read_document_stream(std::istream& in,
                                                    std::vector<StreamWarning>* warnings = nullptr) {
    std::vector<RunRecords> runs;
    std::map<std::string, std::size_t> index;

    DocumentStreamReader reader;
    reader.on_record = [&](const std::string& run_id, const Measurement& m) {
        if (!index.count(run_id)) {
            index[run_id] = runs.size();
            runs.push_back({run_id, {}, false, ""});
        }
        runs[index[run_id]].records.push_back(m);
    };
    reader.on_run_complete = [&](const std::string& run_id, const std::string& status) {
        if (!index.count(run_id)) {
            index[run_id] = runs.size();
            runs.push_back({run_id, {}, false, ""});
        }
        runs[index[run_id]].completed = true;
        runs[index[run_id]].exit_status = status;
    };
    if (warnings)
        reader.on_warning = [warnings](const StreamWarning& w) { warnings->push_back(w); };

    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        reader.feed_line(line);
    }
    reader.end_of_feed();
    return runs;
}

}  // namespace sentinel::ingest
