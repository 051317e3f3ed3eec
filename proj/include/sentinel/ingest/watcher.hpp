#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sentinel/agent.hpp"
#include "sentinel/ingest/webhook.hpp"
#include "sentinel/jsonl.hpp"

namespace sentinel::ingest {

struct WatchConfig {
    std::filesystem::path directory;
    std::string glob = "*.json";
    double poll_interval_s = 0.5;
    int debounce_polls = 2;  // polls of stable size before a file is told
    std::filesystem::path quarantine_path;  // default: <directory>/.quarantine.jsonl

    void validate() const {
        if (poll_interval_s <= 0.0)
            throw std::invalid_argument("WatchConfig: poll interval must be positive");
        if (debounce_polls < 1)
            throw std::invalid_argument("WatchConfig: debounce_polls must be >= 1");
    }
};

struct WatchStats {
    std::uint64_t files_seen = 0;
    std::uint64_t reports_sent = 0;
    std::uint64_t alarms = 0;
    std::uint64_t quarantined = 0;
};

// Minimal glob: '*' any run, '?' single character; matched against filenames.
inline bool glob_match(const std::string& pattern, const std::string& name) {
    std::size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

// Polling directory watcher wiring the tell-report-ask contract to a file
// drop point. New files are debounced on stable size, parsed, told to the
// agent in modification-time order; one report per file goes to every sink
// and Pause/Alert directives are dispatched as priority messages. Files that
// fail to parse are quarantined to a sidecar list and never crash the loop.
class Watcher {
public:
    Watcher(WatchConfig config, Agent& agent, std::vector<ReportSink*> sinks)
        : config_(std::move(config)), agent_(agent), sinks_(std::move(sinks)) {
        config_.validate();
        if (config_.quarantine_path.empty())
            config_.quarantine_path = config_.directory / ".quarantine.jsonl";
    }

    ~Watcher() { stop(); }

    // One scan step; exposed so tests can drive the watcher deterministically.
    void poll_once() {
        namespace fs = std::filesystem;
        if (skip_polls_ > 0) {
            --skip_polls_;
            return;
        }
        std::error_code ec;
        fs::directory_iterator it(config_.directory, ec);
        if (ec) {
            if (scan_failures_ == 0) {
                nlohmann::json warning = {{"kind", "watcher"},
                                          {"status", "warning"},
                                          {"error", "directory unavailable: " +
                                                        config_.directory.string()},
                                          {"time", utc_timestamp()}};
                dispatch(warning, false);
            }
            ++scan_failures_;
            // retry with backoff: skip 1, 2, 4, ... polls, capped at 16
            skip_polls_ = std::min<std::uint64_t>(
                1ull << std::min<std::uint64_t>(scan_failures_ - 1, 4), 16);
            return;
        }
        scan_failures_ = 0;

        struct Ready {
            fs::file_time_type mtime;
            std::string name;
            fs::path path;
            bool operator<(const Ready& o) const {
                return mtime != o.mtime ? mtime < o.mtime : name < o.name;
            }
        };
        std::vector<Ready> ready;

        for (const auto& entry : it) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (!glob_match(config_.glob, name)) continue;

            FileState& state = files_[entry.path().string()];
            if (state.processed) continue;
            std::error_code sec;
            const std::uintmax_t size = entry.file_size(sec);
            if (sec) continue;
            if (state.sighted && size == state.size) {
                ++state.stable_polls;
            } else {
                state.sighted = true;
                state.size = size;
                state.stable_polls = 0;
            }
            if (state.stable_polls >= config_.debounce_polls)
                ready.push_back({entry.last_write_time(), name, entry.path()});
        }

        std::sort(ready.begin(), ready.end());
        for (const auto& r : ready) process_file(r.path);
    }

    void start() {
        if (running_.exchange(true)) return;
        thread_ = std::thread([this] {
            while (running_) {
                poll_once();
                std::unique_lock lock(sleep_mutex_);
                sleep_cv_.wait_for(lock,
                                   std::chrono::milliseconds(static_cast<long>(
                                       config_.poll_interval_s * 1000.0)),
                                   [this] { return !running_.load(); });
            }
        });
    }

    void stop() {
        if (!running_.exchange(false)) return;
        sleep_cv_.notify_all();
        if (thread_.joinable()) thread_.join();
    }

    WatchStats stats() const {
        const std::lock_guard lock(stats_mutex_);
        return stats_;
    }

    std::string summary() const {
        const WatchStats s = stats();
        std::ostringstream out;
        out << "files seen " << s.files_seen << " / reports sent " << s.reports_sent
            << " / alarms " << s.alarms << " / quarantined " << s.quarantined;
        return out.str();
    }

private:
    struct FileState {
        bool sighted = false;
        bool processed = false;
        std::uintmax_t size = 0;
        int stable_polls = 0;
    };

    void process_file(const std::filesystem::path& path) {
        files_[path.string()].processed = true;
        {
            const std::lock_guard lock(stats_mutex_);
            ++stats_.files_seen;
        }
        try {
            const std::vector<Measurement> records = parse_file(path);
            if (records.empty()) throw std::invalid_argument("file contains no records");
            for (const auto& m : records) agent_.tell(m);
        } catch (const std::exception& e) {
            quarantine(path, e.what());
            return;
        }

        const Report report = agent_.report();
        dispatch(report.to_json(), false);
        {
            const std::lock_guard lock(stats_mutex_);
            ++stats_.reports_sent;
            if (report.status == ReportStatus::alarm) ++stats_.alarms;
        }

        const Directive directive = agent_.ask();
        if (directive.action != DirectiveAction::Continue)
            dispatch(directive.to_json(), true);
    }

    static std::vector<Measurement> parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open file");
        // sniff: JSON Lines records start with '{'; anything else is treated
        // as a two-column text pattern
        char first = 0;
        in >> std::ws;
        in.get(first);
        in.unget();
        if (first == '{') return read_measurements(in);
        return {Measurement(read_two_column(in))};
    }

    void quarantine(const std::filesystem::path& path, const std::string& error) {
        {
            const std::lock_guard lock(stats_mutex_);
            ++stats_.quarantined;
        }
        std::ofstream out(config_.quarantine_path, std::ios::app);
        out << nlohmann::json({{"time", utc_timestamp()},
                               {"path", path.string()},
                               {"error", error}})
                   .dump()
            << "\n";
    }

    void dispatch(const nlohmann::json& message, bool priority) {
        for (ReportSink* sink : sinks_) sink->deliver(message, priority);
    }

    WatchConfig config_;
    Agent& agent_;
    std::vector<ReportSink*> sinks_;
    std::map<std::string, FileState> files_;
    mutable std::mutex stats_mutex_;
    WatchStats stats_;
    std::uint64_t scan_failures_ = 0;
    std::uint64_t skip_polls_ = 0;
    std::atomic<bool> running_{false};
    std::thread thread_;
    std::mutex sleep_mutex_;
    std::condition_variable sleep_cv_;
};

}  // namespace sentinel::ingest
