#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sentinel/agent.hpp"

namespace sentinel::ingest {

// Sink for reports and priority directives produced by a watcher.
struct ReportSink {
    virtual ~ReportSink() = default;
    virtual void deliver(const nlohmann::json& message, bool priority) = 0;
};

// Appends every message to a JSON Lines archive.
class FileArchiveSink final : public ReportSink {
public:
    explicit FileArchiveSink(std::filesystem::path path) : path_(std::move(path)) {}

    void deliver(const nlohmann::json& message, bool) override {
        const std::lock_guard lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        out << message.dump() << "\n";
    }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

struct WebhookOptions {
    std::string url;  // http://host:port/path
    double base_delay_s = 0.5;
    double backoff_factor = 2.0;
    double max_delay_s = 30.0;
    int max_attempts = 8;
    std::size_t queue_capacity = 1000;
    std::filesystem::path dead_letter_path = "dead_letter.jsonl";
    std::filesystem::path drop_log_path = "webhook_drops.log";
    bool slack_format = false;
    double timeout_s = 2.0;
};

struct WebhookStats {
    std::uint64_t enqueued = 0;
    std::uint64_t delivered = 0;
    std::uint64_t attempts = 0;
    std::uint64_t dead_lettered = 0;
    std::uint64_t dropped = 0;
};

namespace webhook_detail {

struct ParsedUrl {
    std::string base;  // scheme://host:port
    std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw std::invalid_argument("webhook url must start with http:// or https://");
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

// Slack-compatible wrapping: {"text": "<glyph> <summary>"} with the status
// glyph rendered as an emoji shortcode.
inline nlohmann::json slack_wrap(const nlohmann::json& message) {
    std::string glyph = ":information_source:";
    std::string summary;
    if (message.contains("kind") && message["kind"] == "directive") {
        const std::string action = message.value("action", "");
        glyph = action == "pause" ? ":double_vertical_bar:" : ":rotating_light:";
        summary = action + ": " + message.value("reason", "");
    } else {
        const std::string status = message.value("status", "");
        if (status == "ok") glyph = ":white_check_mark:";
        if (status == "warning") glyph = ":warning:";
        if (status == "alarm") glyph = ":rotating_light:";
        summary = message.value("kind", "report");
        if (message.contains("agent_id"))
            summary += " [" + message["agent_id"].get<std::string>() + " #" +
                       std::to_string(message.value("sequence", 0)) + "]";
        summary += " " + status;
        if (message.contains("payload") && message["payload"].contains("emoji_code"))
            summary += " :" + message["payload"]["emoji_code"].get<std::string>() + ":";
    }
    return {{"text", glyph + " " + summary}};
}

}  // namespace webhook_detail

// At-least-once webhook delivery: a bounded pending queue drained by a worker
// thread that POSTs each message, retrying with exponential backoff. Messages
// that exhaust their attempts, overflow the queue, or remain at shutdown are
// appended verbatim to the dead-letter file, so every message either got a
// 2xx or sits in the dead-letter file.
class WebhookSink final : public ReportSink {
public:
    explicit WebhookSink(WebhookOptions opts) : opts_(std::move(opts)) {
        const auto parsed = webhook_detail::parse_url(opts_.url);
        base_ = parsed.base;
        path_ = parsed.path;
        worker_ = std::thread([this] { run(); });
    }

    ~WebhookSink() override { shutdown(10.0); }

    void deliver(const nlohmann::json& message, bool priority) override {
        {
            const std::lock_guard lock(mutex_);
            if (stopping_) {
                dead_letter(message);
                return;
            }
            ++stats_.enqueued;
            if (queue_.size() >= opts_.queue_capacity) {
                const nlohmann::json oldest = queue_.front();
                queue_.pop_front();
                ++stats_.dropped;
                log_drop(oldest);
                dead_letter(oldest);
            }
            if (priority)
                queue_.push_front(message);
            else
                queue_.push_back(message);
        }
        cv_.notify_all();
    }

    // Drains the queue within the deadline; whatever remains goes to the
    // dead-letter file. Idempotent.
    void shutdown(double deadline_s) {
        {
            const std::lock_guard lock(mutex_);
            if (shut_down_) return;
            draining_ = true;
        }
        cv_.notify_all();
        const auto deadline =
            std::chrono::steady_clock::now() +
            std::chrono::milliseconds(static_cast<long>(deadline_s * 1000.0));
        {
            std::unique_lock lock(mutex_);
            idle_cv_.wait_until(lock, deadline,
                                [this] { return queue_.empty() && !in_flight_; });
            stopping_ = true;
            draining_ = true;
            for (const auto& m : queue_) dead_letter(m);
            queue_.clear();
            shut_down_ = true;
        }
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    WebhookStats stats() const {
        const std::lock_guard lock(mutex_);
        return stats_;
    }

private:
    void run() {
        std::unique_lock lock(mutex_);
        while (true) {
            cv_.wait(lock, [this] { return stopping_ || draining_ || !queue_.empty(); });
            if (queue_.empty()) {
                idle_cv_.notify_all();
                if (stopping_ || draining_) {
                    if (stopping_) return;
                    // draining with an empty queue: wait for stop or new work
                    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
                    if (stopping_ && queue_.empty()) return;
                }
                continue;
            }
            const nlohmann::json message = queue_.front();
            queue_.pop_front();
            in_flight_ = true;
            lock.unlock();

            const bool ok = post_with_retries(message);

            lock.lock();
            in_flight_ = false;
            if (ok)
                ++stats_.delivered;
            else
                dead_letter(message);
            idle_cv_.notify_all();
        }
    }

    bool post_with_retries(const nlohmann::json& message) {
        const std::string body =
            (opts_.slack_format ? webhook_detail::slack_wrap(message) : message).dump();
        double delay = opts_.base_delay_s;
        for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
            {
                const std::lock_guard lock(mutex_);
                ++stats_.attempts;
            }
            httplib::Client client(base_);
            client.set_connection_timeout(std::chrono::milliseconds(
                static_cast<long>(opts_.timeout_s * 1000.0)));
            client.set_read_timeout(
                std::chrono::milliseconds(static_cast<long>(opts_.timeout_s * 1000.0)));
            const httplib::Result res = client.Post(path_, body, "application/json");
            if (res && res->status >= 200 && res->status < 300) return true;

            if (attempt == opts_.max_attempts) break;
            std::unique_lock lock(mutex_);
            cv_.wait_for(lock, std::chrono::milliseconds(static_cast<long>(delay * 1000.0)),
                         [this] { return stopping_; });
            if (stopping_) return false;
            lock.unlock();
            delay = std::min(delay * opts_.backoff_factor, opts_.max_delay_s);
        }
        return false;
    }

    void dead_letter(const nlohmann::json& message) {
        std::ofstream out(opts_.dead_letter_path, std::ios::app);
        out << message.dump() << "\n";
        ++stats_.dead_lettered;
    }

    void log_drop(const nlohmann::json& message) {
        std::ofstream out(opts_.drop_log_path, std::ios::app);
        out << utc_timestamp() << " queue overflow, dropped oldest message (sequence "
            << (message.contains("sequence") ? message["sequence"].dump() : "?") << ")\n";
    }

    WebhookOptions opts_;
    std::string base_;
    std::string path_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<nlohmann::json> queue_;
    WebhookStats stats_;
    bool draining_ = false;
    bool stopping_ = false;
    bool shut_down_ = false;
    bool in_flight_ = false;
    std::thread worker_;
};

}  // namespace sentinel::ingest
