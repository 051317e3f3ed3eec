#pragma once

#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sentinel {

// Minimal TOML-style config: [section] headers, key = value pairs, '#'
// comments, optional double quotes around values. Keys are exposed flat as
// "section.key" ("key" outside any section).
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": unterminated section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                continue;
            }
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static ConfigFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot read config file " + path);
        return parse(in);
    }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

// One resolved configuration field with its provenance, following the
// precedence flags > environment > config file > default.
struct Resolved {
    std::string value;
    std::string source;  // "flag" | "env" | "file" | "default"
};

inline Resolved resolve_config(const std::optional<std::string>& flag, const char* env_var,
                               const ConfigFile* file, const std::string& file_key,
                               const std::string& fallback) {
    if (flag) return {*flag, "flag"};
    if (env_var != nullptr) {
        if (const char* env = std::getenv(env_var); env != nullptr && *env != '\0')
            return {env, "env"};
    }
    if (file != nullptr) {
        if (const auto v = file->get(file_key)) return {*v, "file"};
    }
    return {fallback, "default"};
}

}  // namespace sentinel
