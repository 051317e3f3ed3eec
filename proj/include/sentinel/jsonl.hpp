#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/data.hpp"

namespace sentinel {

// Dataset interchange: JSON Lines, one record per measurement.
//   {"kind":"spectrum","grid":[...],"intensity":[...],"meta":{...},"label":...}
//   {"kind":"series","channels":{name:[...]},"label":...,"id":...}

inline nlohmann::json to_json(const Spectrum1D& s) {
    nlohmann::json j;
    j["kind"] = "spectrum";
    j["grid"] = s.grid;
    j["intensity"] = s.intensity;
    j["meta"] = s.meta;
    j["label"] = s.label ? nlohmann::json(to_string(*s.label)) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const TimeSeriesBundle& b) {
    nlohmann::json ch = nlohmann::json::object();
    for (std::size_t i = 0; i < TimeSeriesBundle::kChannels; ++i)
        ch[TimeSeriesBundle::channel_names[i]] = b.channels[i];
    nlohmann::json j;
    j["kind"] = "series";
    j["channels"] = ch;
    j["label"] = b.label ? nlohmann::json(to_string(*b.label)) : nlohmann::json(nullptr);
    j["id"] = b.id;
    return j;
}

inline nlohmann::json to_json(const Measurement& m) {
    return std::visit([](const auto& v) { return to_json(v); }, m);
}

inline Spectrum1D spectrum_from_json(const nlohmann::json& j) {
    Spectrum1D s;
    s.grid = j.at("grid").get<std::vector<double>>();
    s.intensity = j.at("intensity").get<std::vector<double>>();
    if (j.contains("meta") && j["meta"].is_object())
        s.meta = j["meta"].get<std::map<std::string, double>>();
    if (j.contains("label") && j["label"].is_string()) {
        const std::string l = j["label"].get<std::string>();
        if (l == "good")
            s.label = SpectrumLabel::good;
        else if (l == "bad")
            s.label = SpectrumLabel::bad;
        else
            throw std::invalid_argument("spectrum record: unknown label '" + l + "'");
    }
    s.validate();
    return s;
}

inline TimeSeriesBundle series_from_json(const nlohmann::json& j) {
    TimeSeriesBundle b;
    const auto& ch = j.at("channels");
    for (std::size_t i = 0; i < TimeSeriesBundle::kChannels; ++i) {
        const char* name = TimeSeriesBundle::channel_names[i];
        if (!ch.contains(name))
            throw std::invalid_argument(std::string("series record: missing channel '") + name +
                                        "'");
        b.channels[i] = ch.at(name).get<std::vector<double>>();
    }
    if (j.contains("label") && j["label"].is_string()) {
        const std::string l = j["label"].get<std::string>();
        if (l == "normal")
            b.label = SeriesLabel::normal;
        else if (l == "anomalous")
            b.label = SeriesLabel::anomalous;
        else
            throw std::invalid_argument("series record: unknown label '" + l + "'");
    }
    if (j.contains("id") && j["id"].is_string()) b.id = j["id"].get<std::string>();
    b.validate();
    return b;
}

inline Measurement measurement_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "spectrum") return spectrum_from_json(j);
    if (kind == "series") return series_from_json(j);
    throw std::invalid_argument("measurement record: unknown kind '" + kind + "'");
}

inline std::vector<Measurement> read_measurements(std::istream& in) {
    std::vector<Measurement> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": invalid JSON: " + e.what());
        }
        try {
            out.push_back(measurement_from_json(j));
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_measurements(std::ostream& out, const std::vector<Measurement>& ms) {
    for (const auto& m : ms) out << to_json(m).dump() << "\n";
}

// Two-column text reader (ordinate, intensity; '#' comments) for reduced 1-d
// patterns dropped by beamline writers.
inline Spectrum1D read_two_column(std::istream& in) {
    Spectrum1D s;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, y;
        if (!(ls >> x)) continue;  // blank or comment-only line
        if (!(ls >> y))
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected two columns");
        s.grid.push_back(x);
        s.intensity.push_back(y);
    }
    s.validate();
    return s;
}

}  // namespace sentinel
