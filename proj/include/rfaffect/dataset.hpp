#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfaffect/time_series.hpp"

namespace rfaffect {

/// The four emotional states, in fixed label order.
enum class Emotion : int { relax = 0, scary = 1, disgust = 2, joy = 3 };

inline const std::array<std::string, 4>& emotion_names() {
    static const std::array<std::string, 4> names = {"relax", "scary", "disgust", "joy"};
    return names;
}

inline int emotion_index(const std::string& name) {
    const auto& names = emotion_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return static_cast<int>(i);
    throw std::invalid_argument("unknown emotion label: " + name);
}

struct Sample {
    std::string id;
    int subject = 0;
    int label = 0;  // index into emotion_names()
    TimeSeries rf;
    std::optional<TimeSeries> ecg;
};

struct LabeledDataset {
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

/// On-disk index of a dataset run: sample ids, labels, and relative paths of
/// the per-sample CSV files.
struct DatasetManifest {
    struct Entry {
        std::string id;
        int subject = 0;
        std::string label;
        std::string rf_path;
        std::string ecg_path;  // empty when absent
    };
    std::vector<Entry> entries;
};

inline void write_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["version"] = "rfaffect-dataset-v1";
    j["samples"] = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json s;
        s["id"] = e.id;
        s["subject"] = e.subject;
        s["label"] = e.label;
        s["rf"] = e.rf_path;
        if (!e.ecg_path.empty())
            s["ecg"] = e.ecg_path;
        j["samples"].push_back(s);
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

inline DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("version", "") != "rfaffect-dataset-v1")
        throw std::runtime_error(path + ": unsupported manifest version");
    DatasetManifest m;
    std::vector<std::string> seen;
    for (const auto& s : j.at("samples")) {
        DatasetManifest::Entry e;
        e.id = s.at("id").get<std::string>();
        e.subject = s.at("subject").get<int>();
        e.label = s.at("label").get<std::string>();
        emotion_index(e.label);  // validates
        e.rf_path = s.at("rf").get<std::string>();
        if (s.contains("ecg"))
            e.ecg_path = s.at("ecg").get<std::string>();
        for (const auto& id : seen)
            if (id == e.id)
                throw std::runtime_error(path + ": duplicate sample id " + e.id);
        seen.push_back(e.id);
        m.entries.push_back(std::move(e));
    }
    return m;
}

/// Feature matrix with a stable column registry; the interchange unit
/// between pipeline stages.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // emotion indices, aligned with rows
};

/// CSV: header = feature names plus final column `label`; label written as
/// its emotion name.
inline void write_feature_matrix_csv(const FeatureMatrix& fm, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& n : fm.names)
        out << n << ',';
    out << "label\n";
    for (std::size_t r = 0; r < fm.rows.size(); ++r) {
        for (double v : fm.rows[r])
            out << detail::format_g17(v) << ',';
        out << emotion_names()[static_cast<std::size_t>(fm.labels[r])] << '\n';
    }
}

inline FeatureMatrix read_feature_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty feature file: " + path);
    FeatureMatrix fm;
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ','))
        fm.names.push_back(col);
    if (fm.names.empty() || fm.names.back() != "label")
        throw std::runtime_error(path + ": final column must be 'label'");
    fm.names.pop_back();
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream row(line);
        std::vector<double> values;
        std::string cell;
        for (std::size_t i = 0; i < fm.names.size(); ++i) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error(path + ": short row");
            values.push_back(std::stod(cell));
        }
        if (!std::getline(row, cell, ','))
            throw std::runtime_error(path + ": missing label");
        fm.labels.push_back(emotion_index(cell));
        fm.rows.push_back(std::move(values));
    }
    return fm;
}

}  // namespace rfaffect
