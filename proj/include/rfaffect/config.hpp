#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfaffect {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a pipeline run needs, with desk-scale defaults. Loaded from a
/// key=value file with [section] headers; unknown keys are rejected.
struct RunConfig {
    // [run]
    std::uint64_t seed = 7;
    int workers = 1;
    std::string out_dir = "run";

    // [synth]
    int subjects = 15;
    double duration_s = 150.0;
    double rf_rate = 50.0;
    double ecg_rate = 250.0;
    bool with_ecg = true;
    double phase_noise_std = 0.05;
    double carrier_hz = 5.8e9;
    double distance_m = 0.30;

    // [preprocess]
    double keep_last_s = 120.0;
    double rf_band_low = 0.1;
    double rf_band_high = 10.0;
    int rf_filter_order = 4;
    double ecg_resample_hz = 154.0;
    double ecg_band_low = 0.5;
    double ecg_band_high = 45.0;
    int ecg_filter_order = 4;
    std::string normalization = "zscore";

    // [cwt]
    int n_scales = 32;
    int image_size = 32;
    double rf_fmin = 0.1;
    double rf_fmax = 8.0;
    double ecg_fmin = 0.5;
    double ecg_fmax = 40.0;

    // [features]
    int mrmr_k = 30;

    // [model]
    std::string model = "dl";  // dl | knn | tree | forest | lda | svm_linear | svm_rbf
    std::string input = "rf";  // rf | ecg
    int knn_k = 5;
    int tree_max_depth = 8;
    int forest_trees = 100;
    double svm_c = 1.0;
    double svm_gamma = 0.0;  // 0 = 1/d

    // [train]
    int signal_len = 128;
    int epochs = 30;
    int batch_size = 8;
    double learning_rate = 1e-3;
    double stop_loss = 0.05;

    // [eval]
    bool leave_subject_out = false;
    double tsne_perplexity = 12.0;
    int tsne_iterations = 500;
};

namespace configdetail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs a number, got '" + v + "'");
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long x = std::stol(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        unsigned long long x = std::stoull(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs an unsigned integer, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("config: key '" + key + "' needs true/false, got '" + v + "'");
}

}  // namespace configdetail

/// Applies `section.key = value` pairs onto defaults. Order preserved from
/// the file; later keys win.
inline RunConfig apply_config_entries(
    const std::vector<std::pair<std::string, std::string>>& entries, RunConfig cfg = {}) {
    using namespace configdetail;
    for (const auto& [key, value] : entries) {
        if (key == "run.seed")
            cfg.seed = to_u64(key, value);
        else if (key == "run.workers")
            cfg.workers = to_int(key, value);
        else if (key == "run.out")
            cfg.out_dir = value;
        else if (key == "synth.subjects")
            cfg.subjects = to_int(key, value);
        else if (key == "synth.duration_s")
            cfg.duration_s = to_double(key, value);
        else if (key == "synth.rf_rate")
            cfg.rf_rate = to_double(key, value);
        else if (key == "synth.ecg_rate")
            cfg.ecg_rate = to_double(key, value);
        else if (key == "synth.with_ecg")
            cfg.with_ecg = to_bool(key, value);
        else if (key == "synth.phase_noise_std")
            cfg.phase_noise_std = to_double(key, value);
        else if (key == "synth.carrier_hz")
            cfg.carrier_hz = to_double(key, value);
        else if (key == "synth.distance_m")
            cfg.distance_m = to_double(key, value);
        else if (key == "preprocess.keep_last_s")
            cfg.keep_last_s = to_double(key, value);
        else if (key == "preprocess.rf_band_low")
            cfg.rf_band_low = to_double(key, value);
        else if (key == "preprocess.rf_band_high")
            cfg.rf_band_high = to_double(key, value);
        else if (key == "preprocess.rf_filter_order")
            cfg.rf_filter_order = to_int(key, value);
        else if (key == "preprocess.ecg_resample_hz")
            cfg.ecg_resample_hz = to_double(key, value);
        else if (key == "preprocess.ecg_band_low")
            cfg.ecg_band_low = to_double(key, value);
        else if (key == "preprocess.ecg_band_high")
            cfg.ecg_band_high = to_double(key, value);
        else if (key == "preprocess.ecg_filter_order")
            cfg.ecg_filter_order = to_int(key, value);
        else if (key == "preprocess.normalization")
            cfg.normalization = value;
        else if (key == "cwt.n_scales")
            cfg.n_scales = to_int(key, value);
        else if (key == "cwt.image_size")
            cfg.image_size = to_int(key, value);
        else if (key == "cwt.rf_fmin")
            cfg.rf_fmin = to_double(key, value);
        else if (key == "cwt.rf_fmax")
            cfg.rf_fmax = to_double(key, value);
        else if (key == "cwt.ecg_fmin")
            cfg.ecg_fmin = to_double(key, value);
        else if (key == "cwt.ecg_fmax")
            cfg.ecg_fmax = to_double(key, value);
        else if (key == "features.mrmr_k")
            cfg.mrmr_k = to_int(key, value);
        else if (key == "model.kind")
            cfg.model = value;
        else if (key == "model.input")
            cfg.input = value;
        else if (key == "model.knn_k")
            cfg.knn_k = to_int(key, value);
        else if (key == "model.tree_max_depth")
            cfg.tree_max_depth = to_int(key, value);
        else if (key == "model.forest_trees")
            cfg.forest_trees = to_int(key, value);
        else if (key == "model.svm_c")
            cfg.svm_c = to_double(key, value);
        else if (key == "model.svm_gamma")
            cfg.svm_gamma = to_double(key, value);
        else if (key == "train.signal_len")
            cfg.signal_len = to_int(key, value);
        else if (key == "train.epochs")
            cfg.epochs = to_int(key, value);
        else if (key == "train.batch_size")
            cfg.batch_size = to_int(key, value);
        else if (key == "train.learning_rate")
            cfg.learning_rate = to_double(key, value);
        else if (key == "train.stop_loss")
            cfg.stop_loss = to_double(key, value);
        else if (key == "eval.leave_subject_out")
            cfg.leave_subject_out = to_bool(key, value);
        else if (key == "eval.tsne_perplexity")
            cfg.tsne_perplexity = to_double(key, value);
        else if (key == "eval.tsne_iterations")
            cfg.tsne_iterations = to_int(key, value);
        else
            throw ConfigError("config: unknown key '" + key + "'");
    }
    return cfg;
}

inline void validate(const RunConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (cfg.workers < 1)
        fail("run.workers must be >= 1");
    if (cfg.subjects < 2)
        fail("synth.subjects must be >= 2");
    if (!(cfg.duration_s > 0.0) || !(cfg.rf_rate > 0.0) || !(cfg.ecg_rate >= 100.0))
        fail("synth durations/rates out of range (ecg_rate >= 100)");
    if (!(cfg.keep_last_s > 0.0) || cfg.keep_last_s > cfg.duration_s)
        fail("preprocess.keep_last_s must lie in (0, synth.duration_s]");
    if (cfg.rf_band_low > 0.0 &&
        !(cfg.rf_band_low < cfg.rf_band_high && cfg.rf_band_high < cfg.rf_rate / 2.0))
        fail("preprocess rf band must satisfy 0 < low < high < rf_rate/2 (or low = 0 to disable)");
    if (!(cfg.ecg_band_low < cfg.ecg_band_high && cfg.ecg_band_high < cfg.ecg_resample_hz / 2.0))
        fail("preprocess ecg band must satisfy low < high < ecg_resample_hz/2");
    if (cfg.normalization != "zscore" && cfg.normalization != "minmax")
        fail("preprocess.normalization must be zscore or minmax");
    if (cfg.n_scales < 2 || cfg.image_size < 8)
        fail("cwt.n_scales must be >= 2 and cwt.image_size >= 8");
    if (!(cfg.rf_fmin < cfg.rf_fmax) || !(cfg.ecg_fmin < cfg.ecg_fmax))
        fail("cwt frequency ranges must have fmin < fmax");
    if (cfg.mrmr_k < 1)
        fail("features.mrmr_k must be >= 1");
    const bool known_model = cfg.model == "dl" || cfg.model == "knn" || cfg.model == "tree" ||
                             cfg.model == "forest" || cfg.model == "lda" ||
                             cfg.model == "svm_linear" || cfg.model == "svm_rbf";
    if (!known_model)
        fail("model.kind must be one of dl|knn|tree|forest|lda|svm_linear|svm_rbf");
    if (cfg.input != "rf" && cfg.input != "ecg")
        fail("model.input must be rf or ecg");
    if (cfg.signal_len < 32)
        fail("train.signal_len must be >= 32");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
        fail("train.epochs/batch_size must be >= 1 and learning_rate > 0");
    if (cfg.tsne_iterations < 1 || !(cfg.tsne_perplexity > 1.0))
        fail("eval.tsne_iterations must be >= 1 and tsne_perplexity > 1");
}

/// key=value file with [section] headers; '#' or ';' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_ini(std::istream& is) {
    using configdetail::trim;
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key at line " + std::to_string(line_no));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' appears before any [section]");
        entries.emplace_back(section + "." + key, value);
    }
    return entries;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("config: cannot open '" + path + "'");
    RunConfig cfg = apply_config_entries(parse_ini(is));
    validate(cfg);
    return cfg;
}

}  // namespace rfaffect
