#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rfaffect/classic.hpp"
#include "rfaffect/config.hpp"
#include "rfaffect/dataset.hpp"
#include "rfaffect/eval.hpp"
#include "rfaffect/features.hpp"
#include "rfaffect/fft.hpp"
#include "rfaffect/neural.hpp"
#include "rfaffect/signal.hpp"
#include "rfaffect/svg.hpp"
#include "rfaffect/synth.hpp"
#include "rfaffect/transform.hpp"

namespace rfaffect {

/// A stage was asked to consume an artifact that an earlier stage has not
/// produced yet. The message names the stage to run first.
class MissingArtifactError : public std::runtime_error {
  public:
    explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

namespace pipeline {

namespace fs = std::filesystem;

struct Paths {
    fs::path root, data, preproc, features, cwt, models, eval;

    static Paths make(const RunConfig& cfg) {
        Paths p;
        p.root = cfg.out_dir;
        p.data = p.root / "data";
        p.preproc = p.root / "preproc";
        p.features = p.root / "features";
        p.cwt = p.root / "cwt";
        p.models = p.root / "models";
        p.eval = p.root / "eval";
        return p;
    }

    fs::path manifest() const { return data / "manifest.json"; }
};

namespace pipedetail {

inline bool all_exist(const std::vector<fs::path>& files) {
    for (const auto& f : files)
        if (!fs::exists(f))
            return false;
    return true;
}

/// Outputs are fresh when they all exist and none is older than any input.
inline bool fresh(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    if (!all_exist(outputs))
        return false;
    fs::file_time_type newest_in = fs::file_time_type::min();
    for (const auto& f : inputs) {
        if (!fs::exists(f))
            return false;
        newest_in = std::max(newest_in, fs::last_write_time(f));
    }
    for (const auto& f : outputs)
        if (fs::last_write_time(f) < newest_in)
            return false;
    return true;
}

inline std::string round3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

}  // namespace pipedetail

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// RF chain: keep the analysis tail, remove the linear trend, optionally
/// band-limit (rf_band_low = 0 skips the filter), then normalize amplitude.
inline TimeSeries preprocess_rf(const TimeSeries& raw, const RunConfig& cfg, bool crop = true) {
    TimeSeries ts = raw;
    if (crop)
        ts = crop_tail(ts, std::min(cfg.keep_last_s, ts.duration()));
    ts = detrend(ts);
    if (cfg.rf_band_low > 0.0)
        ts = butterworth_bandpass(ts, cfg.rf_band_low, cfg.rf_band_high, cfg.rf_filter_order);
    NormalizationMethod m = cfg.normalization == "minmax" ? NormalizationMethod::minmax
                                                          : NormalizationMethod::zscore;
    return normalize(ts, m);
}

/// ECG chain: resample to a fixed grid, band-pass away drift and HF noise,
/// then keep the analysis tail. Amplitude is left alone so peak detection
/// sees the native morphology.
inline TimeSeries preprocess_ecg(const TimeSeries& raw, const RunConfig& cfg) {
    TimeSeries ts = resample(raw, cfg.ecg_resample_hz);
    ts = butterworth_bandpass(ts, cfg.ecg_band_low, cfg.ecg_band_high, cfg.ecg_filter_order);
    return crop_tail(ts, std::min(cfg.keep_last_s, ts.duration()));
}

// ---------------------------------------------------------------------------
// Network inputs
// ---------------------------------------------------------------------------

inline std::vector<double> zscore_vec(std::vector<double> v) {
    const std::size_t n = v.size();
    if (n == 0)
        return v;
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v)
        var += (x - mean) * (x - mean);
    double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        std::fill(v.begin(), v.end(), 0.0);
        return v;
    }
    for (double& x : v)
        x = (x - mean) / sd;
    return v;
}

/// Two-channel 1-d input: the waveform and its spectrum magnitude, each
/// resampled to signal_len and standardized per sample.
inline Tensor rf_signal_tensor(const TimeSeries& pre, int signal_len) {
    std::vector<double> ch0 = zscore_vec(resample_to_length(pre.samples,
                                                            static_cast<std::size_t>(signal_len)));
    std::vector<double> mag = fft_magnitude(pre);
    std::vector<double> ch1 = zscore_vec(resample_to_length(mag,
                                                            static_cast<std::size_t>(signal_len)));
    Tensor t({2, signal_len});
    for (int i = 0; i < signal_len; ++i) {
        t.data[static_cast<std::size_t>(i)] = ch0[static_cast<std::size_t>(i)];
        t.data[static_cast<std::size_t>(signal_len + i)] = ch1[static_cast<std::size_t>(i)];
    }
    return t;
}

inline Tensor scaleogram_tensor(const TimeSeries& pre, int n_scales, double fmin, double fmax,
                                int hw) {
    Scaleogram sg = cwt_morlet(pre, n_scales, fmin, fmax);
    Matrix img = scaleogram_resize(sg, hw, hw);
    Tensor t({1, hw, hw});
    std::size_t k = 0;
    for (const auto& row : img)
        for (double v : row)
            t.data[k++] = v;
    return t;
}

inline nn::NnSample make_rf_sample(const TimeSeries& pre, const RunConfig& cfg, int label) {
    nn::NnSample s;
    s.a = rf_signal_tensor(pre, cfg.signal_len);
    s.b = scaleogram_tensor(pre, cfg.n_scales, cfg.rf_fmin, cfg.rf_fmax, cfg.image_size);
    s.label = label;
    return s;
}

// ---------------------------------------------------------------------------
// Column standardization (fit on training rows only)
// ---------------------------------------------------------------------------

struct Standardizer {
    std::vector<double> mean, scale;

    void fit(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& idx) {
        if (idx.empty())
            throw std::invalid_argument("Standardizer: no rows");
        const std::size_t d = rows[idx[0]].size();
        mean.assign(d, 0.0);
        scale.assign(d, 1.0);
        for (std::size_t i : idx)
            for (std::size_t j = 0; j < d; ++j)
                mean[j] += rows[i][j];
        for (std::size_t j = 0; j < d; ++j)
            mean[j] /= static_cast<double>(idx.size());
        if (idx.size() > 1) {
            std::vector<double> var(d, 0.0);
            for (std::size_t i : idx)
                for (std::size_t j = 0; j < d; ++j) {
                    double c = rows[i][j] - mean[j];
                    var[j] += c * c;
                }
            for (std::size_t j = 0; j < d; ++j) {
                double sd = std::sqrt(var[j] / static_cast<double>(idx.size() - 1));
                scale[j] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
            }
        }
    }

    std::vector<double> apply(const std::vector<double>& row) const {
        std::vector<double> out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j)
            out[j] = (row[j] - mean[j]) / scale[j];
        return out;
    }
};

inline std::vector<double> project(const std::vector<double>& row, const std::vector<int>& keep) {
    std::vector<double> out;
    out.reserve(keep.size());
    for (int j : keep)
        out.push_back(row[static_cast<std::size_t>(j)]);
    return out;
}

// ---------------------------------------------------------------------------
// Model construction from config
// ---------------------------------------------------------------------------

inline std::unique_ptr<Classifier> make_classic(const RunConfig& cfg, std::uint64_t seed) {
    if (cfg.model == "knn")
        return std::make_unique<KnnClassifier>(cfg.knn_k);
    if (cfg.model == "tree") {
        TreeConfig tc;
        tc.max_depth = cfg.tree_max_depth;
        return std::make_unique<DecisionTreeClassifier>(tc);
    }
    if (cfg.model == "forest") {
        ForestConfig fc;
        fc.n_trees = cfg.forest_trees;
        fc.tree.max_depth = cfg.tree_max_depth;
        fc.seed = seed;
        return std::make_unique<RandomForestClassifier>(fc);
    }
    if (cfg.model == "lda")
        return std::make_unique<LdaClassifier>();
    if (cfg.model == "svm_linear" || cfg.model == "svm_rbf") {
        SvmConfig sc;
        sc.kernel = cfg.model == "svm_linear" ? SvmKernel::linear : SvmKernel::rbf;
        sc.c = cfg.svm_c;
        sc.gamma = cfg.svm_gamma;
        return std::make_unique<SvmClassifier>(sc);
    }
    throw std::invalid_argument("make_classic: not a classic model: " + cfg.model);
}

// ---------------------------------------------------------------------------
// Cross-validation runners
// ---------------------------------------------------------------------------

inline EvaluationReport loocv_classic(const FeatureMatrix& fm, const RunConfig& cfg,
                                      const std::vector<int>* groups) {
    const int n_classes = static_cast<int>(emotion_names().size());
    const bool use_mrmr = cfg.input == "ecg";
    FoldRunner runner = [&](const std::vector<std::size_t>& train_idx,
                            const std::vector<std::size_t>& test_idx, std::uint64_t fold_seed) {
        Standardizer st;
        st.fit(fm.rows, train_idx);
        FeatureRows xtr;
        std::vector<int> ytr;
        xtr.reserve(train_idx.size());
        for (std::size_t i : train_idx) {
            xtr.push_back(st.apply(fm.rows[i]));
            ytr.push_back(fm.labels[i]);
        }
        std::vector<int> keep;
        if (use_mrmr) {
            int k = std::min<int>(cfg.mrmr_k, static_cast<int>(fm.names.size()));
            keep = mrmr_select(xtr, ytr, k);
            for (auto& row : xtr)
                row = project(row, keep);
        }
        auto model = make_classic(cfg, fold_seed);
        model->fit(xtr, ytr);
        std::vector<std::pair<int, std::vector<double>>> out;
        out.reserve(test_idx.size());
        for (std::size_t i : test_idx) {
            std::vector<double> x = st.apply(fm.rows[i]);
            if (use_mrmr)
                x = project(x, keep);
            std::vector<double> scores = model->predict_scores(x);
            out.emplace_back(classicdetail::argmax_lowest(scores), std::move(scores));
        }
        return out;
    };
    return loocv(fm.labels, n_classes, runner, cfg.seed, cfg.workers, groups);
}

inline nn::TrainConfig train_config_for(const RunConfig& cfg, std::uint64_t seed) {
    nn::TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.seed = seed;
    tc.stop_loss = cfg.stop_loss;
    return tc;
}

inline EvaluationReport loocv_dl_rf(const std::vector<nn::NnSample>& samples,
                                    const std::vector<int>& labels, const RunConfig& cfg,
                                    const std::vector<int>* groups) {
    const int n_classes = static_cast<int>(emotion_names().size());
    FoldRunner runner = [&](const std::vector<std::size_t>& train_idx,
                            const std::vector<std::size_t>& test_idx, std::uint64_t fold_seed) {
        nn::Model m = nn::build_rf_model(cfg.signal_len, 2, {cfg.image_size, cfg.image_size},
                                         n_classes, seedmix::derive(fold_seed, 0xA0));
        std::vector<nn::NnSample> train;
        train.reserve(train_idx.size());
        for (std::size_t i : train_idx)
            train.push_back(samples[i]);
        nn::train(m, train, train_config_for(cfg, fold_seed));
        std::vector<std::pair<int, std::vector<double>>> out;
        out.reserve(test_idx.size());
        for (std::size_t i : test_idx) {
            std::vector<double> p = m.predict_proba(samples[i].a, samples[i].b);
            out.emplace_back(classicdetail::argmax_lowest(p), std::move(p));
        }
        return out;
    };
    return loocv(labels, n_classes, runner, cfg.seed, cfg.workers, groups);
}

/// ECG variant: the dense branch sees mRmR-selected standardized interval
/// features, the image branch the ECG scaleogram. Selection and scaling are
/// refit inside every fold.
inline EvaluationReport loocv_dl_ecg(const FeatureMatrix& fm, const std::vector<Tensor>& images,
                                     const RunConfig& cfg, const std::vector<int>* groups) {
    const int n_classes = static_cast<int>(emotion_names().size());
    FoldRunner runner = [&](const std::vector<std::size_t>& train_idx,
                            const std::vector<std::size_t>& test_idx, std::uint64_t fold_seed) {
        Standardizer st;
        st.fit(fm.rows, train_idx);
        FeatureRows xtr;
        std::vector<int> ytr;
        for (std::size_t i : train_idx) {
            xtr.push_back(st.apply(fm.rows[i]));
            ytr.push_back(fm.labels[i]);
        }
        int k = std::min<int>(cfg.mrmr_k, static_cast<int>(fm.names.size()));
        std::vector<int> keep = mrmr_select(xtr, ytr, k);

        auto sample_at = [&](std::size_t i) {
            nn::NnSample s;
            std::vector<double> x = project(st.apply(fm.rows[i]), keep);
            s.a = Tensor({static_cast<int>(x.size())}, x);
            s.b = images[i];
            s.label = fm.labels[i];
            return s;
        };
        std::vector<nn::NnSample> train;
        train.reserve(train_idx.size());
        for (std::size_t i : train_idx)
            train.push_back(sample_at(i));
        nn::Model m = nn::build_ecg_model({cfg.image_size, cfg.image_size}, k, n_classes,
                                          seedmix::derive(fold_seed, 0xA0));
        nn::train(m, train, train_config_for(cfg, fold_seed));
        std::vector<std::pair<int, std::vector<double>>> out;
        for (std::size_t i : test_idx) {
            nn::NnSample s = sample_at(i);
            std::vector<double> p = m.predict_proba(s.a, s.b);
            out.emplace_back(classicdetail::argmax_lowest(p), std::move(p));
        }
        return out;
    };
    return loocv(fm.labels, n_classes, runner, cfg.seed, cfg.workers, groups);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

struct StoredReport {
    std::string model, input;
    int n = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double std_precision = 0.0, std_recall = 0.0, std_f1 = 0.0;
    double micro_f1 = 0.0;
    std::vector<std::string> ids;
    std::vector<int> y_true, y_pred;
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<long>> confusion;
};

inline void write_report_json(const EvaluationReport& rep, const std::vector<std::string>& ids,
                              const RunConfig& cfg, const fs::path& path) {
    nlohmann::json j;
    j["model"] = cfg.model;
    j["input"] = cfg.input;
    j["n"] = rep.log.size();
    j["classes"] = emotion_names();
    j["accuracy"] = rep.accuracy;
    j["precision"] = rep.prf.precision;
    j["recall"] = rep.prf.recall;
    j["f1"] = rep.prf.f1;
    j["macro"] = {{"precision", rep.prf.macro_precision}, {"recall", rep.prf.macro_recall},
                  {"f1", rep.prf.macro_f1},               {"precision_std", rep.prf.std_precision},
                  {"recall_std", rep.prf.std_recall},     {"f1_std", rep.prf.std_f1}};
    j["micro"] = {{"precision", rep.prf.micro_precision},
                  {"recall", rep.prf.micro_recall},
                  {"f1", rep.prf.micro_f1}};
    j["confusion"] = rep.cm.counts;
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : rep.log) {
        nlohmann::json e;
        e["index"] = f.sample_index;
        e["id"] = f.sample_index < ids.size() ? ids[f.sample_index] : "";
        e["true"] = emotion_names()[static_cast<std::size_t>(f.true_label)];
        e["pred"] = emotion_names()[static_cast<std::size_t>(f.predicted)];
        e["scores"] = f.scores;
        folds.push_back(std::move(e));
    }
    j["folds"] = std::move(folds);
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

inline StoredReport read_report_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is)
        throw MissingArtifactError("missing evaluation report " + path.string() +
                                   "; run `rfaffect loocv` first");
    nlohmann::json j = nlohmann::json::parse(is);
    StoredReport r;
    r.model = j.at("model").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.n = j.at("n").get<int>();
    r.accuracy = j.at("accuracy").get<double>();
    const auto& m = j.at("macro");
    r.macro_precision = m.at("precision").get<double>();
    r.macro_recall = m.at("recall").get<double>();
    r.macro_f1 = m.at("f1").get<double>();
    r.std_precision = m.at("precision_std").get<double>();
    r.std_recall = m.at("recall_std").get<double>();
    r.std_f1 = m.at("f1_std").get<double>();
    r.micro_f1 = j.at("micro").at("f1").get<double>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    for (const auto& f : j.at("folds")) {
        r.ids.push_back(f.at("id").get<std::string>());
        r.y_true.push_back(emotion_index(f.at("true").get<std::string>()));
        r.y_pred.push_back(emotion_index(f.at("pred").get<std::string>()));
        r.scores.push_back(f.at("scores").get<std::vector<double>>());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Stage: synth
// ---------------------------------------------------------------------------

inline DatasetManifest load_manifest_checked(const Paths& p) {
    if (!fs::exists(p.manifest()))
        throw MissingArtifactError("missing dataset manifest " + p.manifest().string() +
                                   "; run `rfaffect synth` first");
    return read_manifest(p.manifest().string());
}

inline void run_synth(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    fs::create_directories(p.data);
    if (fs::exists(p.manifest()) && !force) {
        DatasetManifest m = read_manifest(p.manifest().string());
        bool complete = !m.entries.empty();
        for (const auto& e : m.entries) {
            if (!fs::exists(p.data / e.rf_path))
                complete = false;
            if (!e.ecg_path.empty() && !fs::exists(p.data / e.ecg_path))
                complete = false;
        }
        if (complete) {
            std::printf("synth: up to date (%zu samples in %s)\n", m.entries.size(),
                        p.data.string().c_str());
            return;
        }
        throw ConfigError("synth: " + p.manifest().string() +
                          " exists but sample files are missing; pass --force to regenerate");
    }

    RadarConfig rc;
    rc.carrier_frequency = cfg.carrier_hz;
    rc.static_distance = cfg.distance_m;
    rc.noise_std = cfg.phase_noise_std;
    rc.sample_rate = cfg.rf_rate;
    rc.duration = cfg.duration_s;
    LabeledDataset ds = generate_dataset(default_profiles(), cfg.subjects, rc,
                                         seedmix::derive(cfg.seed, 0x10), cfg.with_ecg,
                                         cfg.ecg_rate);

    DatasetManifest m;
    for (const Sample& s : ds.samples) {
        DatasetManifest::Entry e;
        e.id = s.id;
        e.subject = s.subject;
        e.label = emotion_names()[static_cast<std::size_t>(s.label)];
        e.rf_path = s.id + "_rf.csv";
        write_time_series_csv(s.rf, (p.data / e.rf_path).string());
        if (s.ecg) {
            e.ecg_path = s.id + "_ecg.csv";
            write_time_series_csv(*s.ecg, (p.data / e.ecg_path).string());
        }
        m.entries.push_back(std::move(e));
    }
    write_manifest(m, p.manifest().string());

    std::vector<int> counts(emotion_names().size(), 0);
    for (const Sample& s : ds.samples)
        ++counts[static_cast<std::size_t>(s.label)];
    std::printf("synth: %zu samples, %d subjects ->", ds.samples.size(), cfg.subjects);
    for (std::size_t c = 0; c < counts.size(); ++c)
        std::printf(" %s=%d", emotion_names()[c].c_str(), counts[c]);
    std::printf("\n");
}

// ---------------------------------------------------------------------------
// Stage: preprocess
// ---------------------------------------------------------------------------

inline void run_preprocess(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    DatasetManifest m = load_manifest_checked(p);
    fs::create_directories(p.preproc);
    int wrote = 0, skipped = 0;
    for (const auto& e : m.entries) {
        fs::path rf_in = p.data / e.rf_path;
        if (!fs::exists(rf_in))
            throw MissingArtifactError("missing raw sample " + rf_in.string() +
                                       "; run `rfaffect synth` first");
        fs::path rf_out = p.preproc / (e.id + "_rf.csv");
        if (force || !pipedetail::fresh({rf_in}, {rf_out})) {
            write_time_series_csv(preprocess_rf(read_time_series_csv(rf_in.string()), cfg),
                                  rf_out.string());
            ++wrote;
        } else {
            ++skipped;
        }
        if (e.ecg_path.empty())
            continue;
        fs::path ecg_in = p.data / e.ecg_path;
        if (!fs::exists(ecg_in))
            throw MissingArtifactError("missing raw sample " + ecg_in.string() +
                                       "; run `rfaffect synth` first");
        fs::path ecg_out = p.preproc / (e.id + "_ecg.csv");
        if (force || !pipedetail::fresh({ecg_in}, {ecg_out})) {
            write_time_series_csv(preprocess_ecg(read_time_series_csv(ecg_in.string()), cfg),
                                  ecg_out.string());
            ++wrote;
        } else {
            ++skipped;
        }
    }
    std::printf("preprocess: wrote %d, skipped %d (up to date)\n", wrote, skipped);
}

// ---------------------------------------------------------------------------
// Loading helpers for downstream stages
// ---------------------------------------------------------------------------

struct LoadedRun {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<int> subjects;
    std::vector<fs::path> rf_files, ecg_files;  // ecg empty when absent
};

inline LoadedRun load_run_index(const Paths& p, bool need_ecg) {
    DatasetManifest m = load_manifest_checked(p);
    LoadedRun run;
    for (const auto& e : m.entries) {
        run.ids.push_back(e.id);
        run.labels.push_back(emotion_index(e.label));
        run.subjects.push_back(e.subject);
        fs::path rf = p.preproc / (e.id + "_rf.csv");
        if (!fs::exists(rf))
            throw MissingArtifactError("missing preprocessed sample " + rf.string() +
                                       "; run `rfaffect preprocess` first");
        run.rf_files.push_back(rf);
        if (e.ecg_path.empty()) {
            if (need_ecg)
                throw MissingArtifactError("sample " + e.id +
                                           " has no ECG channel; re-run `rfaffect synth` with "
                                           "synth.with_ecg = true");
            continue;
        }
        fs::path ecg = p.preproc / (e.id + "_ecg.csv");
        if (need_ecg && !fs::exists(ecg))
            throw MissingArtifactError("missing preprocessed sample " + ecg.string() +
                                       "; run `rfaffect preprocess` first");
        if (fs::exists(ecg))
            run.ecg_files.push_back(ecg);
    }
    if (need_ecg && run.ecg_files.size() != run.ids.size())
        throw MissingArtifactError("ECG channel incomplete; re-run `rfaffect synth` with "
                                   "synth.with_ecg = true");
    return run;
}

inline FeatureMatrix read_features_checked(const Paths& p, const std::string& input) {
    fs::path f = p.features / (input + "_features.csv");
    if (!fs::exists(f))
        throw MissingArtifactError("missing feature table " + f.string() +
                                   "; run `rfaffect features` first");
    return read_feature_matrix_csv(f.string());
}

// ---------------------------------------------------------------------------
// Stage: features
// ---------------------------------------------------------------------------

inline void run_features(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    LoadedRun run = load_run_index(p, false);
    fs::create_directories(p.features);
    const bool have_ecg = run.ecg_files.size() == run.ids.size();

    std::vector<fs::path> inputs = run.rf_files;
    inputs.insert(inputs.end(), run.ecg_files.begin(), run.ecg_files.end());
    std::vector<fs::path> outputs = {p.features / "rf_features.csv",
                                     p.features / "samples.csv"};
    if (have_ecg)
        outputs.push_back(p.features / "ecg_features.csv");
    if (!force && pipedetail::fresh(inputs, outputs)) {
        std::printf("features: up to date\n");
        return;
    }

    FeatureMatrix rf;
    rf.names = rf_feature_names();
    rf.labels = run.labels;
    for (const auto& f : run.rf_files)
        rf.rows.push_back(rf_feature_vector(read_time_series_csv(f.string())).values);
    write_feature_matrix_csv(rf, (p.features / "rf_features.csv").string());

    if (have_ecg) {
        FeatureMatrix ecg;
        ecg.labels = run.labels;
        for (const auto& f : run.ecg_files) {
            FeatureVector fv = ibi_features(detect_r_peaks(read_time_series_csv(f.string())));
            if (ecg.names.empty())
                ecg.names = fv.names;
            ecg.rows.push_back(fv.values);
        }
        write_feature_matrix_csv(ecg, (p.features / "ecg_features.csv").string());
    }

    std::ostringstream samples;
    samples << "id,subject,label\n";
    for (std::size_t i = 0; i < run.ids.size(); ++i)
        samples << run.ids[i] << ',' << run.subjects[i] << ','
                << emotion_names()[static_cast<std::size_t>(run.labels[i])] << '\n';
    pipedetail::write_text_file(p.features / "samples.csv", samples.str());

    std::printf("features: rf %zux%zu%s\n", rf.rows.size(), rf.names.size(),
                have_ecg ? ", ecg written too" : "");
}

// ---------------------------------------------------------------------------
// Stage: cwt
// ---------------------------------------------------------------------------

inline void run_cwt(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    LoadedRun run = load_run_index(p, false);
    fs::create_directories(p.cwt);
    int wrote = 0, skipped = 0;
    auto emit = [&](const fs::path& in, const std::string& stem, double fmin, double fmax) {
        fs::path pgm = p.cwt / (stem + ".pgm");
        fs::path scales = p.cwt / (stem + "_scales.csv");
        if (!force && pipedetail::fresh({in}, {pgm, scales})) {
            ++skipped;
            return;
        }
        TimeSeries ts = read_time_series_csv(in.string());
        Scaleogram sg = cwt_morlet(ts, cfg.n_scales, fmin, fmax);
        sg.magnitudes = block_average(sg.magnitudes, cfg.n_scales, cfg.image_size);
        write_scaleogram_pgm(sg, pgm.string(), scales.string());
        ++wrote;
    };
    for (std::size_t i = 0; i < run.ids.size(); ++i)
        emit(run.rf_files[i], run.ids[i] + "_rf", cfg.rf_fmin, cfg.rf_fmax);
    if (run.ecg_files.size() == run.ids.size())
        for (std::size_t i = 0; i < run.ids.size(); ++i)
            emit(run.ecg_files[i], run.ids[i] + "_ecg", cfg.ecg_fmin, cfg.ecg_fmax);
    std::printf("cwt: wrote %d, skipped %d (up to date)\n", wrote, skipped);
}

// ---------------------------------------------------------------------------
// Stage: train (final model on the full dataset)
// ---------------------------------------------------------------------------

inline std::string model_tag(const RunConfig& cfg) { return cfg.model + "_" + cfg.input; }

inline void write_prep_sidecar(const Standardizer& st, const std::vector<int>& keep,
                               const fs::path& path) {
    std::ostringstream os;
    os << "mean";
    for (double v : st.mean)
        os << ',' << detail::format_g17(v);
    os << "\nscale";
    for (double v : st.scale)
        os << ',' << detail::format_g17(v);
    os << "\nselected";
    for (int j : keep)
        os << ',' << j;
    os << '\n';
    pipedetail::write_text_file(path, os.str());
}

inline std::vector<nn::NnSample> build_rf_samples(const LoadedRun& run, const RunConfig& cfg) {
    std::vector<nn::NnSample> samples;
    samples.reserve(run.rf_files.size());
    for (std::size_t i = 0; i < run.rf_files.size(); ++i)
        samples.push_back(make_rf_sample(read_time_series_csv(run.rf_files[i].string()), cfg,
                                         run.labels[i]));
    return samples;
}

inline std::vector<Tensor> build_ecg_images(const LoadedRun& run, const RunConfig& cfg) {
    std::vector<Tensor> images;
    images.reserve(run.ecg_files.size());
    for (const auto& f : run.ecg_files)
        images.push_back(scaleogram_tensor(read_time_series_csv(f.string()), cfg.n_scales,
                                           cfg.ecg_fmin, cfg.ecg_fmax, cfg.image_size));
    return images;
}

inline void write_loss_artifacts(const std::vector<double>& losses, const fs::path& csv,
                                 const fs::path& svg_path) {
    std::ostringstream os;
    os << "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        os << (i + 1) << ',' << detail::format_g17(losses[i]) << '\n';
    pipedetail::write_text_file(csv, os.str());
    svg::Series s;
    s.label = "train loss";
    for (std::size_t i = 0; i < losses.size(); ++i)
        s.points.emplace_back(static_cast<double>(i + 1), losses[i]);
    pipedetail::write_text_file(svg_path,
                                svg::line_chart("Training loss", "epoch", "mean loss", {s}));
}

inline void run_train(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    fs::create_directories(p.models);
    const std::string tag = model_tag(cfg);
    const std::uint64_t seed = seedmix::derive(cfg.seed, 0x20);
    const int n_classes = static_cast<int>(emotion_names().size());

    if (cfg.model == "dl") {
        LoadedRun run = load_run_index(p, cfg.input == "ecg");
        fs::path out = p.models / (tag + ".nn");
        std::vector<fs::path> inputs = cfg.input == "ecg" ? run.ecg_files : run.rf_files;
        if (!force && pipedetail::fresh(inputs, {out})) {
            std::printf("train: %s up to date\n", out.string().c_str());
            return;
        }
        std::vector<double> losses;
        if (cfg.input == "rf") {
            std::vector<nn::NnSample> samples = build_rf_samples(run, cfg);
            nn::Model m = nn::build_rf_model(cfg.signal_len, 2, {cfg.image_size, cfg.image_size},
                                             n_classes, seedmix::derive(seed, 0xA0));
            losses = nn::train(m, samples, train_config_for(cfg, seed));
            std::ofstream os(out, std::ios::binary);
            nn::save_checkpoint(os, m);
        } else {
            FeatureMatrix fm = read_features_checked(p, "ecg");
            std::vector<std::size_t> all(fm.rows.size());
            for (std::size_t i = 0; i < all.size(); ++i)
                all[i] = i;
            Standardizer st;
            st.fit(fm.rows, all);
            FeatureRows x;
            for (const auto& row : fm.rows)
                x.push_back(st.apply(row));
            int k = std::min<int>(cfg.mrmr_k, static_cast<int>(fm.names.size()));
            std::vector<int> keep = mrmr_select(x, fm.labels, k);
            std::vector<Tensor> images = build_ecg_images(run, cfg);
            std::vector<nn::NnSample> samples(fm.rows.size());
            for (std::size_t i = 0; i < samples.size(); ++i) {
                std::vector<double> xi = project(x[i], keep);
                samples[i].a = Tensor({static_cast<int>(xi.size())}, xi);
                samples[i].b = images[i];
                samples[i].label = fm.labels[i];
            }
            nn::Model m = nn::build_ecg_model({cfg.image_size, cfg.image_size}, k, n_classes,
                                              seedmix::derive(seed, 0xA0));
            losses = nn::train(m, samples, train_config_for(cfg, seed));
            std::ofstream os(out, std::ios::binary);
            nn::save_checkpoint(os, m);
            write_prep_sidecar(st, keep, p.models / (tag + "_prep.csv"));
        }
        write_loss_artifacts(losses, p.models / (tag + "_loss.csv"),
                             p.models / (tag + "_loss.svg"));
        std::printf("train: %s, %zu epochs, final loss %.4f\n", out.string().c_str(),
                    losses.size(), losses.empty() ? 0.0 : losses.back());
        return;
    }

    FeatureMatrix fm = read_features_checked(p, cfg.input);
    fs::path out = p.models / (tag + ".model");
    fs::path feat_file = p.features / (cfg.input + "_features.csv");
    if (!force && pipedetail::fresh({feat_file}, {out})) {
        std::printf("train: %s up to date\n", out.string().c_str());
        return;
    }
    std::vector<std::size_t> all(fm.rows.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    Standardizer st;
    st.fit(fm.rows, all);
    FeatureRows x;
    for (const auto& row : fm.rows)
        x.push_back(st.apply(row));
    std::vector<int> keep;
    if (cfg.input == "ecg") {
        int k = std::min<int>(cfg.mrmr_k, static_cast<int>(fm.names.size()));
        keep = mrmr_select(x, fm.labels, k);
        for (auto& row : x)
            row = project(row, keep);
    } else {
        keep.resize(fm.names.size());
        for (std::size_t j = 0; j < keep.size(); ++j)
            keep[j] = static_cast<int>(j);
    }
    auto model = make_classic(cfg, seed);
    model->fit(x, fm.labels);
    int correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (model->predict(x[i]) == fm.labels[i])
            ++correct;
    std::ofstream os(out);
    save_model(os, *model);
    write_prep_sidecar(st, keep, p.models / (tag + "_prep.csv"));
    std::printf("train: %s, training accuracy %.3f\n", out.string().c_str(),
                static_cast<double>(correct) / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------------------
// Stage: loocv
// ---------------------------------------------------------------------------

inline void write_confusion_csv(const ConfusionMatrix& cm, const fs::path& path) {
    std::ostringstream os;
    os << "true/pred";
    for (const auto& name : emotion_names())
        os << ',' << name;
    os << '\n';
    for (std::size_t r = 0; r < cm.counts.size(); ++r) {
        os << emotion_names()[r];
        for (long v : cm.counts[r])
            os << ',' << v;
        os << '\n';
    }
    pipedetail::write_text_file(path, os.str());
}

inline void write_folds_csv(const EvaluationReport& rep, const std::vector<std::string>& ids,
                            const fs::path& path) {
    std::ostringstream os;
    os << "index,id,true,pred";
    for (const auto& name : emotion_names())
        os << ",score_" << name;
    os << '\n';
    for (const auto& f : rep.log) {
        os << f.sample_index << ','
           << (f.sample_index < ids.size() ? ids[f.sample_index] : "") << ','
           << emotion_names()[static_cast<std::size_t>(f.true_label)] << ','
           << emotion_names()[static_cast<std::size_t>(f.predicted)];
        for (double s : f.scores)
            os << ',' << detail::format_g17(s);
        os << '\n';
    }
    pipedetail::write_text_file(path, os.str());
}

inline EvaluationReport run_loocv(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    fs::create_directories(p.eval);
    const std::string tag = model_tag(cfg);
    fs::path report = p.eval / (tag + "_report.json");

    LoadedRun run = load_run_index(p, cfg.input == "ecg");
    const std::vector<int>* groups = cfg.leave_subject_out ? &run.subjects : nullptr;

    std::vector<fs::path> inputs = cfg.input == "ecg" ? run.ecg_files : run.rf_files;
    if (cfg.model != "dl" || cfg.input == "ecg")
        inputs.push_back(p.features / (cfg.input + "_features.csv"));
    if (!force && pipedetail::fresh(inputs, {report})) {
        std::printf("loocv: %s up to date\n", report.string().c_str());
        StoredReport sr = read_report_json(report);
        EvaluationReport rep;
        rep.accuracy = sr.accuracy;
        return rep;
    }

    EvaluationReport rep;
    if (cfg.model == "dl" && cfg.input == "rf") {
        rep = loocv_dl_rf(build_rf_samples(run, cfg), run.labels, cfg, groups);
    } else if (cfg.model == "dl") {
        rep = loocv_dl_ecg(read_features_checked(p, "ecg"), build_ecg_images(run, cfg), cfg,
                           groups);
    } else {
        rep = loocv_classic(read_features_checked(p, cfg.input), cfg, groups);
    }

    write_report_json(rep, run.ids, cfg, report);
    write_confusion_csv(rep.cm, p.eval / (tag + "_confusion.csv"));
    write_folds_csv(rep, run.ids, p.eval / (tag + "_folds.csv"));
    pipedetail::write_text_file(
        p.eval / (tag + "_confusion.svg"),
        svg::heatmap("Confusion: " + tag,
                     [&] {
                         std::vector<std::vector<double>> m;
                         for (const auto& row : rep.cm.counts) {
                             m.emplace_back();
                             for (long v : row)
                                 m.back().push_back(static_cast<double>(v));
                         }
                         return m;
                     }(),
                     {emotion_names().begin(), emotion_names().end()},
                     {emotion_names().begin(), emotion_names().end()}));
    std::printf("loocv: %s accuracy %.3f, macro f1 %.3f +/- %.3f (%zu folds)\n", tag.c_str(),
                rep.accuracy, rep.prf.macro_f1, rep.prf.std_f1, rep.log.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Stage: roc
// ---------------------------------------------------------------------------

inline MulticlassRoc run_roc(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    const std::string tag = model_tag(cfg);
    fs::path report = p.eval / (tag + "_report.json");
    fs::path csv = p.eval / (tag + "_roc.csv");
    fs::path svg_path = p.eval / (tag + "_roc.svg");
    StoredReport sr = read_report_json(report);
    MulticlassRoc roc = multiclass_roc(sr.y_true, sr.scores);
    if (!force && pipedetail::fresh({report}, {csv, svg_path})) {
        std::printf("roc: %s up to date\n", csv.string().c_str());
        return roc;
    }

    std::ostringstream os;
    os << "tag,auc\n";
    std::vector<const RocCurve*> curves;
    for (const auto& c : roc.per_class)
        curves.push_back(&c);
    curves.push_back(&roc.micro);
    curves.push_back(&roc.macro);
    for (const RocCurve* c : curves)
        os << c->tag << ',' << detail::format_g17(c->auc) << '\n';
    os << "tag,fpr,tpr\n";
    for (const RocCurve* c : curves)
        for (const auto& [fpr, tpr] : c->points)
            os << c->tag << ',' << detail::format_g17(fpr) << ',' << detail::format_g17(tpr)
               << '\n';
    pipedetail::write_text_file(csv, os.str());

    std::vector<svg::Series> series;
    for (const RocCurve* c : curves) {
        svg::Series s;
        s.label = c->tag + " (auc " + pipedetail::round3(c->auc) + ")";
        for (const auto& [fpr, tpr] : c->points)
            s.points.emplace_back(fpr, tpr);
        series.push_back(std::move(s));
    }
    svg::Series diag;
    diag.label = "chance";
    diag.points = {{0.0, 0.0}, {1.0, 1.0}};
    series.push_back(std::move(diag));
    pipedetail::write_text_file(
        svg_path, svg::line_chart("ROC: " + tag, "false positive rate", "true positive rate",
                                  series));

    std::printf("roc: %s micro auc %.3f, macro auc %.3f\n", tag.c_str(), roc.micro.auc,
                roc.macro.auc);
    return roc;
}

// ---------------------------------------------------------------------------
// Stage: tsne
// ---------------------------------------------------------------------------

inline TsneResult run_tsne(const RunConfig& cfg, bool force = false) {
    Paths p = Paths::make(cfg);
    fs::create_directories(p.eval);
    FeatureMatrix fm = read_features_checked(p, cfg.input);
    fs::path csv = p.eval / ("tsne_" + cfg.input + ".csv");
    fs::path svg_path = p.eval / ("tsne_" + cfg.input + ".svg");
    fs::path feat_file = p.features / (cfg.input + "_features.csv");

    std::vector<std::size_t> all(fm.rows.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    Standardizer st;
    st.fit(fm.rows, all);
    std::vector<std::vector<double>> x;
    for (const auto& row : fm.rows)
        x.push_back(st.apply(row));
    TsneResult res = tsne(x, cfg.tsne_perplexity, cfg.tsne_iterations,
                          seedmix::derive(cfg.seed, 0xD0));
    if (!force && pipedetail::fresh({feat_file}, {csv, svg_path})) {
        std::printf("tsne: %s up to date\n", csv.string().c_str());
        return res;
    }

    std::ostringstream os;
    os << "label,x,y\n";
    for (std::size_t i = 0; i < res.embedding.size(); ++i)
        os << emotion_names()[static_cast<std::size_t>(fm.labels[i])] << ','
           << detail::format_g17(res.embedding[i][0]) << ','
           << detail::format_g17(res.embedding[i][1]) << '\n';
    pipedetail::write_text_file(csv, os.str());

    std::vector<svg::Series> groups(emotion_names().size());
    for (std::size_t c = 0; c < groups.size(); ++c)
        groups[c].label = emotion_names()[c];
    for (std::size_t i = 0; i < res.embedding.size(); ++i)
        groups[static_cast<std::size_t>(fm.labels[i])].points.emplace_back(res.embedding[i][0],
                                                                           res.embedding[i][1]);
    pipedetail::write_text_file(
        svg_path, svg::scatter_chart("t-SNE: " + cfg.input + " features", "dim 1", "dim 2",
                                     groups));
    std::printf("tsne: %s, kl %.4f -> %.4f\n", csv.string().c_str(), res.kl_initial,
                res.kl_final);
    return res;
}

// ---------------------------------------------------------------------------
// Stage: report
// ---------------------------------------------------------------------------

inline std::string run_report(const RunConfig& cfg) {
    Paths p = Paths::make(cfg);
    std::vector<StoredReport> reports;
    if (fs::exists(p.eval))
        for (const auto& entry : fs::directory_iterator(p.eval)) {
            const std::string name = entry.path().filename().string();
            if (name.size() > 12 && name.substr(name.size() - 12) == "_report.json")
                reports.push_back(read_report_json(entry.path()));
        }
    if (reports.empty())
        throw MissingArtifactError("no evaluation reports under " + p.eval.string() +
                                   "; run `rfaffect loocv` first");
    std::sort(reports.begin(), reports.end(), [](const StoredReport& a, const StoredReport& b) {
        if (a.accuracy != b.accuracy)
            return a.accuracy > b.accuracy;
        return a.model + a.input < b.model + b.input;
    });

    using pipedetail::round3;
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model", "input", "n", "accuracy", "precision", "recall", "f1"});
    for (const auto& r : reports)
        rows.push_back({r.model, r.input, std::to_string(r.n), round3(r.accuracy),
                        round3(r.macro_precision) + " +/- " + round3(r.std_precision),
                        round3(r.macro_recall) + " +/- " + round3(r.std_recall),
                        round3(r.macro_f1) + " +/- " + round3(r.std_f1)});
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            os << (c ? "  " : "") << rows[r][c]
               << std::string(width[c] - rows[r][c].size(), ' ');
        }
        os << '\n';
        if (r == 0)
            os << std::string(std::accumulate(width.begin(), width.end(), std::size_t{0}) +
                                  2 * (width.size() - 1),
                              '-')
               << '\n';
    }
    std::string table = os.str();
    pipedetail::write_text_file(p.eval / "summary.txt", table);

    if (reports.size() > 1) {
        std::vector<std::string> labels;
        std::vector<double> values;
        for (const auto& r : reports) {
            labels.push_back(r.model + "/" + r.input);
            values.push_back(r.accuracy);
        }
        pipedetail::write_text_file(p.eval / "summary.svg",
                                    svg::bar_chart("Cross-validated accuracy", labels, values,
                                                   "accuracy"));
    }
    std::fputs(table.c_str(), stdout);
    return table;
}

// ---------------------------------------------------------------------------
// Sliding-window inference on a continuous recording
// ---------------------------------------------------------------------------

struct TimedPrediction {
    double time = 0.0;  // window center, seconds
    std::vector<double> probs;
};

inline std::vector<TimedPrediction> predict_over_time(nn::Model& m, const TimeSeries& raw,
                                                      double window_s, double hop_s,
                                                      const RunConfig& cfg) {
    validate(raw);
    if (!(window_s > 0.0) || !(hop_s > 0.0))
        throw std::invalid_argument("predict_over_time: window and hop must be positive");
    if (window_s > raw.duration() + 1e-9)
        throw std::invalid_argument("predict_over_time: window longer than the recording");
    const std::size_t win = static_cast<std::size_t>(std::llround(window_s * raw.sample_rate));
    const std::size_t hop = static_cast<std::size_t>(std::llround(hop_s * raw.sample_rate));
    if (win < 16 || hop == 0)
        throw std::invalid_argument("predict_over_time: window or hop too small");
    std::vector<TimedPrediction> out;
    for (std::size_t i0 = 0; i0 + win <= raw.samples.size(); i0 += hop) {
        TimeSeries slice({raw.samples.begin() + static_cast<std::ptrdiff_t>(i0),
                          raw.samples.begin() + static_cast<std::ptrdiff_t>(i0 + win)},
                         raw.sample_rate, raw.time_at(i0));
        nn::NnSample s = make_rf_sample(preprocess_rf(slice, cfg, false), cfg, 0);
        TimedPrediction tp;
        tp.time = raw.time_at(i0) + window_s / 2.0;
        tp.probs = m.predict_proba(s.a, s.b);
        out.push_back(std::move(tp));
    }
    return out;
}

}  // namespace pipeline
}  // namespace rfaffect
