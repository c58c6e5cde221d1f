// Command-line front end: each subcommand drives one pipeline stage against
// the artifact directory given by --out (or the config file).

#include <cstdio>
#include <cstdint>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "rfaffect/pipeline.hpp"

namespace {

int run_stage(const std::string& stage, const rfaffect::RunConfig& cfg, bool force) {
    using namespace rfaffect::pipeline;
    if (stage == "synth")
        run_synth(cfg, force);
    else if (stage == "preprocess")
        run_preprocess(cfg, force);
    else if (stage == "features")
        run_features(cfg, force);
    else if (stage == "cwt")
        run_cwt(cfg, force);
    else if (stage == "train")
        run_train(cfg, force);
    else if (stage == "loocv")
        run_loocv(cfg, force);
    else if (stage == "roc")
        run_roc(cfg, force);
    else if (stage == "tsne")
        run_tsne(cfg, force);
    else if (stage == "report")
        run_report(cfg);
    else
        throw rfaffect::ConfigError("unknown stage: " + stage);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rfaffect: contactless emotion recognition pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, model, input;
    std::uint64_t seed = 0;
    int workers = 1;
    bool force = false;
    app.add_option("--config", config_path, "run configuration file (ini)")
        ->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "override run.seed");
    auto* workers_opt = app.add_option("--workers", workers, "override run.workers");
    auto* out_opt = app.add_option("--out", out_dir, "override run.out (artifact directory)");
    auto* model_opt = app.add_option("--model", model, "override model.kind");
    auto* input_opt = app.add_option("--input", input, "override model.input (rf|ecg)");
    app.add_flag("--force", force, "redo stages even when outputs are up to date");

    app.add_subcommand("synth", "generate the synthetic labeled dataset");
    app.add_subcommand("preprocess", "filter and normalize raw recordings");
    app.add_subcommand("features", "extract feature tables");
    app.add_subcommand("cwt", "export wavelet scaleograms");
    app.add_subcommand("train", "fit the configured model on the full dataset");
    app.add_subcommand("loocv", "leave-one-out cross-validation");
    app.add_subcommand("roc", "ROC curves and AUC from the last loocv report");
    app.add_subcommand("tsne", "2-d embedding of the feature table");
    app.add_subcommand("report", "summary table across evaluated models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        rfaffect::RunConfig cfg;
        if (!config_path.empty())
            cfg = rfaffect::load_config(config_path);
        if (seed_opt->count())
            cfg.seed = seed;
        if (workers_opt->count())
            cfg.workers = workers;
        if (out_opt->count())
            cfg.out_dir = out_dir;
        if (model_opt->count())
            cfg.model = model;
        if (input_opt->count())
            cfg.input = input;
        rfaffect::validate(cfg);
        return run_stage(app.get_subcommands().front()->get_name(), cfg, force);
    } catch (const rfaffect::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const rfaffect::MissingArtifactError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
