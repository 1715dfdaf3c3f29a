// Command-line front end for the benchmark pipeline:
//   redpanda generate --config exp.ini
//   redpanda train    --config exp.ini --mode redpanda --seed 0
//   redpanda score    --config exp.ini --mode redpanda --seed 0
//   redpanda evaluate --config exp.ini --mode redpanda --seed 0
//   redpanda report   <run-dir>... [--csv summary.csv]
// REDPANDA_OUTPUT_ROOT, when set, re-roots the configured output directory.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "redpanda/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nuisance-attribute-invariant anomaly detection benchmark pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode_str = "redpanda";
    std::uint64_t seed = 0;
    std::vector<std::string> run_dirs;
    std::string csv_path;

    auto* gen = app.add_subcommand("generate", "materialize the synthetic benchmark dataset");
    gen->add_option("--config", config_path, "experiment config (ini)")->required();

    auto* train = app.add_subcommand("train", "train an encoder for one mode and seed");
    train->add_option("--config", config_path, "experiment config (ini)")->required();
    train->add_option("--mode", mode_str, "redpanda | simclr_global | raw_encoder");
    train->add_option("--seed", seed, "training seed");

    auto* score = app.add_subcommand("score", "score the test split with a trained encoder");
    score->add_option("--config", config_path, "experiment config (ini)")->required();
    score->add_option("--mode", mode_str, "redpanda | simclr_global | raw_encoder");
    score->add_option("--seed", seed, "training seed");

    auto* evaluate = app.add_subcommand("evaluate", "compute AD/PA/RA scores from a scores file");
    evaluate->add_option("--config", config_path, "experiment config (ini)")->required();
    evaluate->add_option("--mode", mode_str, "redpanda | simclr_global | raw_encoder");
    evaluate->add_option("--seed", seed, "training seed");

    auto* report = app.add_subcommand("report", "aggregate run directories into a comparison table");
    report->add_option("dirs", run_dirs, "run directories containing report.json")->required();
    report->add_option("--csv", csv_path, "also write the summary as csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto cfg = redpanda::runner::ExperimentConfig::load(config_path);
            redpanda::runner::stage_generate(cfg, std::cout);
        } else if (train->parsed()) {
            auto cfg = redpanda::runner::ExperimentConfig::load(config_path);
            redpanda::runner::stage_train(cfg, redpanda::model::parse_mode(mode_str), seed, std::cout);
        } else if (score->parsed()) {
            auto cfg = redpanda::runner::ExperimentConfig::load(config_path);
            redpanda::runner::stage_score(cfg, redpanda::model::parse_mode(mode_str), seed, std::cout);
        } else if (evaluate->parsed()) {
            auto cfg = redpanda::runner::ExperimentConfig::load(config_path);
            redpanda::runner::stage_evaluate(cfg, redpanda::model::parse_mode(mode_str), seed, std::cout);
        } else if (report->parsed()) {
            redpanda::runner::stage_report(run_dirs, std::cout, csv_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
