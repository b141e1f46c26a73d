#include <iostream>

#include "CLI11.hpp"
#include "solarpmu/commands.hpp"

namespace cli = solarpmu::cli;

int main(int argc, char** argv) {
    CLI::App app{"Micro-PMU event analysis for a solar distribution feeder"};
    app.set_version_flag("--version", cli::kToolVersion);
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate labeled synthetic solar and auxiliary streams");
    simulate->add_option("config", sim.config_path, "Scenario config (JSON)")->required();
    simulate->add_option("-o,--out", sim.out_dir, "Output directory")->required();
    simulate->add_option("--seed", sim.seed, "Override the scenario seed");

    cli::TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Train the GAN detector on an event-free stream");
    train_cmd->add_option("stream", train.stream_path, "Training stream CSV")->required();
    train_cmd->add_option("-o,--out", train.out_dir, "Output directory")->required();
    train_cmd->add_option("-c,--config", train.config_path, "Analysis config (JSON)");
    train_cmd->add_option("--seed", train.seed, "Override the training seed");
    train_cmd->add_option("--epochs", train.epochs, "Override the epoch count")->check(CLI::PositiveNumber);

    cli::DetectOptions det;
    auto* detect = app.add_subcommand("detect", "Detect events in a stream");
    detect->add_option("stream", det.stream_path, "Stream CSV")->required();
    detect->add_option("-o,--out", det.out_dir, "Output directory")->required();
    auto* model_opt = detect->add_option("-m,--model", det.model_path, "Trained model (JSON)");
    auto* baseline_opt = detect->add_flag("--baseline", det.baseline, "Use the robust z-score detector");
    model_opt->excludes(baseline_opt);
    detect->add_option("-c,--config", det.config_path, "Analysis config (JSON)");
    detect->add_option("--threshold-quantile", det.threshold_quantile, "Training-score quantile used as threshold");
    detect->add_option("--min-separation", det.min_separation_s, "Seconds below which candidates merge");

    cli::AnalyzeOptions ana;
    auto* analyze = app.add_subcommand("analyze", "Locate, characterize and segment detected events");
    analyze->add_option("solar", ana.solar_path, "Solar feeder stream CSV")->required();
    analyze->add_option("-e,--events", ana.events_path, "events.jsonl from detect")->required();
    analyze->add_option("-a,--aux", ana.aux_path, "Auxiliary feeder stream CSV");
    analyze->add_option("-o,--out", ana.out_dir, "Output directory")->required();
    analyze->add_option("-c,--config", ana.config_path, "Analysis config (JSON)");

    app.add_subcommand("defaults", "Print the built-in analysis config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kInputError;
    }

    if (simulate->parsed()) return cli::cmd_simulate(sim, std::cerr);
    if (train_cmd->parsed()) return cli::cmd_train(train, std::cerr);
    if (detect->parsed()) return cli::cmd_detect(det, std::cerr);
    if (analyze->parsed()) return cli::cmd_analyze(ana, std::cerr);
    return cli::cmd_defaults(std::cout);
}
