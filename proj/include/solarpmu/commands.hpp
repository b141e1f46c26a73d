#ifndef SOLARPMU_COMMANDS_HPP
#define SOLARPMU_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace solarpmu::cli {

/// Stable process exit codes.
enum ExitCode : int { kSuccess = 0, kInputError = 2, kIoError = 3 };

inline constexpr const char* kToolVersion = "1.0.0";

struct SimulateOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  ///< overrides the scenario seed
};

struct TrainOptions {
    std::string stream_path;
    std::string out_dir;
    std::string config_path;  ///< empty: built-in defaults
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
};

struct DetectOptions {
    std::string stream_path;
    std::string out_dir;
    std::string model_path;  ///< required unless baseline
    bool baseline = false;
    std::string config_path;
    std::optional<double> threshold_quantile;
    std::optional<double> min_separation_s;
};

struct AnalyzeOptions {
    std::string solar_path;
    std::string aux_path;  ///< empty: impedance-only origin labels
    std::string events_path;
    std::string out_dir;
    std::string config_path;
};

/// Writes solar.csv, aux.csv, truth.json and manifest.json.
int cmd_simulate(const SimulateOptions& options, std::ostream& log);
/// Writes model.json and manifest.json.
int cmd_train(const TrainOptions& options, std::ostream& log);
/// Writes events.jsonl and manifest.json.
int cmd_detect(const DetectOptions& options, std::ostream& log);
/// Writes origins.jsonl, features.json, fits.json, stages.jsonl, report.json, plot CSVs and manifest.json.
int cmd_analyze(const AnalyzeOptions& options, std::ostream& log);

/// Writes the built-in analysis defaults as JSON.
int cmd_defaults(std::ostream& out);

}  // namespace solarpmu::cli

#endif  // SOLARPMU_COMMANDS_HPP
