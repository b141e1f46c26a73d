#ifndef SOLARPMU_CONFIG_HPP
#define SOLARPMU_CONFIG_HPP

#include <string>

#include "solarpmu/characterize.hpp"
#include "solarpmu/detect.hpp"
#include "solarpmu/dynamics.hpp"
#include "solarpmu/gan.hpp"
#include "solarpmu/ingest.hpp"
#include "solarpmu/locate.hpp"
#include "solarpmu/simulate.hpp"

namespace solarpmu {

struct StreamSettings {
    double nominal_rate = kDefaultReportingRate;
    double rated_power = kDefaultSolarRating;
    double phase_factor = kDefaultPhaseFactor;
    Timestamp alignment_tolerance_us = kDefaultAlignmentToleranceUs;
};

struct BaselineSettings {
    double z_threshold = 6.0;
    int window = 240;
};

struct ReportSettings {
    double histogram_bin_pct = 10.0;
    double threshold_pct = 30.0;
};

/// Trace handed to stage segmentation: [event start - lead, event start + horizon].
struct TraceSettings {
    double lead_s = 0.25;
    double horizon_s = 1.5;
};

/// Every analysis default in one place; a config file overrides any subset of it.
struct AnalysisConfig {
    StreamSettings stream;
    DetectorSettings detector;
    BaselineSettings baseline;
    GanConfig gan = detector_gan_config();
    LocateSettings locate;
    ResponseSettings response;
    ReportSettings report;
    StageSettings stages;
    TraceSettings trace;
};

/**
 * Parses an analysis config. Missing keys keep their defaults; unknown keys
 * and values of the wrong type throw ConfigError.
 */
AnalysisConfig parse_analysis_config(const std::string& text);
std::string dump_analysis_config(const AnalysisConfig& config);

/**
 * Parses a scenario config: either a full scenario object or
 * {"preset": "production_split" | "grid_step" | "mixed", ...preset arguments}.
 * The result is validated.
 */
ScenarioConfig parse_scenario_config(const std::string& text);
std::string dump_scenario_config(const ScenarioConfig& config);

}  // namespace solarpmu

#endif  // SOLARPMU_CONFIG_HPP
