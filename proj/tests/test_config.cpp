#include "doctest.h"
#include "solarpmu/config.hpp"
#include "solarpmu/errors.hpp"

using namespace solarpmu;

TEST_CASE("analysis defaults round trip through their dump") {
    const auto text = dump_analysis_config(AnalysisConfig{});
    const auto parsed = parse_analysis_config(text);
    CHECK(dump_analysis_config(parsed) == text);
    CHECK(parsed.baseline.z_threshold == 6.0);
    CHECK(parsed.detector.threshold_quantile == 0.995);
    CHECK(parse_analysis_config("{}").locate.dead_band == 0.1);
}

TEST_CASE("partial analysis config overrides only named keys") {
    const auto cfg = parse_analysis_config(R"({"locate": {"dead_band": 0.5}, "gan": {"generator_loss": "minimax"}})");
    CHECK(cfg.locate.dead_band == 0.5);
    CHECK(cfg.locate.corr_threshold == 0.8);
    CHECK(cfg.gan.generator_loss == GeneratorLoss::Minimax);
}

TEST_CASE("malformed analysis config is rejected") {
    CHECK_THROWS_AS(parse_analysis_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config("[]"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config(R"({"locate": {"deadband": 0.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config(R"({"baseline": {"window": "wide"}})"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config(R"({"baseline": {"window": 2.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_analysis_config(R"({"gan": {"generator_loss": "wasserstein"}})"), ConfigError);
}

TEST_CASE("scenario configs round trip and simulate identically") {
    for (const auto& cfg : {mixed_scenario(5), grid_step_scenario(-1, 3), production_split_scenario(2, 6)}) {
        const auto text = dump_scenario_config(cfg);
        const auto parsed = parse_scenario_config(text);
        CHECK(dump_scenario_config(parsed) == text);
        CHECK(simulate(parsed).solar.samples == simulate(cfg).solar.samples);
    }
}

TEST_CASE("scenario presets") {
    const auto split = parse_scenario_config(R"({"preset": "production_split", "seed": 3, "events": 10})");
    CHECK(dump_scenario_config(split) == dump_scenario_config(production_split_scenario(3, 10)));
    const auto grid = parse_scenario_config(R"({"preset": "grid_step", "direction": -1})");
    CHECK(dump_scenario_config(grid) == dump_scenario_config(grid_step_scenario(-1)));
    CHECK_THROWS_AS(parse_scenario_config(R"({"preset": "storm"})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"preset": "grid_step", "direction": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"preset": "mixed", "events": 3})"), ConfigError);
}

TEST_CASE("scenario configs are validated after parsing") {
    CHECK_THROWS_AS(parse_scenario_config(R"({"duration_s": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"source_impedance": [1, 2, 3]})"), ConfigError);
    CHECK_THROWS_AS(
        parse_scenario_config(R"({"duration_s": 10, "events": [{"id": "x", "kind": "Fault", "onset_s": 2}]})"),
        ConfigError);
    const auto cfg = parse_scenario_config(
        R"({"duration_s": 10, "irradiance": [[0, 30], [10, 60]], "events": [{"id": "x", "onset_s": 2, "magnitude": 1}]})");
    CHECK(cfg.irradiance.size() == 2);
    CHECK(cfg.events.at(0).kind == EventKind::LocalStep);
}
