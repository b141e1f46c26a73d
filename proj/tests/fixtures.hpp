#ifndef SOLARPMU_TESTS_FIXTURES_HPP
#define SOLARPMU_TESTS_FIXTURES_HPP

#include <algorithm>
#include <span>

#include "solarpmu/detect.hpp"
#include "solarpmu/dynamics.hpp"
#include "solarpmu/simulate.hpp"

namespace fixtures {

/// Event-free stream with a slow irradiance ramp; the normal-operation training set.
inline solarpmu::PhasorStream normal_operation(double duration_s = 60.0, std::uint64_t seed = 99) {
    solarpmu::ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.duration_s = duration_s;
    cfg.irradiance = {{0.0, 20.0}, {duration_s, 80.0}};
    return solarpmu::simulate(cfg).solar;
}

/// One detector trained once per test process.
inline const solarpmu::GanModel& trained_detector() {
    static const solarpmu::GanModel model =
        solarpmu::train_detector(normal_operation(), solarpmu::DetectorSettings{}, solarpmu::detector_gan_config());
    return model;
}

inline bool overlaps(const solarpmu::EventWindow& e, const solarpmu::TruthEvent& t) {
    return e.start <= t.end && e.end >= t.onset;
}

inline bool detected(std::span<const solarpmu::EventWindow> events, const solarpmu::TruthEvent& t) {
    return std::any_of(events.begin(), events.end(), [&](const auto& e) { return overlaps(e, t); });
}

struct StagedEvent {
    solarpmu::LabeledStream stream;
    solarpmu::EventWindow event;
    solarpmu::StageSegmentation segmentation;
    std::vector<std::size_t> truth_indices;  ///< ground-truth stage transitions as sample indices
    bool found = false;
};

/// Upstream voltage step (+1 up, -1 down), detected by the baseline and segmented over the CLI trace span.
inline StagedEvent staged_event(int direction, std::uint64_t seed = 1) {
    StagedEvent out;
    out.stream = solarpmu::simulate(solarpmu::grid_step_scenario(direction, seed));
    const auto& truth = out.stream.truth.at(0);
    for (const auto& e : solarpmu::detect_events_baseline(out.stream.solar)) {
        if (overlaps(e, truth)) {
            out.event = e;
            out.found = true;
            break;
        }
    }
    if (!out.found) return out;
    const auto trace = solarpmu::stage_trace(out.stream.solar, out.event, 0.25, 1.5);
    out.segmentation = solarpmu::segment_stages(out.event, trace);
    const auto& samples = out.stream.solar.samples;
    for (auto t : truth.stage_boundaries) {
        const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                         [](const solarpmu::PhasorSample& s, solarpmu::Timestamp v) {
                                             return s.timestamp < v;
                                         });
        out.truth_indices.push_back(static_cast<std::size_t>(it - samples.begin()) -
                                    static_cast<std::size_t>(trace.data() - samples.data()));
    }
    return out;
}

/// Largest |found - truth| over the four interior boundaries, in frames.
inline long boundary_error(const StagedEvent& s) {
    long worst = 0;
    for (std::size_t k = 0; k < s.truth_indices.size(); ++k) {
        worst = std::max(worst, std::labs(static_cast<long>(s.segmentation.boundary_indices.at(k)) -
                                          static_cast<long>(s.truth_indices[k])));
    }
    return worst;
}

}  // namespace fixtures

#endif  // SOLARPMU_TESTS_FIXTURES_HPP
