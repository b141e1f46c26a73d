#ifndef SOLARPMU_DYNAMICS_HPP
#define SOLARPMU_DYNAMICS_HPP

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarpmu/detect.hpp"

namespace solarpmu {

/// Control stages of an inverter plant responding to a grid voltage step, in order.
enum class Stage {
    Disturbance,        ///< the voltage step itself; current still flat
    PromptCounterStep,  ///< current loop holds output power: current moves against the step
    MpptCorrection,     ///< MPPT/voltage loop re-tunes the current reference: reversal
    RampLimitDip,       ///< plant controller applies ramp limits: momentary decrease
    RampRecovery,       ///< moderate ramp back to the regulated setpoint
};

inline constexpr int kStageCount = 5;

std::string to_string(Stage stage);

class SegmentationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optimal piecewise-linear segmentation: `boundaries` are the first indices of segments 2..K.
struct Segmentation {
    std::vector<std::size_t> boundaries;
    double sse = 0.0;
};

/// Least-squares line fit residual of y[first, last) against x.
double line_sse(std::span<const double> x, std::span<const double> y, std::size_t first, std::size_t last);

/**
 * Exact minimum-SSE segmentation into `segments` independent least-squares
 * lines, each at least `min_len` samples long, by dynamic programming over
 * prefix sums. `x` is the abscissa (seconds).
 */
Segmentation segment_piecewise_linear(std::span<const double> x, std::span<const double> y, int segments,
                                      int min_len);

struct StageSettings {
    int min_segment = 12;            ///< frames (0.1 s at 120 Hz)
    double min_improvement = 0.05;   ///< quality gate, see segment_stages
    double flat_tolerance = 0.1;     ///< stage 1 counts as flat below this fraction of the largest slope
};

struct StageSegmentation {
    std::vector<Timestamp> boundaries;          ///< 4 interior changepoints
    std::vector<std::size_t> boundary_indices;  ///< same, as indices into the trace
    std::vector<double> slopes;                 ///< per-segment |I| slope, A/s
    std::optional<std::array<Stage, kStageCount>> labels;  ///< empty: slope pattern matched no template
    bool staged = false;       ///< false: "no staged structure"
    int step_direction = 0;    ///< sign of the voltage step, from the event's steady windows
    double sse_one = 0.0;
    double sse_two = 0.0;
    double sse_five = 0.0;
};

/**
 * Labels five segment slopes. Expected pattern: flat, against the voltage step,
 * reversal, decrease, increase. A step up therefore reads (0, -, +, -, +) and
 * a step down (0, +, -, -, +).
 */
std::optional<std::array<Stage, kStageCount>> label_stages(std::span<const double> slopes, int voltage_step_direction,
                                                           double flat_tolerance = 0.1);

/// Samples of `stream` from `lead_s` before the event start to `horizon_s` after it, clipped to the stream.
std::span<const PhasorSample> stage_trace(const PhasorStream& stream, const EventWindow& event, double lead_s,
                                          double horizon_s);

/**
 * @brief Splits an event's |I| trace into the five control stages.
 *
 * The trace must hold at least 5 x min_segment samples (SegmentationError
 * otherwise). The result is flagged as not staged when five segments explain
 * less than `min_improvement` of the single-line residual, or when almost all of
 * the improvement is already captured by a single changepoint (a bare step).
 */
StageSegmentation segment_stages(const EventWindow& event, std::span<const PhasorSample> trace,
                                 const StageSettings& settings = {});

}  // namespace solarpmu

#endif  // SOLARPMU_DYNAMICS_HPP
