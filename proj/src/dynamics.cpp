#include "solarpmu/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace solarpmu {

namespace {

struct PrefixSums {
    std::vector<double> t, tt, y, yy, ty;

    PrefixSums(std::span<const double> x, std::span<const double> v) {
        const std::size_t n = x.size();
        double mx = 0.0;
        double mv = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            mx += x[k];
            mv += v[k];
        }
        mx /= static_cast<double>(n);
        mv /= static_cast<double>(n);
        t.assign(n + 1, 0.0);
        tt = yy = ty = y = t;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = x[k] - mx;
            const double b = v[k] - mv;
            t[k + 1] = t[k] + a;
            tt[k + 1] = tt[k] + a * a;
            y[k + 1] = y[k] + b;
            yy[k + 1] = yy[k] + b * b;
            ty[k + 1] = ty[k] + a * b;
        }
    }

    double cost(std::size_t first, std::size_t last) const {
        const double n = static_cast<double>(last - first);
        const double st = t[last] - t[first];
        const double sy = y[last] - y[first];
        const double sxx = (tt[last] - tt[first]) - st * st / n;
        const double syy = (yy[last] - yy[first]) - sy * sy / n;
        const double sxy = (ty[last] - ty[first]) - st * sy / n;
        const double sse = sxx > 0.0 ? syy - sxy * sxy / sxx : syy;
        return std::max(sse, 0.0);
    }
};

double line_slope(std::span<const double> x, std::span<const double> y, std::size_t first, std::size_t last) {
    const double n = static_cast<double>(last - first);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

double mean_v(std::span<const PhasorSample> window) {
    double s = 0.0;
    for (const auto& p : window) s += p.v_mag;
    return s / static_cast<double>(window.size());
}

}  // namespace

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::Disturbance: return "Disturbance";
        case Stage::PromptCounterStep: return "PromptCounterStep";
        case Stage::MpptCorrection: return "MpptCorrection";
        case Stage::RampLimitDip: return "RampLimitDip";
        case Stage::RampRecovery: return "RampRecovery";
    }
    return "Disturbance";
}

double line_sse(std::span<const double> x, std::span<const double> y, std::size_t first, std::size_t last) {
    const double slope = line_slope(x, y, first, last);
    const double n = static_cast<double>(last - first);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sse = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        const double r = y[k] - (my + slope * (x[k] - mx));
        sse += r * r;
    }
    return sse;
}

Segmentation segment_piecewise_linear(std::span<const double> x, std::span<const double> y, int segments,
                                      int min_len) {
    if (segments < 1 || min_len < 1 || x.size() != y.size()) {
        throw SegmentationError("invalid segmentation request");
    }
    const std::size_t n = y.size();
    const auto k_max = static_cast<std::size_t>(segments);
    const auto m = static_cast<std::size_t>(min_len);
    if (n < k_max * m) {
        throw SegmentationError("trace too short for " + std::to_string(segments) + " segments of " +
                                std::to_string(min_len) + " samples");
    }
    const PrefixSums sums(x, y);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // best[k][j]: minimum SSE of y[0, j) split into k+1 segments; from[k][j]: start of the last one.
    std::vector<std::vector<double>> best(k_max, std::vector<double>(n + 1, kInf));
    std::vector<std::vector<std::size_t>> from(k_max, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t j = m; j <= n; ++j) {
        best[0][j] = sums.cost(0, j);
    }
    for (std::size_t k = 1; k < k_max; ++k) {
        for (std::size_t j = (k + 1) * m; j <= n; ++j) {
            for (std::size_t i = k * m; i + m <= j; ++i) {
                if (best[k - 1][i] == kInf) continue;
                const double c = best[k - 1][i] + sums.cost(i, j);
                if (c < best[k][j]) {
                    best[k][j] = c;
                    from[k][j] = i;
                }
            }
        }
    }
    Segmentation seg;
    seg.sse = best[k_max - 1][n];
    std::size_t j = n;
    for (std::size_t k = k_max - 1; k > 0; --k) {
        j = from[k][j];
        seg.boundaries.push_back(j);
    }
    std::reverse(seg.boundaries.begin(), seg.boundaries.end());
    return seg;
}

std::optional<std::array<Stage, kStageCount>> label_stages(std::span<const double> slopes, int voltage_step_direction,
                                                           double flat_tolerance) {
    if (slopes.size() != kStageCount || voltage_step_direction == 0) {
        return std::nullopt;
    }
    double largest = 0.0;
    for (double s : slopes) largest = std::max(largest, std::abs(s));
    if (largest == 0.0) {
        return std::nullopt;
    }
    // Only the disturbance segment must be flat; the recovery ramp is slow by design, so later
    // segments need the expected sign only.
    if (std::abs(slopes[0]) > flat_tolerance * largest) {
        return std::nullopt;
    }
    const int dir = voltage_step_direction > 0 ? 1 : -1;
    const std::array<int, kStageCount> expected{0, -dir, dir, -1, 1};
    for (std::size_t k = 1; k < kStageCount; ++k) {
        if (slopes[k] * expected[k] <= 0.0) {
            return std::nullopt;
        }
    }
    return std::array<Stage, kStageCount>{Stage::Disturbance, Stage::PromptCounterStep, Stage::MpptCorrection,
                                          Stage::RampLimitDip, Stage::RampRecovery};
}

StageSegmentation segment_stages(const EventWindow& event, std::span<const PhasorSample> trace,
                                 const StageSettings& settings) {
    if (trace.size() < static_cast<std::size_t>(kStageCount * settings.min_segment)) {
        throw SegmentationError("trace of " + std::to_string(trace.size()) + " samples is shorter than " +
                                std::to_string(kStageCount) + " minimum segments");
    }
    std::vector<double> x(trace.size());
    std::vector<double> y(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        x[k] = static_cast<double>(trace[k].timestamp - trace.front().timestamp) * 1e-6;
        y[k] = trace[k].i_mag;
    }

    StageSegmentation out;
    const auto five = segment_piecewise_linear(x, y, kStageCount, settings.min_segment);
    out.sse_one = segment_piecewise_linear(x, y, 1, settings.min_segment).sse;
    out.sse_two = segment_piecewise_linear(x, y, 2, settings.min_segment).sse;
    out.sse_five = five.sse;
    out.boundary_indices = five.boundaries;
    for (auto b : five.boundaries) out.boundaries.push_back(trace[b].timestamp);

    std::vector<std::size_t> edges{0};
    edges.insert(edges.end(), five.boundaries.begin(), five.boundaries.end());
    edges.push_back(trace.size());
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        out.slopes.push_back(line_slope(x, y, edges[s], edges[s + 1]));
    }

    if (event.has_steady_state()) {
        const double dv = mean_v(event.post_window) - mean_v(event.pre_window);
        out.step_direction = dv > 0.0 ? 1 : (dv < 0.0 ? -1 : 0);
    } else {
        const auto m = static_cast<std::size_t>(settings.min_segment);
        const double dv = mean_v(trace.last(m)) - mean_v(trace.first(m));
        out.step_direction = dv > 0.0 ? 1 : (dv < 0.0 ? -1 : 0);
    }

    const double total = out.sse_one - out.sse_five;
    const bool explains = out.sse_one > 0.0 && total >= settings.min_improvement * out.sse_one;
    const bool beyond_step = total > 0.0 && (out.sse_two - out.sse_five) >= settings.min_improvement * total;
    out.staged = explains && beyond_step;
    if (out.staged) {
        out.labels = label_stages(out.slopes, out.step_direction, settings.flat_tolerance);
    }
    return out;
}

std::span<const PhasorSample> stage_trace(const PhasorStream& stream, const EventWindow& event, double lead_s,
                                          double horizon_s) {
    const auto lead = static_cast<std::size_t>(std::llround(lead_s * stream.nominal_rate));
    const auto horizon = static_cast<std::size_t>(std::llround(horizon_s * stream.nominal_rate));
    const std::size_t first = event.start_index >= lead ? event.start_index - lead : 0;
    const std::size_t last = std::min(stream.samples.size(), event.start_index + horizon);
    if (first >= last) return {};
    return {stream.samples.data() + first, last - first};
}

}  // namespace solarpmu
