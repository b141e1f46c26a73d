#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "solarpmu/dynamics.hpp"

using namespace solarpmu;

namespace {

struct Trace {
    std::vector<double> x;
    std::vector<double> y;
};

Trace random_piecewise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::uniform_real_distribution<double> slope(-5.0, 5.0);
    Trace t;
    double level = 0.0;
    double s = slope(rng);
    for (std::size_t k = 0; k < n; ++k) {
        if (k % 17 == 0) s = slope(rng);
        level += s / 120.0 * 10.0;
        t.x.push_back(static_cast<double>(k) / 120.0);
        t.y.push_back(level + noise(rng));
    }
    return t;
}

/// Exhaustive search over every admissible placement of the interior boundaries.
double brute_force_sse(const Trace& t, int segments, std::size_t min_len) {
    const std::size_t n = t.y.size();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, int, double)> place = [&](std::size_t first, int left, double acc) {
        if (acc >= best) return;
        if (left == 1) {
            if (n - first >= min_len) best = std::min(best, acc + line_sse(t.x, t.y, first, n));
            return;
        }
        for (std::size_t cut = first + min_len; cut + (left - 1) * min_len <= n; ++cut) {
            place(cut, left - 1, acc + line_sse(t.x, t.y, first, cut));
        }
    };
    place(0, segments, 0.0);
    return best;
}

std::vector<PhasorSample> trace_of(std::span<const double> y) {
    std::vector<PhasorSample> out;
    for (std::size_t k = 0; k < y.size(); ++k) {
        out.emplace_back(static_cast<Timestamp>((k * 1000000 + 60) / 120), 7200.0, 0.0, y[k], 0.0);
    }
    return out;
}

}  // namespace

TEST_CASE("dynamic programming matches brute force on short traces") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto t = random_piecewise(seed == 1 ? 100 : 60, seed);
        const std::size_t min_len = seed == 1 ? 12 : 5;
        for (int k : {1, 2, 3, 5}) {
            const auto dp = segment_piecewise_linear(t.x, t.y, k, static_cast<int>(min_len));
            CHECK(dp.boundaries.size() == static_cast<std::size_t>(k - 1));
            CHECK(dp.sse == doctest::Approx(brute_force_sse(t, k, min_len)).epsilon(1e-8));
        }
    }
}

TEST_CASE("more segments never fit worse") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const auto t = random_piecewise(240, seed);
        double previous = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 5; ++k) {
            const double sse = segment_piecewise_linear(t.x, t.y, k, 12).sse;
            CHECK(sse <= previous * (1.0 + 1e-12) + 1e-12);
            previous = sse;
        }
    }
}

TEST_CASE("boundaries are invariant to affine rescaling of the trace") {
    const auto t = random_piecewise(200, 33);
    const auto base = segment_piecewise_linear(t.x, t.y, 5, 12);
    for (auto [gain, offset] : {std::pair{3.0, 100.0}, std::pair{-0.5, 7.0}, std::pair{1e3, -4e4}}) {
        auto y = t.y;
        for (auto& v : y) v = gain * v + offset;
        CHECK(segment_piecewise_linear(t.x, y, 5, 12).boundaries == base.boundaries);
    }
}

TEST_CASE("segmentation preconditions") {
    const auto short_trace = trace_of(std::vector<double>(59, 1.0));
    CHECK_THROWS_AS(segment_stages(EventWindow{}, short_trace), SegmentationError);
    const std::vector<double> x{0.0, 1.0};
    CHECK_THROWS_AS(segment_piecewise_linear(x, x, 0, 1), SegmentationError);
}

TEST_CASE("a pure step has no staged structure") {
    std::vector<double> y(200, 100.0);
    for (std::size_t k = 50; k < y.size(); ++k) y[k] = 96.0;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (auto& v : y) v += noise(rng);
    const auto seg = segment_stages(EventWindow{}, trace_of(y));
    CHECK_FALSE(seg.staged);
    CHECK_FALSE(seg.labels.has_value());
    CHECK(seg.boundaries.size() == 4);
}

TEST_CASE("stage labels follow the slope sign templates") {
    const std::array<Stage, kStageCount> canonical{Stage::Disturbance, Stage::PromptCounterStep, Stage::MpptCorrection,
                                                   Stage::RampLimitDip, Stage::RampRecovery};
    const std::vector<double> up{0.0, -20.0, 15.0, -8.0, 2.0};
    const std::vector<double> down{0.5, 20.0, -15.0, -8.0, 2.0};
    const std::vector<double> rising{0.0, 5.0, 5.0, 5.0, 5.0};
    CHECK(label_stages(up, +1) == canonical);
    CHECK(label_stages(down, -1) == canonical);
    CHECK_FALSE(label_stages(up, -1).has_value());
    CHECK_FALSE(label_stages(rising, +1).has_value());
    CHECK_FALSE(label_stages(rising, -1).has_value());
    CHECK_FALSE(label_stages(up, 0).has_value());
    const std::vector<double> tilted{5.0, -20.0, 15.0, -8.0, 2.0};
    CHECK_FALSE(label_stages(tilted, +1).has_value());
}

TEST_CASE("simulated step-up and step-down responses segment into five stages") {
    for (int direction : {+1, -1}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            CAPTURE(direction);
            CAPTURE(seed);
            const auto s = fixtures::staged_event(direction, seed);
            REQUIRE(s.found);
            CHECK(s.segmentation.step_direction == direction);
            CHECK(s.segmentation.staged);
            CHECK(s.segmentation.labels.has_value());
            CHECK(fixtures::boundary_error(s) <= 6);
            for (std::size_t k = 1; k < s.segmentation.boundaries.size(); ++k) {
                CHECK(s.segmentation.boundaries[k - 1] < s.segmentation.boundaries[k]);
            }
        }
    }
}
