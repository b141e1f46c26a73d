// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "solarpmu/characterize.hpp"
#include "solarpmu/dynamics.hpp"
#include "solarpmu/gan.hpp"
#include "solarpmu/ingest.hpp"
#include "solarpmu/locate.hpp"

using namespace solarpmu;

namespace {

// Tolerances and budgets, fixed here so a run cannot loosen them.
constexpr double kImpedanceTarget = 17.57;
constexpr double kImpedanceTol = 0.05;
constexpr double kFitRelTol = 1e-3;
constexpr double kFitBudgetS = 5.0;
constexpr double kEquilibriumTol = 0.05;
constexpr double kMeanDLow = 0.4;
constexpr double kMeanDHigh = 0.6;
constexpr double kGanBudgetS = 60.0;
constexpr double kGradientTol = 1e-4;
constexpr int kGradientParams = 10;
constexpr double kGradientBudgetS = 10.0;
constexpr int kClosedLoopScenarios = 100;
constexpr double kImpedanceAccuracy = 0.95;
constexpr double kClosedLoopBudgetS = 60.0;
constexpr double kSplitTarget = 0.70;
constexpr double kSplitTol = 0.02;
constexpr long kBoundaryFrames = 6;
constexpr double kStageBudgetS = 30.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<PhasorSample> flat_window(ComplexPhasor v, ComplexPhasor i) {
    std::vector<PhasorSample> w;
    for (int k = 0; k < 60; ++k) w.emplace_back(k, v.magnitude(), v.angle_deg(), i.magnitude(), i.angle_deg());
    return w;
}

Outcome event_two_impedance() {
    const ComplexPhasor v0(7200.0, 150.0);
    const ComplexPhasor i0(120.0, -15.0);
    const auto dp = differential_phasor(flat_window(v0, i0),
                                        flat_window(v0 + ComplexPhasor(2.8, -29.5), i0 + ComplexPhasor(-0.363, -1.561)));
    const auto label = classify_origin(dp);
    return {std::abs(dp.z.re() - kImpedanceTarget) <= kImpedanceTol && label.origin == Origin::LocallyInduced,
            fmt("Real{Z} = %.4f ohm, label %s", dp.z.re(), to_string(label.origin).c_str())};
}

std::vector<Point> law_points(double a, double b, double c) {
    std::vector<Point> pts;
    for (int x = 5; x <= 100; x += 5) pts.emplace_back(x, a * std::pow(x, b) + c);
    return pts;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

Outcome curve_fits() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto offset = fit_power_law(law_points(850.0, -1.0, 50.0), true);
    const auto plain = fit_power_law(law_points(4.5, -1.0, 0.0), false);
    double worst = std::max({rel_err(offset.params[0], 850.0), rel_err(offset.params[1], -1.0),
                             rel_err(offset.params[2], 50.0), rel_err(plain.params[0], 4.5),
                             rel_err(plain.params[1], -1.0)});
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> expo(-2.0, -0.5);
    std::uniform_real_distribution<double> scale(1.0, 1000.0);
    std::uniform_real_distribution<double> shift(0.0, 100.0);
    for (int draw = 0; draw < 100; ++draw) {
        const double a = scale(rng), b = expo(rng), c = shift(rng), d = scale(rng), e = expo(rng);
        const auto f3 = fit_power_law(law_points(a, b, c), true);
        const auto f2 = fit_power_law(law_points(d, e, 0.0), false);
        worst = std::max({worst, rel_err(f3.params[0], a), rel_err(f3.params[1], b), rel_err(f3.params[2], c),
                          rel_err(f2.params[0], d), rel_err(f2.params[1], e)});
    }
    const double elapsed = seconds_since(t0);
    return {worst <= kFitRelTol && elapsed < kFitBudgetS,
            fmt("(a,b,c) = (%.4f, %.6f, %.4f), (d,e) = (%.6f, %.6f); worst relative error over 102 fits %.2e; %.2f s",
                offset.params[0], offset.params[1], offset.params[2], plain.params[0], plain.params[1], worst,
                elapsed)};
}

Outcome gan_equilibrium() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 r2(3);
    nn::Mlp d({1, 16, 16, 1}, r2);
    nn::Matrix real(100, 1);
    nn::Matrix fake(100, 1);
    for (int i = 0; i < 100; ++i) {
        real(i, 0) = i < 80 ? -1.0 : 1.0;
        fake(i, 0) = i < 30 ? -1.0 : 1.0;
    }
    fit_discriminator(d, real, fake, 3000, 1e-2);
    nn::Matrix q(2, 1);
    q << -1.0, 1.0;
    const auto logits = d.forward(q);
    const double d1 = nn::sigmoid(logits(0, 0));
    const double d2 = nn::sigmoid(logits(1, 0));
    const bool two_point = std::abs(d1 - 0.8 / 1.1) <= kEquilibriumTol && std::abs(d2 - 0.2 / 0.9) <= kEquilibriumTol;

    const auto stats = NormalizationStats::identity(1, 1);
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<WindowTensor> corpus;
    for (int i = 0; i < 640; ++i) corpus.push_back({{n(rng)}, stats.fingerprint()});
    GanConfig cfg;
    cfg.epochs = 2000;
    cfg.batch_size = 64;
    cfg.hidden_width = 16;
    cfg.noise_dim = 4;
    cfg.seed = 7;
    const auto model = train_gan(corpus, stats, cfg);
    double mean_d = 0.0;
    for (int i = 0; i < 2000; ++i) mean_d += model.discriminator_output({{n(rng)}, stats.fingerprint()});
    mean_d /= 2000.0;
    const double elapsed = seconds_since(t0);
    return {two_point && mean_d >= kMeanDLow && mean_d <= kMeanDHigh && elapsed < kGanBudgetS,
            fmt("two-point D = (%.4f, %.4f) vs (%.4f, %.4f); Gaussian mean D(real) = %.4f; %.1f s", d1, d2, 0.8 / 1.1,
                0.2 / 0.9, mean_d, elapsed)};
}

nn::Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    nn::Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = n(rng);
    return m;
}

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(404);
    nn::Mlp g({4, 10, 10, 6}, rng);
    nn::Mlp d({6, 10, 10, 1}, rng);
    const auto real = random_matrix(rng, 16, 6);
    const auto z = random_matrix(rng, 16, 4);
    const auto fake = g.forward(z);
    std::vector<double> gd(d.parameters().size());
    std::vector<double> gg(g.parameters().size());
    discriminator_loss(d, real, fake, gd);
    generator_loss(g, d, z, GeneratorLoss::NonSaturating, gg);

    const double h = 1e-5;
    double worst = 0.0;
    int checked = 0;
    const auto probe = [&](nn::Mlp& net, const std::vector<double>& grad, const std::function<double()>& loss) {
        std::uniform_int_distribution<std::size_t> pick(0, grad.size() - 1);
        for (int k = 0; k < kGradientParams; ++k) {
            const auto i = pick(rng);
            const double saved = net.parameters()[i];
            net.parameters()[i] = saved + h;
            const double up = loss();
            net.parameters()[i] = saved - h;
            const double down = loss();
            net.parameters()[i] = saved;
            const double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(grad[i] - numeric) /
                                        std::max({std::abs(grad[i]), std::abs(numeric), 1e-7}));
            ++checked;
        }
    };
    probe(d, gd, [&] { return discriminator_loss(d, real, fake, {}); });
    probe(g, gg, [&] { return generator_loss(g, d, z, GeneratorLoss::NonSaturating, {}); });
    const double elapsed = seconds_since(t0);
    return {worst < kGradientTol && checked >= kGradientParams && elapsed < kGradientBudgetS,
            fmt("%d parameters (D and G), worst relative error %.2e; %.2f s", checked, worst, elapsed)};
}

Outcome closed_loop() {
    const auto t0 = std::chrono::steady_clock::now();
    int injected = 0, analysed = 0, labeled = 0, correct = 0;
    int grid_seen = 0, grid_match = 0, local_seen = 0, local_match = 0;
    for (int seed = 1; seed <= kClosedLoopScenarios; ++seed) {
        const auto s = simulate(mixed_scenario(static_cast<std::uint64_t>(seed)));
        const auto pairs = align(s.solar, s.auxiliary);
        const auto events = detect_events_baseline(s.solar);
        for (const auto& t : s.truth) {
            ++injected;
            for (const auto& e : events) {
                if (!fixtures::overlaps(e, t) || !e.has_steady_state()) continue;
                ++analysed;
                const bool match = signature_match(e, pairs);
                if (t.kind == EventKind::GridVoltageStep) {
                    ++grid_seen;
                    grid_match += match ? 1 : 0;
                } else {
                    ++local_seen;
                    local_match += match ? 1 : 0;
                }
                try {
                    const auto label = classify_origin(differential_phasor(e));
                    if (label.origin != Origin::Indeterminate) {
                        ++labeled;
                        correct += label.origin == t.label ? 1 : 0;
                    }
                } catch (const IndeterminateImpedanceError&) {
                }
                break;
            }
        }
    }
    const double accuracy = labeled > 0 ? static_cast<double>(correct) / labeled : 0.0;
    const double elapsed = seconds_since(t0);
    return {accuracy >= kImpedanceAccuracy && grid_seen > 0 && grid_match == grid_seen && local_seen > 0 &&
                local_match == 0 && elapsed < kClosedLoopBudgetS,
            fmt("%d injected, %d analysed; impedance %d/%d correct (%.3f); signature grid %d/%d, local %d/%d; %.1f s",
                injected, analysed, correct, labeled, accuracy, grid_match, grid_seen, local_match, local_seen,
                elapsed)};
}

Outcome production_split() {
    const auto s = simulate(production_split_scenario(3));
    std::vector<EventFeatures> features;
    for (const auto& e : detect_events_baseline(s.solar)) {
        if (!e.has_steady_state()) continue;
        try {
            const auto dp = differential_phasor(e);
            features.push_back(extract_features(e, dp, classify_origin(dp), s.solar.rated_power));
        } catch (const IndeterminateImpedanceError&) {
        }
    }
    const auto h = production_histogram(features, 10.0, Origin::LocallyInduced, 30.0);
    return {!h.empty && std::abs(h.fraction_at_or_below - kSplitTarget) <= kSplitTol,
            fmt("%zu locally-induced of %zu injected; fraction at or below 30 %% = %.3f", h.total, s.truth.size(),
                h.fraction_at_or_below)};
}

double brute_force(std::span<const double> x, std::span<const double> y, int segments, std::size_t min_len) {
    const std::size_t n = y.size();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, int, double)> place = [&](std::size_t first, int left, double acc) {
        if (acc >= best) return;
        if (left == 1) {
            if (n - first >= min_len) best = std::min(best, acc + line_sse(x, y, first, n));
            return;
        }
        for (std::size_t cut = first + min_len; cut + (left - 1) * min_len <= n; ++cut) {
            place(cut, left - 1, acc + line_sse(x, y, first, cut));
        }
    };
    place(0, segments, 0.0);
    return best;
}

Outcome stages() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (int direction : {+1, -1}) {
        const auto s = fixtures::staged_event(direction);
        const long err = s.found ? fixtures::boundary_error(s) : -1;
        const bool labels = s.found && s.segmentation.labels.has_value();
        ok = ok && s.found && err <= kBoundaryFrames && labels;
        std::string slopes;
        for (double v : s.segmentation.slopes) slopes += fmt("%+.1f ", v);
        detail += fmt("step %s: max boundary error %ld frames, labels %s, slopes [ %s]; ", direction > 0 ? "up" : "down",
                      err, labels ? "canonical" : "none", slopes.c_str());
    }
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = trial == 0 ? 100 : 60;
        const std::size_t min_len = trial == 0 ? 12 : 5;
        std::vector<double> x(n), y(n);
        double level = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = static_cast<double>(k) / 120.0;
            level += noise(rng);
            y[k] = level;
        }
        const double dp = segment_piecewise_linear(x, y, 5, static_cast<int>(min_len)).sse;
        worst = std::max(worst, std::abs(dp - brute_force(x, y, 5, min_len)) / std::max(1.0, dp));
    }
    const double elapsed = seconds_since(t0);
    ok = ok && worst < 1e-9 && elapsed < kStageBudgetS;
    detail += fmt("DP vs brute force worst relative SSE gap %.1e; %.1f s", worst, elapsed);
    return {ok, detail};
}

Outcome determinism() {
    const auto cfg = mixed_scenario(11);
    const auto a = simulate(cfg);
    const auto b = simulate(cfg);
    std::ostringstream sa, sb;
    serialize_stream(sa, a.solar);
    serialize_stream(sa, a.auxiliary);
    serialize_stream(sb, b.solar);
    serialize_stream(sb, b.auxiliary);
    const bool identical = sa.str() == sb.str();

    std::ostringstream first;
    serialize_stream(first, a.solar);
    std::istringstream in(first.str());
    const auto parsed = parse_stream(in, "solar");
    std::ostringstream second;
    serialize_stream(second, parsed.stream);
    const bool round_trip = parsed.stream.samples == a.solar.samples && second.str() == first.str();
    return {identical && round_trip, fmt("repeat run byte-identical: %s; CSV round trip of %zu samples bit-exact: %s",
                                         identical ? "yes" : "no", a.solar.samples.size(), round_trip ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"event-2 impedance", event_two_impedance},
        {"curve-fit recovery", curve_fits},
        {"GAN equilibrium", gan_equilibrium},
        {"gradient correctness", gradients},
        {"closed-loop origin", closed_loop},
        {"production split", production_split},
        {"stage segmentation", stages},
        {"determinism and round trip", determinism},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
