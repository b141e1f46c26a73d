#include "solarpmu/detect.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

double median_of(std::vector<double>& values) {
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    double m = *mid;
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), mid));
    }
    return m;
}

double slice_variance(std::span<const FrameFeatures> levels, std::size_t first, std::size_t len, int channel) {
    double mean = 0.0;
    for (std::size_t k = first; k < first + len; ++k) mean += levels[k][channel];
    mean /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t k = first; k < first + len; ++k) {
        const double d = levels[k][channel] - mean;
        var += d * d;
    }
    return var / static_cast<double>(len);
}

bool is_steady(std::span<const FrameFeatures> levels, std::size_t first, const SteadyCriterion& crit) {
    for (int c = 0; c < kDetectorChannels; ++c) {
        if (slice_variance(levels, first, static_cast<std::size_t>(crit.steady_len), c) > crit.cap[c]) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<FrameFeatures> level_channels(std::span<const PhasorSample> samples) {
    std::vector<FrameFeatures> out;
    out.reserve(samples.size());
    double unwrapped = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double angle = phase_angle_difference(samples[k]);
        unwrapped = k == 0 ? angle : unwrapped + wrap_degrees(angle - phase_angle_difference(samples[k - 1]));
        out.push_back({samples[k].v_mag, samples[k].i_mag, unwrapped});
    }
    return out;
}

std::vector<FrameFeatures> difference_channels(std::span<const PhasorSample> samples) {
    const auto levels = level_channels(samples);
    std::vector<FrameFeatures> out(levels.size(), FrameFeatures{});
    for (std::size_t k = 1; k < levels.size(); ++k) {
        for (int c = 0; c < kDetectorChannels; ++c) {
            out[k][c] = levels[k][c] - levels[k - 1][c];
        }
    }
    return out;
}

NormalizationStats fit_normalization(const PhasorStream& stream, int window_size) {
    if (window_size <= 0) {
        throw ConfigError("window size must be positive");
    }
    if (stream.samples.size() < static_cast<std::size_t>(window_size) + 1) {
        throw ContractError("stream shorter than one detector window");
    }
    const auto diffs = difference_channels(stream.samples);
    NormalizationStats stats;
    stats.window_size = window_size;
    stats.channels = kDetectorChannels;
    const double n = static_cast<double>(diffs.size() - 1);
    for (int c = 0; c < kDetectorChannels; ++c) {
        double mean = 0.0;
        for (std::size_t k = 1; k < diffs.size(); ++k) mean += diffs[k][c];
        mean /= n;
        double var = 0.0;
        for (std::size_t k = 1; k < diffs.size(); ++k) var += (diffs[k][c] - mean) * (diffs[k][c] - mean);
        const double sd = std::sqrt(var / n);
        stats.mean.push_back(mean);
        stats.stddev.push_back(sd > 1e-12 ? sd : 1.0);
    }
    return stats;
}

WindowTensor make_window(std::span<const FrameFeatures> differences, std::size_t first,
                         const NormalizationStats& stats) {
    if (stats.channels != kDetectorChannels) {
        throw ContractError("statistics were not fitted on detector channels");
    }
    if (first == 0 || first + static_cast<std::size_t>(stats.window_size) > differences.size()) {
        throw ContractError("window exceeds the stream");
    }
    WindowTensor w;
    w.stats_fingerprint = stats.fingerprint();
    w.values.reserve(static_cast<std::size_t>(stats.width()));
    for (std::size_t k = first; k < first + static_cast<std::size_t>(stats.window_size); ++k) {
        for (int c = 0; c < kDetectorChannels; ++c) {
            w.values.push_back((differences[k][c] - stats.mean[c]) / stats.stddev[c]);
        }
    }
    return w;
}

std::vector<WindowTensor> build_corpus(const PhasorStream& stream, const NormalizationStats& stats, int stride) {
    if (stride <= 0) {
        throw ConfigError("corpus stride must be positive");
    }
    const auto diffs = difference_channels(stream.samples);
    std::vector<WindowTensor> corpus;
    const auto w = static_cast<std::size_t>(stats.window_size);
    for (std::size_t first = 1; first + w <= diffs.size(); first += static_cast<std::size_t>(stride)) {
        corpus.push_back(make_window(diffs, first, stats));
    }
    return corpus;
}

GanConfig detector_gan_config() {
    GanConfig config;
    config.epochs = 50;
    config.hidden_width = 16;
    config.reference_mix = 0.5;
    config.reference_scale = 1.5;
    return config;
}

GanModel train_detector(const PhasorStream& training, const DetectorSettings& settings, GanConfig config) {
    const auto stats = fit_normalization(training, settings.window_size);
    const auto corpus = build_corpus(training, stats, settings.corpus_stride);
    return train_gan(corpus, stats, config);
}

SteadyCriterion steady_criterion(const PhasorStream& stream, int steady_len, double factor) {
    if (steady_len < 2 || !(factor > 0.0)) {
        throw ConfigError("steady window length must be >= 2 and the variance factor positive");
    }
    SteadyCriterion crit;
    crit.steady_len = steady_len;
    const auto levels = level_channels(stream.samples);
    const auto len = static_cast<std::size_t>(steady_len);
    if (levels.size() < len) {
        return crit;
    }
    for (int c = 0; c < kDetectorChannels; ++c) {
        std::vector<double> vars;
        vars.reserve(levels.size() - len + 1);
        double scale = 0.0;
        for (std::size_t first = 0; first + len <= levels.size(); ++first) {
            vars.push_back(slice_variance(levels, first, len, c));
        }
        for (const auto& f : levels) scale = std::max(scale, std::abs(f[c]));
        // Noise-free streams have zero median variance; keep a rounding-level cap.
        crit.cap[c] = std::max(factor * median_of(vars), 1e-20 * (1.0 + scale * scale));
    }
    return crit;
}

std::vector<EventWindow> assemble_events(const PhasorStream& stream, std::span<const std::size_t> candidates,
                                         std::span<const double> frame_scores, const DetectorSettings& settings) {
    std::vector<EventWindow> events;
    if (candidates.empty()) {
        return events;
    }
    const auto& samples = stream.samples;
    const auto min_sep_us = static_cast<Timestamp>(std::llround(settings.min_separation_s * 1e6));
    std::vector<std::pair<std::size_t, std::size_t>> clusters;
    clusters.emplace_back(candidates.front(), candidates.front());
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        const std::size_t idx = candidates[k];
        if (samples[idx].timestamp - samples[clusters.back().second].timestamp <= min_sep_us) {
            clusters.back().second = idx;
        } else {
            clusters.emplace_back(idx, idx);
        }
    }

    const auto crit = steady_criterion(stream, settings.steady_len, settings.steady_variance_factor);
    const auto levels = level_channels(samples);
    const auto len = static_cast<std::size_t>(settings.steady_len);
    const auto horizon = static_cast<std::size_t>(std::llround(settings.search_horizon_s * stream.nominal_rate));

    for (const auto& [first, last_raw] : clusters) {
        EventWindow ev;
        ev.stream_id = stream.feeder_id;
        ev.start_index = first;
        ev.end_index = std::min(std::max(last_raw, first + 1), samples.size() - 1);
        if (ev.end_index == ev.start_index) {
            // Single flagged frame at the very end of the stream.
            if (first == 0) continue;
            ev.start_index = first - 1;
        }
        ev.start = samples[ev.start_index].timestamp;
        ev.end = samples[ev.end_index].timestamp;
        for (std::size_t k = first; k <= last_raw; ++k) {
            ev.peak_score = std::max(ev.peak_score, frame_scores[k]);
        }

        // Pre-window: slice [stop - len, stop) with stop <= start_index, nearest first.
        std::optional<std::size_t> pre;
        for (std::size_t stop = ev.start_index; stop >= len && ev.start_index - stop <= horizon; --stop) {
            if (is_steady(levels, stop - len, crit)) {
                pre = stop - len;
                break;
            }
        }
        std::optional<std::size_t> post;
        for (std::size_t begin = ev.end_index + 1; begin + len <= samples.size() && begin - ev.end_index <= horizon;
             ++begin) {
            if (is_steady(levels, begin, crit)) {
                post = begin;
                break;
            }
        }
        if (pre && post) {
            ev.pre_window.assign(samples.begin() + static_cast<std::ptrdiff_t>(*pre),
                                 samples.begin() + static_cast<std::ptrdiff_t>(*pre + len));
            ev.post_window.assign(samples.begin() + static_cast<std::ptrdiff_t>(*post),
                                  samples.begin() + static_cast<std::ptrdiff_t>(*post + len));
        }
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<EventWindow> detect_events(const PhasorStream& stream, const GanModel& model,
                                       const DetectorSettings& settings) {
    if (!(settings.threshold_quantile > 0.0 && settings.threshold_quantile < 1.0)) {
        throw ConfigError("threshold quantile must lie in (0, 1)");
    }
    const auto& stats = model.normalization;
    const auto w = static_cast<std::size_t>(stats.window_size);
    if (stream.samples.size() < w + 1) {
        throw ContractError("stream shorter than one detector window");
    }
    const auto diffs = difference_channels(stream.samples);
    const double threshold = sorted_quantile(model.training_scores, settings.threshold_quantile);

    std::vector<double> frame_scores(stream.samples.size(), 0.0);
    std::vector<std::size_t> candidates;
    const std::size_t windows = diffs.size() - w;  // first in [1, diffs.size() - w]
    constexpr std::size_t kChunk = 2048;
    nn::Matrix batch;
    for (std::size_t base = 1; base <= windows; base += kChunk) {
        const std::size_t count = std::min(kChunk, windows - base + 1);
        batch.resize(static_cast<Eigen::Index>(count), stats.width());
        for (std::size_t r = 0; r < count; ++r) {
            const auto win = make_window(diffs, base + r, stats);
            for (int c = 0; c < stats.width(); ++c) {
                batch(static_cast<Eigen::Index>(r), c) = win.values[static_cast<std::size_t>(c)];
            }
        }
        const auto scores = anomaly_scores(model, batch);
        for (std::size_t r = 0; r < count; ++r) {
            const std::size_t centre = base + r + w / 2;
            frame_scores[centre] = scores[r];
            if (scores[r] > threshold) {
                candidates.push_back(centre);
            }
        }
    }
    return assemble_events(stream, candidates, frame_scores, settings);
}

std::vector<EventWindow> detect_events_baseline(const PhasorStream& stream, double z_threshold, int window,
                                                const DetectorSettings& settings) {
    if (window < 10) {
        throw ConfigError("baseline window must be at least 10 samples");
    }
    const auto& samples = stream.samples;
    const auto w = static_cast<std::size_t>(window);
    std::vector<double> frame_scores(samples.size(), 0.0);
    std::vector<std::size_t> candidates;
    if (samples.size() < w + 2) {
        return {};
    }
    // |V|, |I| and both absolute angles: a reactive step into a resistive source turns V and I
    // together and leaves theta_V - theta_I almost unchanged.
    std::array<std::vector<double>, 4> channel;
    for (auto& c : channel) c.assign(samples.size(), 0.0);
    for (std::size_t k = 1; k < samples.size(); ++k) {
        channel[0][k] = samples[k].v_mag - samples[k - 1].v_mag;
        channel[1][k] = samples[k].i_mag - samples[k - 1].i_mag;
        channel[2][k] = wrap_degrees(samples[k].v_ang - samples[k - 1].v_ang);
        channel[3][k] = wrap_degrees(samples[k].i_ang - samples[k - 1].i_ang);
    }
    std::vector<double> scratch(w);
    auto robust_z = [&](const std::vector<double>& d, std::size_t k) {
        std::copy(d.begin() + static_cast<std::ptrdiff_t>(k - w), d.begin() + static_cast<std::ptrdiff_t>(k),
                  scratch.begin());
        const double med = median_of(scratch);
        for (auto& x : scratch) x = std::abs(x - med);
        const double sigma = 1.4826 * median_of(scratch);
        const double dev = std::abs(d[k] - med);
        const double floor = 1e-12 * (1.0 + std::abs(med));
        return dev / std::max(sigma, floor);
    };
    for (std::size_t k = w + 1; k < samples.size(); ++k) {
        double z = 0.0;
        for (const auto& d : channel) z = std::max(z, robust_z(d, k));
        frame_scores[k] = z;
        if (z > z_threshold) {
            candidates.push_back(k);
        }
    }
    return assemble_events(stream, candidates, frame_scores, settings);
}

}  // namespace solarpmu
