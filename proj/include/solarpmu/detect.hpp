#ifndef SOLARPMU_DETECT_HPP
#define SOLARPMU_DETECT_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "solarpmu/gan.hpp"
#include "solarpmu/phasor.hpp"

namespace solarpmu {

/// v_mag, i_mag and theta_V - theta_I.
inline constexpr int kDetectorChannels = 3;

using FrameFeatures = std::array<double, kDetectorChannels>;

/**
 * @brief A contiguous slice of a stream flagged as an event.
 *
 * `pre_window` / `post_window` hold the steady-state samples right before the
 * first and right after the last flagged frame. Both are empty when no steady
 * flank was found, in which case the event is excluded from impedance analysis.
 */
struct EventWindow {
    std::string stream_id;
    Timestamp start = 0;
    Timestamp end = 0;
    double peak_score = 0.0;
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    std::vector<PhasorSample> pre_window;
    std::vector<PhasorSample> post_window;

    bool has_steady_state() const { return !pre_window.empty() && !post_window.empty(); }
};

struct DetectorSettings {
    int window_size = 60;             ///< frames per scored window (0.5 s at 120 Hz)
    double threshold_quantile = 0.995;
    double min_separation_s = 1.0;    ///< candidates closer than this merge
    int steady_len = 60;              ///< samples per pre/post steady window
    double steady_variance_factor = 4.0;
    double search_horizon_s = 10.0;   ///< how far to look for a steady flank
    int corpus_stride = 1;            ///< frames between consecutive training windows
};

/// Level channels (v_mag, i_mag, unwrapped theta_V - theta_I) per sample.
std::vector<FrameFeatures> level_channels(std::span<const PhasorSample> samples);

/**
 * First differences of the level channels; entry k is sample k minus sample k-1
 * (entry 0 is zero). Windows of differences ignore slow irradiance drift while
 * steps show up as isolated spikes.
 */
std::vector<FrameFeatures> difference_channels(std::span<const PhasorSample> samples);

/// Per-channel mean/stddev of the difference channels over a training stream.
NormalizationStats fit_normalization(const PhasorStream& stream, int window_size);

/// Window of `stats.window_size` difference frames starting at `first` (>= 1).
WindowTensor make_window(std::span<const FrameFeatures> differences, std::size_t first,
                         const NormalizationStats& stats);

/// Every `stride`-th window of the stream, normalized with `stats`.
std::vector<WindowTensor> build_corpus(const PhasorStream& stream, const NormalizationStats& stats, int stride);

/**
 * GAN settings for event detection: half of every fake batch comes from a broad
 * Gaussian reference so that D falls off away from the normal-operation manifold.
 */
GanConfig detector_gan_config();

/// Fits normalization on `training`, builds the corpus and trains the GAN.
GanModel train_detector(const PhasorStream& training, const DetectorSettings& settings, GanConfig config);

/// Per-channel variance cap: factor x the median rolling variance over `steady_len` samples.
struct SteadyCriterion {
    std::array<double, kDetectorChannels> cap{};
    int steady_len = 60;
};

SteadyCriterion steady_criterion(const PhasorStream& stream, int steady_len, double factor);

/**
 * Merges candidate frame indices (ascending) into events and attaches the
 * nearest steady flanks. Shared by both detectors.
 */
std::vector<EventWindow> assemble_events(const PhasorStream& stream, std::span<const std::size_t> candidates,
                                         std::span<const double> frame_scores, const DetectorSettings& settings);

/**
 * @brief GAN detector: scores every window (assigned to its centre frame) with
 * -log D(x) and flags frames above the `threshold_quantile` of the training scores.
 */
std::vector<EventWindow> detect_events(const PhasorStream& stream, const GanModel& model,
                                       const DetectorSettings& settings = {});

/**
 * @brief Training-free cross-check: robust rolling z-score of the frame-to-frame
 * changes in |V|, |I|, angle(V) and angle(I) against a trailing window (median / 1.4826 MAD).
 */
std::vector<EventWindow> detect_events_baseline(const PhasorStream& stream, double z_threshold = 6.0,
                                                int window = 240, const DetectorSettings& settings = {});

}  // namespace solarpmu

#endif  // SOLARPMU_DETECT_HPP
