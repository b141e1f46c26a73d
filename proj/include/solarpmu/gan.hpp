#ifndef SOLARPMU_GAN_HPP
#define SOLARPMU_GAN_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarpmu/nn.hpp"

namespace solarpmu {

/**
 * @brief Per-channel normalization fitted on a training corpus.
 *
 * A window holds `window_size` frames of `channels` values, frame-major
 * (frame 0 channel 0, frame 0 channel 1, ...).
 */
struct NormalizationStats {
    int window_size = 1;
    int channels = 1;
    std::vector<double> mean;    ///< one per channel
    std::vector<double> stddev;  ///< one per channel, > 0

    int width() const { return window_size * channels; }
    /// Stable hash of every field; tags windows normalized with these statistics.
    std::uint64_t fingerprint() const;

    static NormalizationStats identity(int window_size, int channels);

    friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// A normalized window, tagged with the fingerprint of the statistics used.
struct WindowTensor {
    std::vector<double> values;
    std::uint64_t stats_fingerprint = 0;
};

enum class GeneratorLoss {
    Minimax,        ///< descend log(1 - D(G(z))) exactly as in the value function
    NonSaturating,  ///< descend -log D(G(z)); same fixed point, stronger early gradients
};

struct GanConfig {
    int epochs = 200;
    double learning_rate = 1e-3;
    int batch_size = 64;
    std::uint64_t seed = 1;
    int noise_dim = 8;
    int hidden_width = 32;  ///< both networks use two hidden layers of this width (<= 64)
    GeneratorLoss generator_loss = GeneratorLoss::NonSaturating;
    /**
     * Fraction of each fake batch drawn from an isotropic Gaussian reference
     * N(0, reference_scale^2) instead of the generator. With a mixture weight
     * eps the discriminator optimum becomes p_data / (p_data + (1-eps) p_g + eps q),
     * which pushes D toward zero away from the data manifold. Zero disables it.
     */
    double reference_mix = 0.0;
    double reference_scale = 1.5;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(int epoch, const std::string& what)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

struct GanModel {
    nn::Mlp generator;      ///< z in R^noise_dim -> window
    nn::Mlp discriminator;  ///< window -> logit; D(x) = sigmoid(logit)
    int noise_dim = 0;
    NormalizationStats normalization;
    GanConfig config;
    std::vector<double> training_log;     ///< per-epoch mean of V(G, D)
    std::vector<double> training_scores;  ///< anomaly scores of the corpus under the final D, sorted

    /// D(x), strictly inside (0, 1) for finite logits.
    double discriminator_output(const WindowTensor& window) const;
};

/// Alternating Adam steps: ascent on V for D, descent for G. Deterministic in `config.seed`.
GanModel train_gan(std::span<const WindowTensor> corpus, const NormalizationStats& stats,
                   const GanConfig& config);

/// -log D(x). Throws ContractError for windows normalized with other statistics.
double anomaly_score(const GanModel& model, const WindowTensor& window);

/// Batched form of anomaly_score over rows of already-validated windows.
std::vector<double> anomaly_scores(const GanModel& model, const nn::Matrix& windows);

/// Batch estimate of V(G, D) = E_real[log D(x)] + E_fake[log(1 - D(x))].
double value_function(const nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake);

/**
 * Discriminator loss -V on the given real and fake batches. When `grad` is
 * non-empty it receives dLoss/dParams (overwritten, not accumulated).
 */
double discriminator_loss(const nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake,
                          std::span<double> grad);

/// Generator loss on noise batch `z`; gradient is with respect to the generator only.
double generator_loss(const nn::Mlp& generator, const nn::Mlp& discriminator, const nn::Matrix& z,
                      GeneratorLoss kind, std::span<double> grad);

/// Full-batch Adam on the discriminator with a frozen set of fake samples.
void fit_discriminator(nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake, int steps,
                       double learning_rate);

/// Quantile of a sorted sample by linear interpolation; q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace solarpmu

#endif  // SOLARPMU_GAN_HPP
