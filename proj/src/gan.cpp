#include "solarpmu/gan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "solarpmu/errors.hpp"

namespace solarpmu {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
    for (int k = 0; k < 8; ++k) {
        h ^= (word >> (8 * k)) & 0xFFU;
        h *= kFnvPrime;
    }
}

nn::Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    nn::Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = normal(rng);
        }
    }
    return m;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void check_window(const GanModel& model, const WindowTensor& window) {
    if (window.stats_fingerprint != model.normalization.fingerprint()) {
        throw ContractError("window was not normalized with the model's statistics");
    }
    if (static_cast<int>(window.values.size()) != model.normalization.width()) {
        throw ContractError("window length does not match the model");
    }
}

}  // namespace

std::uint64_t NormalizationStats::fingerprint() const {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, static_cast<std::uint64_t>(window_size));
    fnv_mix(h, static_cast<std::uint64_t>(channels));
    for (double m : mean) fnv_mix(h, std::bit_cast<std::uint64_t>(m));
    for (double s : stddev) fnv_mix(h, std::bit_cast<std::uint64_t>(s));
    return h;
}

NormalizationStats NormalizationStats::identity(int window_size, int channels) {
    NormalizationStats s;
    s.window_size = window_size;
    s.channels = channels;
    s.mean.assign(static_cast<std::size_t>(channels), 0.0);
    s.stddev.assign(static_cast<std::size_t>(channels), 1.0);
    return s;
}

double GanModel::discriminator_output(const WindowTensor& window) const {
    check_window(*this, window);
    nn::Matrix x = Eigen::Map<const nn::Matrix>(window.values.data(), 1, normalization.width());
    return nn::sigmoid(discriminator.forward(x)(0, 0));
}

double value_function(const nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake) {
    const nn::Matrix lr = discriminator.forward(real);
    const nn::Matrix lf = discriminator.forward(fake);
    double v = 0.0;
    for (Eigen::Index r = 0; r < lr.rows(); ++r) v -= nn::softplus(-lr(r, 0));
    double w = 0.0;
    for (Eigen::Index r = 0; r < lf.rows(); ++r) w -= nn::softplus(lf(r, 0));
    return v / static_cast<double>(lr.rows()) + w / static_cast<double>(lf.rows());
}

double discriminator_loss(const nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake,
                          std::span<double> grad) {
    nn::Mlp::Cache cr;
    nn::Mlp::Cache cf;
    const nn::Matrix lr = discriminator.forward(real, &cr);
    const nn::Matrix lf = discriminator.forward(fake, &cf);
    const double nr = static_cast<double>(lr.rows());
    const double nf = static_cast<double>(lf.rows());
    double loss = 0.0;
    nn::Matrix gr(lr.rows(), 1);
    nn::Matrix gf(lf.rows(), 1);
    for (Eigen::Index r = 0; r < lr.rows(); ++r) {
        loss += nn::softplus(-lr(r, 0)) / nr;
        gr(r, 0) = (nn::sigmoid(lr(r, 0)) - 1.0) / nr;
    }
    for (Eigen::Index r = 0; r < lf.rows(); ++r) {
        loss += nn::softplus(lf(r, 0)) / nf;
        gf(r, 0) = nn::sigmoid(lf(r, 0)) / nf;
    }
    if (!grad.empty()) {
        std::fill(grad.begin(), grad.end(), 0.0);
        discriminator.backward(cr, gr, grad);
        discriminator.backward(cf, gf, grad);
    }
    return loss;
}

double generator_loss(const nn::Mlp& generator, const nn::Mlp& discriminator, const nn::Matrix& z,
                      GeneratorLoss kind, std::span<double> grad) {
    nn::Mlp::Cache cg;
    nn::Mlp::Cache cd;
    const nn::Matrix x = generator.forward(z, &cg);
    const nn::Matrix logits = discriminator.forward(x, &cd);
    const double n = static_cast<double>(logits.rows());
    double loss = 0.0;
    nn::Matrix gl(logits.rows(), 1);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double l = logits(r, 0);
        if (kind == GeneratorLoss::NonSaturating) {
            loss += nn::softplus(-l) / n;
            gl(r, 0) = (nn::sigmoid(l) - 1.0) / n;
        } else {
            loss -= nn::softplus(l) / n;
            gl(r, 0) = -nn::sigmoid(l) / n;
        }
    }
    if (!grad.empty()) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const nn::Matrix gx = discriminator.backward(cd, gl, {});
        generator.backward(cg, gx, grad);
    }
    return loss;
}

void fit_discriminator(nn::Mlp& discriminator, const nn::Matrix& real, const nn::Matrix& fake, int steps,
                       double learning_rate) {
    nn::Adam opt(discriminator.parameters().size(), learning_rate, 0.9, 0.999);
    std::vector<double> grad(discriminator.parameters().size());
    for (int s = 0; s < steps; ++s) {
        discriminator_loss(discriminator, real, fake, grad);
        opt.step(discriminator.parameters(), grad);
    }
}

GanModel train_gan(std::span<const WindowTensor> corpus, const NormalizationStats& stats,
                   const GanConfig& config) {
    if (config.epochs <= 0 || config.batch_size <= 0 || !(config.learning_rate > 0.0) ||
        config.noise_dim <= 0 || config.hidden_width <= 0 || config.hidden_width > 64) {
        throw ConfigError("GAN configuration values must be positive (hidden width <= 64)");
    }
    if (config.reference_mix < 0.0 || config.reference_mix >= 1.0 || !(config.reference_scale > 0.0)) {
        throw ConfigError("reference_mix must lie in [0, 1) and reference_scale be positive");
    }
    if (corpus.size() < 10 * static_cast<std::size_t>(config.batch_size)) {
        throw ConfigError("training corpus must hold at least 10 batches");
    }
    const int width = stats.width();
    const auto tag = stats.fingerprint();
    nn::Matrix data(static_cast<Eigen::Index>(corpus.size()), width);
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (corpus[r].stats_fingerprint != tag || static_cast<int>(corpus[r].values.size()) != width) {
            throw ContractError("corpus window " + std::to_string(r) + " does not match the statistics");
        }
        for (int c = 0; c < width; ++c) {
            data(static_cast<Eigen::Index>(r), c) = corpus[r].values[static_cast<std::size_t>(c)];
        }
    }

    std::mt19937_64 rng(config.seed);
    GanModel model;
    model.noise_dim = config.noise_dim;
    model.normalization = stats;
    model.config = config;
    const int h = config.hidden_width;
    model.generator = nn::Mlp({config.noise_dim, h, h, width}, rng);
    model.discriminator = nn::Mlp({width, h, h, 1}, rng);

    nn::Adam opt_d(model.discriminator.parameters().size(), config.learning_rate);
    nn::Adam opt_g(model.generator.parameters().size(), config.learning_rate);
    std::vector<double> grad_d(model.discriminator.parameters().size());
    std::vector<double> grad_g(model.generator.parameters().size());

    const int batch = config.batch_size;
    const auto batches = static_cast<int>(corpus.size()) / batch;
    const int reference_rows = static_cast<int>(std::lround(config.reference_mix * batch));
    std::vector<Eigen::Index> order(corpus.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    nn::Matrix real(batch, width);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double v_sum = 0.0;
        for (int b = 0; b < batches; ++b) {
            for (int r = 0; r < batch; ++r) {
                real.row(r) = data.row(order[static_cast<std::size_t>(b * batch + r)]);
            }
            nn::Matrix fake = model.generator.forward(gaussian_matrix(rng, batch, config.noise_dim, 1.0));
            if (reference_rows > 0) {
                fake.topRows(reference_rows) = gaussian_matrix(rng, reference_rows, width, config.reference_scale);
            }
            const double loss_d = discriminator_loss(model.discriminator, real, fake, grad_d);
            if (!std::isfinite(loss_d) || !all_finite(grad_d)) {
                throw TrainingError(epoch, "discriminator loss is not finite");
            }
            opt_d.step(model.discriminator.parameters(), grad_d);
            v_sum -= loss_d;

            const nn::Matrix z = gaussian_matrix(rng, batch, config.noise_dim, 1.0);
            const double loss_g = generator_loss(model.generator, model.discriminator, z,
                                                 config.generator_loss, grad_g);
            if (!std::isfinite(loss_g) || !all_finite(grad_g)) {
                throw TrainingError(epoch, "generator loss is not finite");
            }
            opt_g.step(model.generator.parameters(), grad_g);
        }
        if (!all_finite(model.discriminator.parameters()) || !all_finite(model.generator.parameters())) {
            throw TrainingError(epoch, "parameters diverged");
        }
        model.training_log.push_back(v_sum / batches);
    }

    model.training_scores = anomaly_scores(model, data);
    std::sort(model.training_scores.begin(), model.training_scores.end());
    return model;
}

double anomaly_score(const GanModel& model, const WindowTensor& window) {
    check_window(model, window);
    nn::Matrix x = Eigen::Map<const nn::Matrix>(window.values.data(), 1, model.normalization.width());
    return nn::softplus(-model.discriminator.forward(x)(0, 0));
}

std::vector<double> anomaly_scores(const GanModel& model, const nn::Matrix& windows) {
    const nn::Matrix logits = model.discriminator.forward(windows);
    std::vector<double> scores(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        scores[static_cast<std::size_t>(r)] = nn::softplus(-logits(r, 0));
    }
    return scores;
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw ContractError("quantile of an empty sample");
    }
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace solarpmu
