#include "solarpmu/nn.hpp"

#include <cmath>

#include "solarpmu/errors.hpp"

namespace solarpmu::nn {

namespace {

using ConstWeights = Eigen::Map<const Matrix>;
using ConstBias = Eigen::Map<const Eigen::RowVectorXd>;
using Weights = Eigen::Map<Matrix>;
using Bias = Eigen::Map<Eigen::RowVectorXd>;

std::vector<std::size_t> layer_offsets(const std::vector<int>& sizes) {
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        offsets.push_back(off);
        off += static_cast<std::size_t>(sizes[l + 1]) * (sizes[l] + 1);
    }
    return offsets;
}

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) {
        throw ContractError("network needs at least an input and an output layer");
    }
    for (int s : sizes) {
        if (s <= 0) {
            throw ContractError("layer sizes must be positive");
        }
    }
}

}  // namespace

std::size_t parameter_count(const std::vector<int>& layer_sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    }
    return n;
}

Mlp::Mlp(std::vector<int> layer_sizes, std::mt19937_64& rng)
    : sizes_(std::move(layer_sizes)) {
    check_sizes(sizes_);
    offsets_ = layer_offsets(sizes_);
    params_.assign(parameter_count(sizes_), 0.0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        const double limit = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (int k = 0; k < in * out; ++k) {
            params_[offsets_[l] + k] = dist(rng);
        }
    }
}

Mlp::Mlp(std::vector<int> layer_sizes, std::vector<double> parameters)
    : sizes_(std::move(layer_sizes)), params_(std::move(parameters)) {
    check_sizes(sizes_);
    if (params_.size() != parameter_count(sizes_)) {
        throw ContractError("parameter vector does not match layer sizes");
    }
    offsets_ = layer_offsets(sizes_);
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
    if (input.cols() != sizes_.front()) {
        throw ContractError("input width does not match network");
    }
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    Matrix a = input;
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        ConstWeights w(params_.data() + offsets_[l], out, in);
        ConstBias b(params_.data() + offsets_[l] + static_cast<std::size_t>(out) * in, out);
        Matrix z = a * w.transpose();
        z.rowwise() += b;
        if (l + 1 < layers) {
            z = z.array().tanh().matrix();
        }
        a = std::move(z);
        if (cache) {
            cache->activations.push_back(a);
        }
    }
    return a;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad_params) const {
    const std::size_t layers = sizes_.size() - 1;
    if (cache.activations.size() != layers + 1) {
        throw ContractError("backward called with a cache from a different network");
    }
    const bool accumulate = !grad_params.empty();
    if (accumulate && grad_params.size() != params_.size()) {
        throw ContractError("gradient buffer does not match parameter count");
    }
    Matrix delta = grad_output;
    for (std::size_t l = layers; l-- > 0;) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        if (l + 1 < layers) {
            const Matrix& act = cache.activations[l + 1];
            delta = (delta.array() * (1.0 - act.array().square())).matrix();
        }
        const Matrix& prev = cache.activations[l];
        if (accumulate) {
            Weights gw(grad_params.data() + offsets_[l], out, in);
            Bias gb(grad_params.data() + offsets_[l] + static_cast<std::size_t>(out) * in, out);
            gw.noalias() += delta.transpose() * prev;
            gb += delta.colwise().sum();
        }
        ConstWeights w(params_.data() + offsets_[l], out, in);
        delta = delta * w;
    }
    return delta;
}

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw ContractError("optimizer state does not match parameter count");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
        params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace solarpmu::nn
