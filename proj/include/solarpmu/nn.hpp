#ifndef SOLARPMU_NN_HPP
#define SOLARPMU_NN_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace solarpmu::nn {

/// One sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * @brief Fully-connected network with tanh hidden layers and a linear output.
 *
 * Parameters live in one flat vector (per layer: weights out x in, row-major,
 * then biases) so optimizers and finite-difference checks can treat them
 * uniformly.
 */
class Mlp {
public:
    struct Cache {
        std::vector<Matrix> activations;  ///< [0] is the input, back() the output
    };

    Mlp() = default;
    /// Xavier-uniform weights, zero biases.
    Mlp(std::vector<int> layer_sizes, std::mt19937_64& rng);
    /// Restores a network from stored parameters; throws ContractError on a size mismatch.
    Mlp(std::vector<int> layer_sizes, std::vector<double> parameters);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    Matrix forward(const Matrix& input, Cache* cache = nullptr) const;

    /**
     * Back-propagates dL/d(output). Parameter gradients are ADDED into
     * `grad_params` (skipped when empty); returns dL/d(input).
     */
    Matrix backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad_params) const;

private:
    std::vector<int> sizes_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;  ///< start of each layer's weights
};

std::size_t parameter_count(const std::vector<int>& layer_sizes);

/// Adam with bias correction.
class Adam {
public:
    Adam(std::size_t n, double learning_rate, double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8);

    /// Descends along `grad`.
    void step(std::span<double> params, std::span<const double> grad);

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::int64_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

/// log(1 + exp(x)) without overflow.
double softplus(double x);
double sigmoid(double x);

}  // namespace solarpmu::nn

#endif  // SOLARPMU_NN_HPP
