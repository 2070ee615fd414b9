#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "topoforge/rng.hpp"

namespace topoforge {

/// Fully connected layer widths, input first. Hidden layers use tanh, the
/// output layer a sigmoid, so generated designs always land in (0,1)^N.
struct Architecture {
    std::vector<int> layers;

    int input_dim() const { return layers.front(); }
    int output_dim() const { return layers.back(); }
    std::int64_t parameter_count() const;
    void validate() const;  // throws on fewer than 2 layers or a zero width
};

struct GeneratorParams {
    Architecture arch;
    std::vector<Eigen::MatrixXd> w;  // w[l] maps layer l -> l+1, shape (out, in)
    std::vector<Eigen::VectorXd> b;
    std::uint64_t init_seed = 0;
};

/// Per-layer scaled uniform init, U(-s, s) with s = sqrt(6/(fan_in+fan_out)),
/// zero biases. Deterministic given the seed.
GeneratorParams init_generator(const Architecture& arch, std::uint64_t seed);

/// Pure inference for one encoded setting.
Eigen::VectorXd forward(const GeneratorParams& params, const Eigen::VectorXd& input);

/// Column-per-sample batch of the same map.
Eigen::MatrixXd forward_batch(const GeneratorParams& params, const Eigen::MatrixXd& inputs);

struct TrainSample {
    Eigen::VectorXd input;   // encoded setting
    Eigen::VectorXd target;  // optimized design x*
    Eigen::VectorXd lambda;  // diagonal of the loss weight; empty means identity
};

/// Diagonal loss weights from the design sensitivity at the sample's
/// optimum: lambda_e = (|v_e| - min)/(max - min). A constant field makes the
/// formula divide by zero; those samples fall back to all-ones weights and
/// `degenerate` (when given) reports it so callers can warn.
Eigen::VectorXd sensitivity_weights(const Eigen::VectorXd& grad_f, bool* degenerate = nullptr);

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 1e-3;
    double lr_decay = 1.0;  // per-epoch multiplicative schedule
    int batch_size = 64;
    int full_batch_below = 256;  // datasets smaller than this train full-batch
    int epochs = 500;
    double loss_tol = 0.0;  // stop once the epoch loss reaches this
    std::uint64_t seed = 0;
    void validate() const;
};

struct TrainResult {
    GeneratorParams params;  // best epoch seen, never worse than the start
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_trace;  // full-dataset loss after each epoch
};

/// Sum over the dataset of (g(s_i) - x_i)^T Lambda_i (g(s_i) - x_i).
double weighted_loss(const GeneratorParams& params, const std::vector<TrainSample>& data);

/// Reverse-mode gradients of the same loss over the whole dataset.
struct LossGradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    double loss = 0.0;
};
LossGradients loss_gradients(const GeneratorParams& params,
                             const std::vector<TrainSample>& data);

TrainResult train(GeneratorParams theta0, const std::vector<TrainSample>& data,
                  const TrainConfig& config);

}  // namespace topoforge
