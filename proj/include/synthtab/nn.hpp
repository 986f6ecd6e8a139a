#pragma once

#include <functional>
#include <span>
#include <vector>

#include "synthtab/matrix.hpp"
#include "synthtab/rng.hpp"

namespace synthtab {

enum class Activation { ReLU, Tanh, Identity };

struct DenseLayer {
    Matrix weights;           // out x in
    std::vector<double> bias; // out
    Activation activation = Activation::Identity;

    size_t in_dim() const { return weights.cols; }
    size_t out_dim() const { return weights.rows; }
};

// Glorot-uniform init: entries in +-sqrt(6/(fan_in+fan_out)), bias zero.
DenseLayer make_layer(size_t in, size_t out, Activation act, Rng& rng);

struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;  // pre-activation per layer, batch x out
    std::vector<Matrix> post; // activated output per layer

    const Matrix& layer_input(size_t i) const { return i == 0 ? input : post[i - 1]; }
};

// Runs the stack on a batch (rows are samples). The cache, when requested,
// holds what backward() needs.
Matrix forward(std::span<const DenseLayer> layers, const Matrix& input,
               ForwardCache* cache = nullptr);

struct LayerGrads {
    Matrix weights;
    std::vector<double> bias;
};

struct BackwardResult {
    std::vector<LayerGrads> layers;
    Matrix input; // gradient w.r.t. the batch input
};

BackwardResult backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                        const Matrix& output_grad);

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    long long step = 0;
    std::vector<std::vector<double>> m; // first moment, mirrors parameter shapes
    std::vector<std::vector<double>> v; // second moment
};

void adam_init(AdamState& state, const std::vector<std::span<double>>& params);

// Bias-corrected Adam. weight_decay is added to the gradient before the
// moment updates (coupled L2, matching torch-style optimizers).
// Throws NumericError on non-finite gradients.
void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state);

// Central finite differences against precomputed analytic gradients.
// Returns max over entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// `loss` must be deterministic (freeze any noise before calling).
double gradient_check(const std::function<double()>& loss,
                      const std::vector<std::span<double>>& params,
                      const std::vector<std::vector<double>>& analytic_grads, double epsilon);

} // namespace synthtab
