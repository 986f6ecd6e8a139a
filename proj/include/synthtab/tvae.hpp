#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"
#include "synthtab/nn.hpp"
#include "synthtab/transform.hpp"

namespace synthtab {

struct TrainConfig {
    size_t epochs = 200;
    size_t batch_size = 500;
    std::vector<size_t> encoder_widths{128, 128};
    std::vector<size_t> decoder_widths{128, 128};
    size_t embedding_dim = 128;
    double l2_scale = 1e-5;
    double loss_factor = 2.0;
    double learning_rate = 1e-3;
    uint64_t seed = 0;
    size_t gmm_components = 10;

    void validate() const;
};

struct LossTrace {
    std::vector<double> total;
    std::vector<double> reconstruction;
    std::vector<double> kl;
};

/// One reconstruction target inside the model-space row: either a continuous
/// column (alpha slot + mode logits) or a categorical column (category logits).
struct SlotGroup {
    bool continuous = false;
    size_t alpha_slot = 0;   // continuous only
    size_t scale_index = 0;  // continuous only: index into log_scales
    size_t logit_offset = 0; // modes or categories
    size_t logit_count = 0;
};

struct TvaeModel {
    ColumnTransformer transformer;
    std::vector<DenseLayer> encoder; // trunk, ReLU
    DenseLayer mu_head;              // trunk width -> embedding
    DenseLayer logvar_head;
    std::vector<DenseLayer> decoder; // trunk ReLU, then Identity layer back to model width
    std::vector<double> log_scales;  // per continuous column, clamped to [-4, 4]
    TrainConfig config;

    size_t model_width() const { return transformer.width(); }
    std::vector<SlotGroup> slot_groups() const;
};

struct ElboTerms {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

// kl    = mean over batch of -0.5 * sum over dims of (1 + logvar - mu^2 - exp(logvar))
// rec   = mean over batch of [sum over continuous slots of ((x - xhat)^2/(2 sigma^2) + log sigma)
//         + sum over mode/category groups of cross-entropy]
// total = loss_factor * rec + kl
ElboTerms elbo_loss(const Matrix& batch, const Matrix& decoder_raw, const Matrix& mu,
                    const Matrix& logvar, std::span<const double> log_scales,
                    std::span<const SlotGroup> groups, double loss_factor);

// Freshly initialized model (transformer fitted, weights at init).
TvaeModel init_model(const DataTable& table, const TrainConfig& config);

std::pair<TvaeModel, LossTrace> train_tvae(const DataTable& table, const TrainConfig& config);

DataTable sample(const TvaeModel& model, size_t n, uint64_t seed);

// Canonical flat views over all trainable tensors; order matches
// loss_and_gradients() output.
std::vector<std::span<double>> model_params(TvaeModel& model);
std::vector<std::span<const double>> model_params(const TvaeModel& model);

struct TvaeStep {
    ElboTerms terms;
    std::vector<std::vector<double>> grads;
};

// Single forward/backward pass with the provided latent noise (batch x
// embedding). Deterministic given the noise, so finite differences can
// re-evaluate the loss at perturbed parameters.
TvaeStep loss_and_gradients(const TvaeModel& model, const Matrix& batch, const Matrix& noise);
double loss_only(const TvaeModel& model, const Matrix& batch, const Matrix& noise);

// Smallest |pre-activation| over the ReLU layers for this batch/noise.
// Finite-difference checks resample when this is inside the probe radius:
// the loss is not differentiable across a kink.
double min_relu_preactivation_gap(const TvaeModel& model, const Matrix& batch,
                                  const Matrix& noise);

void save_model(const TvaeModel& model, const std::string& path);
TvaeModel load_model(const std::string& path);

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

} // namespace synthtab
