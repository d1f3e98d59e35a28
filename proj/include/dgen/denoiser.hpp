#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgen/gaussian.hpp"
#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"

namespace dgen {

/// How the step index t is presented to the network.
enum class TimeFeatureMode { Sinusoidal, Learned };

std::string to_string(TimeFeatureMode m);
TimeFeatureMode time_mode_from_string(const std::string& s);

/// Fully-connected network predicting one data-shaped vector from
/// (x, t [, label]). Input layout: [x | time features | label embedding].
/// Hidden layers use tanh; the output layer is linear.
struct DenoiserParams {
    std::vector<std::size_t> layer_sizes;  // input width, hidden..., output width
    std::vector<Tensor> weights;           // weights[l]: {layer_sizes[l+1], layer_sizes[l]}, row-major
    std::vector<Tensor> biases;            // biases[l]: {layer_sizes[l+1]}
    std::size_t data_dim = 0;
    std::size_t time_dim = 0;
    TimeFeatureMode time_mode = TimeFeatureMode::Sinusoidal;
    int max_step = 0;       // largest valid t; learned tables hold rows for t = 0..max_step
    Tensor time_table;      // Learned mode: {max_step + 1, time_dim}; empty otherwise
    std::size_t cond_dim = 0;  // 0 disables conditioning
    Tensor cond_table;      // {vocab_size, cond_dim} when conditioning enabled

    std::size_t cond_vocab() const { return cond_dim == 0 ? 0 : cond_table.shape[0]; }
    std::size_t n_layers() const { return weights.size(); }
    /// Throws std::invalid_argument if dimensions do not chain or a value is
    /// non-finite.
    void validate() const;
};

struct DenoiserInit {
    std::size_t data_dim = 1;
    std::vector<std::size_t> hidden_sizes = {64, 64, 64};
    std::size_t time_dim = 8;  // even when sinusoidal
    TimeFeatureMode time_mode = TimeFeatureMode::Sinusoidal;
    int max_step = 1000;
    std::size_t cond_vocab = 0;  // > 0 enables conditioning
    std::size_t cond_dim = 0;
};

/// Symmetric-uniform initialization scaled by fan-in: each weight row of
/// width k draws from U(-1/sqrt(k), 1/sqrt(k)); biases start at zero;
/// embedding-table rows of width d draw from U(-1/sqrt(d), 1/sqrt(d)).
/// Draw order (fixed for reproducibility): weights layer by layer in
/// row-major order, then the learned time table, then the condition table.
DenoiserParams init_denoiser(const DenoiserInit& cfg, Rng& rng);

/// Features presented for step t (t in [0, max_step]).
/// Sinusoidal: pair k of d/2 encodes (sin, cos) of t / 10000^(2k/d).
/// Learned: row t of the table.
Tensor time_features(const DenoiserParams& p, int t);

/// Network evaluation at (x, t [, cond]); output has x's shape. The noise
/// predictor reads the output as an estimate of the injected noise; the
/// restoration model in the degradation framework reads it as an estimate of
/// the clean signal. Accepts t = 0 (used only by restoration).
Tensor net_forward(const DenoiserParams& p, const Tensor& x, int t,
                   std::optional<int> cond);

/// z_theta(x_t, t [, cond]): requires 1 <= t <= max_step.
Tensor predict_noise(const DenoiserParams& p, const Tensor& x_t, int t,
                     std::optional<int> cond = std::nullopt);

/// Reverse-transition mean implied by the network's noise estimate:
/// (x_t - beta_t / sqrt(1-abar_t) * z_theta) / sqrt(alpha_t).
Tensor reverse_mean(const DenoiserParams& p, const Tensor& x_t, int t,
                    const Schedule& s, std::optional<int> cond = std::nullopt);

/// Adapts fixed parameters to the generic NoisePredictor interface
/// (parameters are copied into the closure).
NoisePredictor as_predictor(const DenoiserParams& p);

/// Gradients shaped exactly like the parameters they differentiate.
struct GradientBundle {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    Tensor time_table;  // zero-sized when time features are fixed
    Tensor cond_table;  // zero-sized when conditioning disabled
    double loss_value = 0.0;

    static GradientBundle zeros_like(const DenoiserParams& p);
    double squared_norm() const;
};

enum class Weighting { Weighted, Unweighted };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

/// One training example: the clean datum, the step index, the exact noise
/// that produced x_t from it, and an optional condition label.
struct NoiseBatchItem {
    Tensor x0;
    int t = 1;
    Tensor z;
    std::optional<int> cond;
};

/// Per-step coefficient of the likelihood-derived objective:
/// beta_t^2 / (2 sigma_t^2 alpha_t (1 - abar_t)). Throws std::domain_error
/// when sigma_t^2 = 0 (posterior-variance schedules at t = 1).
double step_loss_weight(const Schedule& s, int t);

/// loss = mean over the batch of w_t * ||z - z_theta(sqrt(abar_t) x0 +
/// sqrt(1-abar_t) z, t)||^2 with w_t as above (Weighted) or 1 (Unweighted).
/// Gradients are exact analytic derivatives with respect to every trainable
/// tensor (weights, biases, learned time table, condition table).
GradientBundle loss_and_grad(const DenoiserParams& p,
                             const std::vector<NoiseBatchItem>& batch,
                             const Schedule& s, Weighting weighting);

/// Mean absolute-error objective for restoration training:
/// loss = mean over batch of ||net(x_in, t) - target||_1, with the
/// subgradient of |r| at r = 0 defined as 0.
struct RestoreBatchItem {
    Tensor x_in;    // degraded input
    int t = 0;      // severity presented to the network
    Tensor target;  // clean signal
};

GradientBundle l1_loss_and_grad(const DenoiserParams& p,
                                const std::vector<RestoreBatchItem>& batch);

/// Self-describing little-endian binary checkpoint: layer sizes, flattened
/// float64 parameters, the schedule fingerprint the model was trained
/// against, and the training-step counter. Written atomically.
struct Checkpoint {
    DenoiserParams params;
    std::uint64_t schedule_fingerprint = 0;
    std::uint64_t step = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
/// Throws artifact_error on unreadable, malformed, or non-finite content.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dgen
