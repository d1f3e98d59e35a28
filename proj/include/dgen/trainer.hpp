#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgen/denoiser.hpp"
#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"

namespace dgen {

/// Reserved RNG stream ids. Training steps use their own step index as the
/// stream, so reserved ids keep the top bits set to stay disjoint.
inline constexpr std::uint64_t kInitStream = 0xD1CE00000000001AULL;
inline constexpr std::uint64_t kEvalStream = 0xD1CE00000000002BULL;
inline constexpr std::uint64_t kDataStream = 0xD1CE00000000003CULL;
inline constexpr std::uint64_t kPinnedNoiseStream = 0xD1CE00000000004DULL;

struct DataPoint {
    Tensor x;
    std::optional<int> label;
};

enum class Optimizer { Sgd, AdaptiveMoments };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
    std::uint64_t steps = 1000;
    int batch_size = 32;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::AdaptiveMoments;
    Weighting weighting = Weighting::Unweighted;
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 100;
    int eval_n_mc = 4;  // Monte-Carlo repeats per held-out item in eval rows

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Row at step k describes the parameters after k optimizer updates: the
/// batch loss and gradient norm computed at those parameters on step k's
/// batch, and the held-out evaluation metric.
struct TrainLogRow {
    std::uint64_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double eval_metric = 0.0;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    std::string to_csv() const;  // `step,loss,grad_norm,eval_metric`
};

/// Draws one training batch: item index uniform over the dataset, t uniform
/// over {1..T}, fresh standard-normal z. Draw order per item is fixed:
/// index, then t, then z.
std::vector<NoiseBatchItem> sample_batch(const std::vector<DataPoint>& dataset,
                                         const Schedule& s, int batch_size,
                                         bool conditioned, Rng& rng);

/// Mean unweighted noise-prediction error over the held-out set, n_mc
/// Monte-Carlo draws of (t, z) per item. Deterministic given the rng.
double evaluate(const DenoiserParams& p, const std::vector<DataPoint>& held_out,
                const Schedule& s, int n_mc, Rng& rng);

/// Trainable tensors in fixed order: weights, biases, learned time table
/// (when present), condition table (when present).
std::vector<Tensor*> trainable_tensors(DenoiserParams& p);
std::vector<const Tensor*> gradient_tensors(const GradientBundle& g, const DenoiserParams& p);

/// One optimizer shared by both training loops. SGD is stateless;
/// adaptive-moments keeps bias-corrected first/second moment accumulators
/// (decay 0.9 / 0.999, epsilon 1e-8).
class OptimizerState {
  public:
    OptimizerState(Optimizer kind, double learning_rate, const std::vector<Tensor*>& params);
    void apply(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  private:
    Optimizer kind_;
    double lr_;
    std::uint64_t updates_ = 0;
    std::vector<Tensor> m_, v_;
};

/// Divergence guard: throws numeric_error naming the step when the loss is
/// non-finite or above 1e6.
void ensure_loss_sane(double loss, std::uint64_t step);

/// Called at every logged step with the parameters at that step; the CLI
/// uses it to persist checkpoints.
using CheckpointSink = std::function<void(std::uint64_t step, const DenoiserParams&)>;

/// Deterministic checkpoint naming contract.
std::string checkpoint_filename(std::uint64_t step);

struct TrainResult {
    DenoiserParams params;
    TrainLog log;
};

/// Runs (steps - start_step) optimizer updates. Step k draws its batch from
/// the dedicated stream Rng(cfg.seed, k), so runs are reproducible from the
/// seed alone and a resumed run consumes the same per-step streams an
/// uninterrupted run would. Log rows appear at multiples of eval_every and
/// at the final step; the sink fires at positive logged steps. Warm-start
/// parameters (resume) replace fresh initialization; optimizer state always
/// starts fresh. Held-out set empty means evaluation runs on the training
/// set. Aborts with numeric_error if the loss leaves [0, 1e6] or turns
/// non-finite.
TrainResult train(const std::vector<DataPoint>& dataset,
                  const std::vector<DataPoint>& held_out, const Schedule& s,
                  const TrainConfig& cfg, const DenoiserInit& net_cfg,
                  std::optional<DenoiserParams> warm_start = std::nullopt,
                  std::uint64_t start_step = 0, const CheckpointSink& sink = {});

}  // namespace dgen
