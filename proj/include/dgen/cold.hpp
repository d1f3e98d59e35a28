#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgen/denoiser.hpp"
#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"
#include "dgen/trainer.hpp"

namespace dgen {

/// Deterministic corruption operators of increasing severity t.
/// FixedNoise interpolates toward one pinned noise tensor along the noising
/// schedule (severity t reproduces the closed-form noising marginal with
/// frozen noise, bit for bit). Blur convolves repeatedly with a
/// mass-conserving discrete Gaussian whose cumulative width grows linearly
/// in t.
enum class DegradationKind { FixedNoise, Blur };

std::string to_string(DegradationKind k);
DegradationKind degradation_kind_from_string(const std::string& s);

struct DegradationOp {
    DegradationKind kind = DegradationKind::FixedNoise;
    std::optional<Schedule> schedule;  // FixedNoise only
    Tensor pinned_z;                   // FixedNoise only
    int blur_severity = 0;             // Blur only
    double blur_unit_width = 0.0;      // Blur only: per-unit-severity width

    int max_severity() const;
};

DegradationOp make_fixed_noise_op(Schedule s, Tensor pinned_z);
DegradationOp make_blur_op(int max_severity, double unit_width);

/// D(x, t): deterministic given the operator; D(x, 0) returns x unchanged.
Tensor degrade(const DegradationOp& op, const Tensor& x, int t);

/// Anything that estimates the clean signal from (x_t, t).
using Restorer = std::function<Tensor(const Tensor& x_t, int t)>;

struct RestorationModel {
    DenoiserParams params;
    DegradationKind kind = DegradationKind::FixedNoise;
};

/// Adapts trained parameters to the Restorer interface (copied into the
/// closure). The network output is read as the clean-signal estimate.
Restorer as_restorer(const RestorationModel& m);

struct RestorationResult {
    RestorationModel model;
    TrainLog log;
};

/// Minimizes the mean absolute error || R(D(x, t), t) - x ||_1 with t
/// uniform over {0..T} (severity 0 pairs teach the identity). Same
/// stream-per-step reproducibility, logging, and divergence contract as the
/// noise-prediction trainer. Held-out empty means evaluation runs on the
/// training set; eval_metric is the held-out mean L1 error at uniformly
/// drawn severities.
RestorationResult train_restoration(const std::vector<Tensor>& dataset,
                                    const std::vector<Tensor>& held_out,
                                    const DegradationOp& op, const TrainConfig& cfg,
                                    const DenoiserInit& net_cfg,
                                    const CheckpointSink& sink = {});

/// Severity-stepping restoration: for t = T..1, estimate the clean signal,
/// then re-degrade it to severity t-1 for the next round; returns the final
/// estimate. A severity-0 operator returns the input unchanged. Aborts with
/// numeric_error naming the step on non-finite states.
Tensor restore_iterative(const Restorer& r, const DegradationOp& op, const Tensor& x_t);

/// Single-shot restoration from full severity: R(x, T).
Tensor restore_one_step(const Restorer& r, const DegradationOp& op, const Tensor& x_t);

/// Draws one fully-degraded state: FixedNoise severity-T states are
/// standard-normal draws; Blur states come from the empirical pool of
/// severity-T degradations of dataset elements (with replacement).
Tensor sample_limit_pool(const DegradationOp& op, const std::vector<Tensor>& dataset,
                         Rng& rng);

/// JSON round-trip so restoration checkpoints are self-describing (the
/// pinned noise tensor is stored in full).
std::string op_to_json(const DegradationOp& op);
DegradationOp op_from_json(const std::string& text);

}  // namespace dgen
