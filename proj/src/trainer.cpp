#include "dgen/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "dgen/errors.hpp"
#include "dgen/forward.hpp"
#include "dgen/textio.hpp"

namespace dgen {

std::string to_string(Optimizer o) {
    return o == Optimizer::Sgd ? "sgd" : "adaptive_moments";
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::Sgd;
    if (s == "adaptive_moments") return Optimizer::AdaptiveMoments;
    throw std::invalid_argument("optimizer: expected 'sgd' or 'adaptive_moments', got '" + s + "'");
}

void TrainConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("TrainConfig.steps must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig.batch_size must be positive");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig.learning_rate must be positive");
    if (eval_every < 1) throw std::invalid_argument("TrainConfig.eval_every must be positive");
    if (eval_every > steps)
        throw std::invalid_argument("TrainConfig.eval_every must not exceed steps");
    if (eval_n_mc < 1) throw std::invalid_argument("TrainConfig.eval_n_mc must be positive");
}

std::string TrainLog::to_csv() const {
    std::string out = "step,loss,grad_norm,eval_metric\n";
    for (const TrainLogRow& r : rows) {
        out += std::to_string(r.step) + "," + format_double(r.loss) + "," +
               format_double(r.grad_norm) + "," + format_double(r.eval_metric) + "\n";
    }
    return out;
}

std::vector<NoiseBatchItem> sample_batch(const std::vector<DataPoint>& dataset,
                                         const Schedule& s, int batch_size, bool conditioned,
                                         Rng& rng) {
    if (dataset.empty()) throw std::invalid_argument("sample_batch: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be positive");
    std::vector<NoiseBatchItem> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    std::uint64_t T = static_cast<std::uint64_t>(s.steps());
    for (int i = 0; i < batch_size; ++i) {
        const DataPoint& d = dataset[static_cast<std::size_t>(rng.below(dataset.size()))];
        int t = 1 + static_cast<int>(rng.below(T));
        NoiseBatchItem item;
        item.x0 = d.x;
        item.t = t;
        item.z = rng.normal_tensor(d.x.shape);
        if (conditioned) {
            if (!d.label.has_value())
                throw std::invalid_argument("sample_batch: conditioned training needs a label on every item");
            item.cond = d.label;
        }
        batch.push_back(std::move(item));
    }
    return batch;
}

double evaluate(const DenoiserParams& p, const std::vector<DataPoint>& held_out,
                const Schedule& s, int n_mc, Rng& rng) {
    if (held_out.empty()) throw std::invalid_argument("evaluate: empty held-out set");
    if (n_mc < 1) throw std::invalid_argument("evaluate: n_mc must be positive");
    bool conditioned = p.cond_dim > 0;
    std::uint64_t T = static_cast<std::uint64_t>(s.steps());
    double total = 0.0;
    for (const DataPoint& d : held_out) {
        if (conditioned && !d.label.has_value())
            throw std::invalid_argument("evaluate: conditioned model needs a label on every item");
        for (int k = 0; k < n_mc; ++k) {
            int t = 1 + static_cast<int>(rng.below(T));
            Tensor z = rng.normal_tensor(d.x.shape);
            Tensor x_t = mix_marginal(d.x, s.alpha_bar(t), z);
            Tensor out = predict_noise(p, x_t, t, conditioned ? d.label : std::nullopt);
            total += squared_distance(out, z);
        }
    }
    return total / (static_cast<double>(held_out.size()) * static_cast<double>(n_mc));
}

std::string checkpoint_filename(std::uint64_t step) {
    return "ckpt_" + std::to_string(step) + ".bin";
}

std::vector<Tensor*> trainable_tensors(DenoiserParams& p) {
    std::vector<Tensor*> ts;
    for (Tensor& w : p.weights) ts.push_back(&w);
    for (Tensor& b : p.biases) ts.push_back(&b);
    if (p.time_mode == TimeFeatureMode::Learned) ts.push_back(&p.time_table);
    if (p.cond_dim > 0) ts.push_back(&p.cond_table);
    return ts;
}

std::vector<const Tensor*> gradient_tensors(const GradientBundle& g, const DenoiserParams& p) {
    std::vector<const Tensor*> ts;
    for (const Tensor& w : g.weights) ts.push_back(&w);
    for (const Tensor& b : g.biases) ts.push_back(&b);
    if (p.time_mode == TimeFeatureMode::Learned) ts.push_back(&g.time_table);
    if (p.cond_dim > 0) ts.push_back(&g.cond_table);
    return ts;
}

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kDivergenceCeiling = 1e6;

}  // namespace

OptimizerState::OptimizerState(Optimizer kind, double learning_rate,
                               const std::vector<Tensor*>& params)
    : kind_(kind), lr_(learning_rate) {
    if (kind_ == Optimizer::AdaptiveMoments) {
        for (const Tensor* t : params) {
            m_.push_back(Tensor::zeros(t->shape));
            v_.push_back(Tensor::zeros(t->shape));
        }
    }
}

void OptimizerState::apply(const std::vector<Tensor*>& params,
                           const std::vector<const Tensor*>& grads) {
    if (kind_ == Optimizer::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            double* p = params[i]->data.data();
            const double* g = grads[i]->data.data();
            for (std::size_t j = 0; j < params[i]->numel(); ++j) p[j] -= lr_ * g[j];
        }
        return;
    }
    ++updates_;
    double corr1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(updates_));
    double corr2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(updates_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i]->data.data();
        const double* g = grads[i]->data.data();
        double* m = m_[i].data.data();
        double* v = v_[i].data.data();
        for (std::size_t j = 0; j < params[i]->numel(); ++j) {
            m[j] = kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * g[j];
            v[j] = kAdamBeta2 * v[j] + (1.0 - kAdamBeta2) * g[j] * g[j];
            double m_hat = m[j] / corr1;
            double v_hat = v[j] / corr2;
            p[j] -= lr_ * m_hat / (std::sqrt(v_hat) + kAdamEps);
        }
    }
}

void ensure_loss_sane(double loss, std::uint64_t step) {
    if (!std::isfinite(loss) || loss > kDivergenceCeiling)
        throw numeric_error("training diverged at step " + std::to_string(step) +
                            " (loss=" + format_double(loss) + ")");
}

TrainResult train(const std::vector<DataPoint>& dataset, const std::vector<DataPoint>& held_out,
                  const Schedule& s, const TrainConfig& cfg, const DenoiserInit& net_cfg,
                  std::optional<DenoiserParams> warm_start, std::uint64_t start_step,
                  const CheckpointSink& sink) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    for (const DataPoint& d : dataset)
        require_same_shape(d.x, dataset.front().x, "train dataset");
    if (start_step > cfg.steps)
        throw std::invalid_argument("train: start_step exceeds configured steps");

    TrainResult res;
    if (warm_start.has_value()) {
        res.params = std::move(*warm_start);
        res.params.validate();
    } else {
        Rng init_rng(cfg.seed, kInitStream);
        res.params = init_denoiser(net_cfg, init_rng);
    }
    if (res.params.data_dim != dataset.front().x.numel())
        throw std::invalid_argument("train: network data_dim does not match dataset shape");
    if (res.params.max_step < s.steps())
        throw std::invalid_argument("train: network max_step smaller than schedule steps");
    bool conditioned = res.params.cond_dim > 0;

    const std::vector<DataPoint>& eval_set = held_out.empty() ? dataset : held_out;
    auto eval_now = [&]() {
        Rng eval_rng(cfg.seed, kEvalStream);
        return evaluate(res.params, eval_set, s, cfg.eval_n_mc, eval_rng);
    };

    std::vector<Tensor*> params = trainable_tensors(res.params);
    OptimizerState opt(cfg.optimizer, cfg.learning_rate, params);

    for (std::uint64_t k = start_step; k < cfg.steps; ++k) {
        Rng step_rng(cfg.seed, k);
        std::vector<NoiseBatchItem> batch =
            sample_batch(dataset, s, cfg.batch_size, conditioned, step_rng);
        GradientBundle g = loss_and_grad(res.params, batch, s, cfg.weighting);
        ensure_loss_sane(g.loss_value, k);
        if (k % cfg.eval_every == 0) {
            res.log.rows.push_back(
                {k, g.loss_value, std::sqrt(g.squared_norm()), eval_now()});
            if (sink && k > 0) sink(k, res.params);
        }
        opt.apply(params, gradient_tensors(g, res.params));
    }

    // Final row: probe batch at the step-count stream, parameters after all
    // updates.
    Rng probe_rng(cfg.seed, cfg.steps);
    std::vector<NoiseBatchItem> probe =
        sample_batch(dataset, s, cfg.batch_size, conditioned, probe_rng);
    GradientBundle g = loss_and_grad(res.params, probe, s, cfg.weighting);
    ensure_loss_sane(g.loss_value, cfg.steps);
    res.log.rows.push_back({cfg.steps, g.loss_value, std::sqrt(g.squared_norm()), eval_now()});
    if (sink) sink(cfg.steps, res.params);
    return res;
}

}  // namespace dgen
