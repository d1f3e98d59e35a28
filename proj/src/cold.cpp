#include "dgen/cold.hpp"

#include <cmath>
#include <stdexcept>

#include "dgen/errors.hpp"
#include "dgen/forward.hpp"
#include "dgen/textio.hpp"

#include "json.hpp"

namespace dgen {

std::string to_string(DegradationKind k) {
    return k == DegradationKind::FixedNoise ? "fixed_noise" : "blur";
}

DegradationKind degradation_kind_from_string(const std::string& s) {
    if (s == "fixed_noise") return DegradationKind::FixedNoise;
    if (s == "blur") return DegradationKind::Blur;
    throw std::invalid_argument("degradation kind: expected 'fixed_noise' or 'blur', got '" + s + "'");
}

int DegradationOp::max_severity() const {
    return kind == DegradationKind::FixedNoise ? schedule->steps() : blur_severity;
}

DegradationOp make_fixed_noise_op(Schedule s, Tensor pinned_z) {
    if (pinned_z.numel() == 0)
        throw std::invalid_argument("make_fixed_noise_op: pinned noise must be non-empty");
    if (!pinned_z.all_finite())
        throw std::invalid_argument("make_fixed_noise_op: pinned noise must be finite");
    DegradationOp op;
    op.kind = DegradationKind::FixedNoise;
    op.schedule = std::move(s);
    op.pinned_z = std::move(pinned_z);
    return op;
}

DegradationOp make_blur_op(int max_severity, double unit_width) {
    if (max_severity < 0)
        throw std::invalid_argument("make_blur_op: max_severity must be >= 0");
    if (!(unit_width > 0.0))
        throw std::invalid_argument("make_blur_op: unit_width must be positive");
    DegradationOp op;
    op.kind = DegradationKind::Blur;
    op.blur_severity = max_severity;
    op.blur_unit_width = unit_width;
    return op;
}

namespace {

// One convolution pass with a truncated discrete Gaussian of the given
// width. Each source cell scatters its mass with weights renormalized over
// in-bounds targets, so the total sum is conserved exactly up to rounding.
Tensor blur_once(const Tensor& x, double sigma) {
    std::size_t n = x.numel();
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (int d = -radius; d <= radius; ++d)
        kernel[static_cast<std::size_t>(d + radius)] =
            std::exp(-0.5 * static_cast<double>(d) * static_cast<double>(d) / (sigma * sigma));
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < n; ++i) {
        int lo = -radius, hi = radius;
        if (static_cast<int>(i) + lo < 0) lo = -static_cast<int>(i);
        if (static_cast<int>(i) + hi >= static_cast<int>(n))
            hi = static_cast<int>(n) - 1 - static_cast<int>(i);
        double mass = 0.0;
        for (int d = lo; d <= hi; ++d) mass += kernel[static_cast<std::size_t>(d + radius)];
        for (int d = lo; d <= hi; ++d)
            out.data[i + static_cast<std::size_t>(d)] +=
                x.data[i] * kernel[static_cast<std::size_t>(d + radius)] / mass;
    }
    return out;
}

}  // namespace

Tensor degrade(const DegradationOp& op, const Tensor& x, int t) {
    if (t < 0 || t > op.max_severity())
        throw std::out_of_range("degrade: severity t must be in [0, T]");
    if (t == 0) return x;  // zero-severity identity, exact by construction
    if (op.kind == DegradationKind::FixedNoise) {
        require_same_shape(x, op.pinned_z, "degrade (fixed noise)");
        return mix_marginal(x, op.schedule->alpha_bar(t), op.pinned_z);
    }
    if (x.shape.size() != 1)
        throw std::invalid_argument("degrade (blur): expects rank-1 signals");
    Tensor out = x;
    // Per-pass variance w^2 (2s - 1) sums to (w t)^2: cumulative width grows
    // linearly in severity.
    for (int s_idx = 1; s_idx <= t; ++s_idx) {
        double sigma = op.blur_unit_width *
                       std::sqrt(2.0 * static_cast<double>(s_idx) - 1.0);
        out = blur_once(out, sigma);
    }
    return out;
}

Restorer as_restorer(const RestorationModel& m) {
    return [params = m.params](const Tensor& x_t, int t) {
        return net_forward(params, x_t, t, std::nullopt);
    };
}

RestorationResult train_restoration(const std::vector<Tensor>& dataset,
                                    const std::vector<Tensor>& held_out,
                                    const DegradationOp& op, const TrainConfig& cfg,
                                    const DenoiserInit& net_cfg, const CheckpointSink& sink) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train_restoration: empty dataset");
    for (const Tensor& x : dataset)
        require_same_shape(x, dataset.front(), "train_restoration dataset");
    std::uint64_t T = static_cast<std::uint64_t>(op.max_severity());

    RestorationResult res;
    res.model.kind = op.kind;
    {
        Rng init_rng(cfg.seed, kInitStream);
        res.model.params = init_denoiser(net_cfg, init_rng);
    }
    if (res.model.params.data_dim != dataset.front().numel())
        throw std::invalid_argument("train_restoration: network data_dim does not match dataset");
    if (res.model.params.max_step < op.max_severity())
        throw std::invalid_argument("train_restoration: network max_step below operator severity");

    const std::vector<Tensor>& eval_set = held_out.empty() ? dataset : held_out;
    auto eval_now = [&]() {
        Rng eval_rng(cfg.seed, kEvalStream);
        double total = 0.0;
        for (const Tensor& x : eval_set) {
            for (int k = 0; k < cfg.eval_n_mc; ++k) {
                int t = static_cast<int>(eval_rng.below(T + 1));
                Tensor estimate = net_forward(res.model.params, degrade(op, x, t), t, std::nullopt);
                total += l1_distance(estimate, x);
            }
        }
        return total / (static_cast<double>(eval_set.size()) * cfg.eval_n_mc);
    };

    auto draw_batch = [&](Rng& rng) {
        std::vector<RestoreBatchItem> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i) {
            const Tensor& x = dataset[static_cast<std::size_t>(rng.below(dataset.size()))];
            int t = static_cast<int>(rng.below(T + 1));
            batch.push_back({degrade(op, x, t), t, x});
        }
        return batch;
    };

    std::vector<Tensor*> params = trainable_tensors(res.model.params);
    OptimizerState opt(cfg.optimizer, cfg.learning_rate, params);
    for (std::uint64_t k = 0; k < cfg.steps; ++k) {
        Rng step_rng(cfg.seed, k);
        std::vector<RestoreBatchItem> batch = draw_batch(step_rng);
        GradientBundle g = l1_loss_and_grad(res.model.params, batch);
        ensure_loss_sane(g.loss_value, k);
        if (k % cfg.eval_every == 0) {
            res.log.rows.push_back({k, g.loss_value, std::sqrt(g.squared_norm()), eval_now()});
            if (sink && k > 0) sink(k, res.model.params);
        }
        opt.apply(params, gradient_tensors(g, res.model.params));
    }
    Rng probe_rng(cfg.seed, cfg.steps);
    std::vector<RestoreBatchItem> probe = draw_batch(probe_rng);
    GradientBundle g = l1_loss_and_grad(res.model.params, probe);
    ensure_loss_sane(g.loss_value, cfg.steps);
    res.log.rows.push_back({cfg.steps, g.loss_value, std::sqrt(g.squared_norm()), eval_now()});
    if (sink) sink(cfg.steps, res.model.params);
    return res;
}

Tensor restore_iterative(const Restorer& r, const DegradationOp& op, const Tensor& x_t) {
    Tensor state = x_t;
    Tensor estimate = x_t;  // severity-0 operators pass the input through
    for (int t = op.max_severity(); t >= 1; --t) {
        estimate = r(state, t);
        if (!estimate.all_finite())
            throw numeric_error("restore_iterative: non-finite estimate at severity t=" +
                                std::to_string(t));
        state = degrade(op, estimate, t - 1);
    }
    return estimate;
}

Tensor restore_one_step(const Restorer& r, const DegradationOp& op, const Tensor& x_t) {
    return r(x_t, op.max_severity());
}

Tensor sample_limit_pool(const DegradationOp& op, const std::vector<Tensor>& dataset,
                         Rng& rng) {
    if (op.kind == DegradationKind::FixedNoise) return rng.normal_tensor(op.pinned_z.shape);
    if (dataset.empty())
        throw std::invalid_argument("sample_limit_pool: blur pool needs a nonempty dataset");
    const Tensor& x = dataset[static_cast<std::size_t>(rng.below(dataset.size()))];
    return degrade(op, x, op.max_severity());
}

std::string op_to_json(const DegradationOp& op) {
    nlohmann::json j;
    j["kind"] = to_string(op.kind);
    if (op.kind == DegradationKind::FixedNoise) {
        nlohmann::json sched;
        sched["sigma_mode"] = to_string(op.schedule->sigma_mode());
        sched["betas"] = op.schedule->betas();
        j["schedule"] = std::move(sched);
        j["pinned_z"] = {{"shape", op.pinned_z.shape}, {"data", op.pinned_z.data}};
    } else {
        j["max_severity"] = op.blur_severity;
        j["unit_width"] = op.blur_unit_width;
    }
    return j.dump(2) + "\n";
}

DegradationOp op_from_json(const std::string& text) {
    // Everything here is reconstructed from an on-disk artifact; any defect in
    // the content is an artifact failure, not a caller bug.
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        DegradationKind kind = degradation_kind_from_string(j.at("kind").get<std::string>());
        if (kind == DegradationKind::FixedNoise) {
            const nlohmann::json& sched = j.at("schedule");
            Schedule s = Schedule::from_betas(
                sched.at("betas").get<std::vector<double>>(),
                sigma_mode_from_string(sched.at("sigma_mode").get<std::string>()));
            const nlohmann::json& pz = j.at("pinned_z");
            Tensor z(pz.at("shape").get<std::vector<std::size_t>>(),
                     pz.at("data").get<std::vector<double>>());
            return make_fixed_noise_op(std::move(s), std::move(z));
        }
        return make_blur_op(j.at("max_severity").get<int>(), j.at("unit_width").get<double>());
    } catch (const artifact_error&) {
        throw;
    } catch (const std::exception& e) {
        throw artifact_error(std::string("degradation operator JSON invalid: ") + e.what());
    }
}

}  // namespace dgen
