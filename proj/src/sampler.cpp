#include "dgen/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "dgen/errors.hpp"
#include "dgen/textio.hpp"

namespace dgen {

std::string to_string(FinalDecode d) { return d == FinalDecode::None ? "none" : "clamp"; }

FinalDecode final_decode_from_string(const std::string& s) {
    if (s == "none") return FinalDecode::None;
    if (s == "clamp") return FinalDecode::Clamp;
    throw std::invalid_argument("final_decode: expected 'none' or 'clamp', got '" + s + "'");
}

void SampleRunConfig::validate() const {
    if (n_samples < 1) throw std::invalid_argument("SampleRunConfig.n_samples must be >= 1");
    if (record_stride < 0)
        throw std::invalid_argument("SampleRunConfig.record_stride must be >= 0");
}

namespace {

// Shared tail of both reverse-update formulations; keeping it in one place
// makes the two recursions bit-identical by construction.
Tensor add_step_noise(Tensor mu, int t, const Schedule& s, SigmaMode mode, Rng& rng) {
    if (t == 1) return mu;
    double sigma = std::sqrt(sigma_sq_for(s, mode, t));
    Tensor z = rng.normal_tensor(mu.shape);
    return affine_combine(1.0, mu, sigma, z);
}

}  // namespace

Tensor reverse_step_with(const Tensor& x_t, int t, const Schedule& s, SigmaMode mode,
                         const Tensor& z_hat, const Tensor& z) {
    Tensor mu = mean_from_noise(x_t, t, s, z_hat);
    if (t == 1) return mu;
    require_same_shape(mu, z, "reverse_step_with");
    double sigma = std::sqrt(sigma_sq_for(s, mode, t));
    return affine_combine(1.0, mu, sigma, z);
}

Tensor reverse_step(const NoisePredictor& predictor, const Tensor& x_t, int t,
                    const Schedule& s, SigmaMode mode, Rng& rng, std::optional<int> cond) {
    if (t < 1 || t > s.steps())
        throw std::out_of_range("reverse_step: t must be in [1, T]");
    Tensor mu = mean_from_noise(x_t, t, s, predictor(x_t, t, cond));
    return add_step_noise(std::move(mu), t, s, mode, rng);
}

Tensor reverse_step_from_mean(const Tensor& mu, int t, const Schedule& s, SigmaMode mode,
                              Rng& rng) {
    if (t < 1 || t > s.steps())
        throw std::out_of_range("reverse_step_from_mean: t must be in [1, T]");
    return add_step_noise(mu, t, s, mode, rng);
}

GeneratedSamples generate(const NoisePredictor& predictor,
                          const std::vector<std::size_t>& shape, const Schedule& s,
                          const SampleRunConfig& cfg, std::optional<int> cond) {
    cfg.validate();
    int T = s.steps();
    GeneratedSamples out;
    if (cfg.record_stride > 0) {
        for (int t = T; t > 0; t -= cfg.record_stride) out.recorded_ts.push_back(t);
        out.recorded_ts.push_back(0);
    }
    for (int i = 0; i < cfg.n_samples; ++i) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
        Tensor x = rng.normal_tensor(shape);
        std::vector<Tensor> recorded;
        auto record = [&](int t, const Tensor& state) {
            if (cfg.record_stride > 0 && t > 0 &&
                (T - t) % cfg.record_stride == 0)
                recorded.push_back(state);
        };
        record(T, x);
        for (int t = T; t >= 1; --t) {
            x = reverse_step(predictor, x, t, s, cfg.sigma_mode, rng, cond);
            if (!x.all_finite())
                throw numeric_error("generate: non-finite state after step t=" +
                                    std::to_string(t) + " in sample " + std::to_string(i));
            record(t - 1, x);
        }
        if (cfg.final_decode == FinalDecode::Clamp) x = clamp(x, -1.0, 1.0);
        if (cfg.record_stride > 0) recorded.push_back(x);
        out.finals.push_back(std::move(x));
        if (cfg.record_stride > 0) out.intermediates.push_back(std::move(recorded));
    }
    return out;
}

GeneratedSamples generate(const DenoiserParams& p, const Schedule& s,
                          const SampleRunConfig& cfg, std::optional<int> cond) {
    return generate(as_predictor(p), {p.data_dim}, s, cfg, cond);
}

std::string GeneratedSamples::to_csv() const {
    std::string out;
    if (recorded_ts.empty()) {
        out = "sample_id,component_index,value\n";
        for (std::size_t i = 0; i < finals.size(); ++i)
            for (std::size_t j = 0; j < finals[i].numel(); ++j)
                out += std::to_string(i) + "," + std::to_string(j) + "," +
                       format_double(finals[i].data[j]) + "\n";
        return out;
    }
    out = "sample_id,t,component_index,value\n";
    for (std::size_t i = 0; i < intermediates.size(); ++i)
        for (std::size_t k = 0; k < recorded_ts.size(); ++k)
            for (std::size_t j = 0; j < intermediates[i][k].numel(); ++j)
                out += std::to_string(i) + "," + std::to_string(recorded_ts[k]) + "," +
                       std::to_string(j) + "," +
                       format_double(intermediates[i][k].data[j]) + "\n";
    return out;
}

}  // namespace dgen
