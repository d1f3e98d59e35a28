#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgen/denoiser.hpp"
#include "dgen/gaussian.hpp"
#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"

namespace dgen {

enum class FinalDecode { None, Clamp };

std::string to_string(FinalDecode d);
FinalDecode final_decode_from_string(const std::string& s);

struct SampleRunConfig {
    int n_samples = 1;
    std::uint64_t seed = 0;
    SigmaMode sigma_mode = SigmaMode::PosteriorBeta;
    /// 0 records nothing but the final state; k >= 1 records x_t for
    /// t = T, T-k, T-2k, ... plus always the final state.
    int record_stride = 0;
    FinalDecode final_decode = FinalDecode::None;

    void validate() const;
};

/// Pure core of one reverse update with all randomness supplied:
/// mean_from_noise(x_t, z_hat) plus sigma_t * z. The noise term is omitted
/// at t = 1, so the final transition returns the mean itself.
Tensor reverse_step_with(const Tensor& x_t, int t, const Schedule& s, SigmaMode mode,
                         const Tensor& z_hat, const Tensor& z);

/// Draws the step noise internally (no draw happens at t = 1).
Tensor reverse_step(const NoisePredictor& predictor, const Tensor& x_t, int t,
                    const Schedule& s, SigmaMode mode, Rng& rng,
                    std::optional<int> cond = std::nullopt);

/// Same update expressed through a precomputed transition mean: mu plus
/// sigma_t * z, noise omitted at t = 1. Feeding mu = mean_from_noise(x_t,
/// t, s, predictor(x_t, t)) reproduces reverse_step bit-for-bit when both
/// consume the same rng state.
Tensor reverse_step_from_mean(const Tensor& mu, int t, const Schedule& s, SigmaMode mode,
                              Rng& rng);

struct GeneratedSamples {
    std::vector<Tensor> finals;  // after final_decode
    /// Recorded step indices, descending from T; empty when record_stride=0.
    /// The entry for t = 0 stores the decoded final state; entries for t > 0
    /// store raw intermediate states.
    std::vector<int> recorded_ts;
    std::vector<std::vector<Tensor>> intermediates;  // [sample][recorded index]

    /// `sample_id,t,component_index,value` when intermediates were recorded,
    /// `sample_id,component_index,value` otherwise.
    std::string to_csv() const;
};

/// Ancestral sampling: per sample draws x_T from N(0, I) and applies
/// reverse_step for t = T..1. Sample i consumes the dedicated stream
/// Rng(cfg.seed, i), so samples are independent and the run is reproducible
/// from the seed. Aborts with numeric_error naming the step if a state turns
/// non-finite.
GeneratedSamples generate(const NoisePredictor& predictor,
                          const std::vector<std::size_t>& shape, const Schedule& s,
                          const SampleRunConfig& cfg,
                          std::optional<int> cond = std::nullopt);

/// Convenience overload sampling flat vectors of the network's data width.
GeneratedSamples generate(const DenoiserParams& p, const Schedule& s,
                          const SampleRunConfig& cfg,
                          std::optional<int> cond = std::nullopt);

}  // namespace dgen
