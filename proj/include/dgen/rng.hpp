#pragma once

#include <cstdint>

#include "dgen/tensor.hpp"

namespace dgen {

/// Counter-based pseudo-random generator with independent streams, chosen so
/// that any environment (a Python check script, a spreadsheet) can replay the
/// exact draws from (seed, stream) alone.
///
/// State advance and output are splitmix64:
///   state_0    = scramble(scramble(seed + G) + stream + G)
///   state_n    = state_{n-1} + G                (G = 0x9E3779B97F4A7C15)
///   output_n   = scramble(state_n)
///   scramble(z): z ^= z>>30; z *= 0xBF58476D1CE4E5B9;
///                z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31
///
/// uniform() maps the top 53 bits to [0,1). normal() is the Box-Muller
/// transform on consecutive uniforms,
///   u1 = ((u64 >> 11)+1) * 2^-53  in (0,1],   u2 = (u64 >> 11) * 2^-53,
///   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = ... sin(...),
/// with z1 cached and returned on the next call. The largest representable
/// deviate is sqrt(-2 ln 2^-53) ~ 8.57 sigma.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal deviate.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Tensor normal_tensor(const std::vector<std::size_t>& shape);
    void fill_normal(Tensor& t);

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace dgen
