#include "dgen/rng.hpp"

#include <cmath>

namespace dgen {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) { return scramble(x + kGolden); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(mix64(seed) + stream)) {}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return scramble(state_);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Modulo reduction; the bias is ~n/2^64, irrelevant at the ranges used.
    return next_u64() % n;
}

Tensor Rng::normal_tensor(const std::vector<std::size_t>& shape) {
    Tensor t = Tensor::zeros(shape);
    fill_normal(t);
    return t;
}

void Rng::fill_normal(Tensor& t) {
    for (double& v : t.data) v = normal();
}

}  // namespace dgen
