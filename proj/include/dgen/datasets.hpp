#pragma once

#include <string>
#include <vector>

#include "dgen/rng.hpp"
#include "dgen/tensor.hpp"
#include "dgen/trainer.hpp"

namespace dgen {

struct MixtureSpec {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<double> weights;  // normalized internally; must be nonnegative, not all zero
    double clamp_lo = -1.0;
    double clamp_hi = 1.0;

    void validate() const;
};

/// 1-D mixture dataset in [clamp_lo, clamp_hi]; labeled=true stores the
/// component index as the condition label. Draw order per item: one uniform
/// (component choice), one normal.
std::vector<DataPoint> make_mixture_dataset(std::size_t n, const MixtureSpec& spec,
                                            bool labeled, Rng& rng);

/// Smooth positive bumps on a length-dim grid with random center and width;
/// used as blur-restoration targets.
std::vector<Tensor> make_bump_dataset(std::size_t n, std::size_t dim, Rng& rng);

/// Empirical 1-Wasserstein distance between two samples. Equal sizes use the
/// exact sorted-difference formula; unequal sizes integrate the quantile
/// difference on a midpoint grid of 4 * max(n, m) points.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// `bin_left,bin_right,count` over equal-width bins on [lo, hi); values
/// outside the range are counted into the nearest edge bin so totals are
/// conserved.
std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins);

/// Flattens 1-component tensors to scalars (histogram/distance helpers).
std::vector<double> scalar_values(const std::vector<Tensor>& xs);
std::vector<double> scalar_values(const std::vector<DataPoint>& xs);

}  // namespace dgen
