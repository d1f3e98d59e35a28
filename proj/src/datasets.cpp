#include "dgen/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dgen/textio.hpp"

namespace dgen {

void MixtureSpec::validate() const {
    if (means.empty() || means.size() != stds.size() || means.size() != weights.size())
        throw std::invalid_argument("MixtureSpec: means/stds/weights must be same nonzero length");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("MixtureSpec: weights must be >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("MixtureSpec: weights must not all be zero");
    for (double s : stds)
        if (!(s >= 0.0)) throw std::invalid_argument("MixtureSpec: stds must be >= 0");
    if (!(clamp_lo < clamp_hi))
        throw std::invalid_argument("MixtureSpec: clamp_lo must be below clamp_hi");
}

std::vector<DataPoint> make_mixture_dataset(std::size_t n, const MixtureSpec& spec,
                                            bool labeled, Rng& rng) {
    spec.validate();
    double total = 0.0;
    for (double w : spec.weights) total += w;
    std::vector<DataPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform() * total;
        std::size_t k = 0;
        double acc = spec.weights[0];
        while (k + 1 < spec.weights.size() && u >= acc) acc += spec.weights[++k];
        double v = spec.means[k] + spec.stds[k] * rng.normal();
        v = std::min(std::max(v, spec.clamp_lo), spec.clamp_hi);
        DataPoint d;
        d.x = Tensor({1}, {v});
        if (labeled) d.label = static_cast<int>(k);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Tensor> make_bump_dataset(std::size_t n, std::size_t dim, Rng& rng) {
    if (dim < 2) throw std::invalid_argument("make_bump_dataset: dim must be >= 2");
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double center = rng.uniform() * static_cast<double>(dim - 1);
        double width = 0.5 + 1.5 * rng.uniform();
        Tensor x = Tensor::zeros({dim});
        for (std::size_t j = 0; j < dim; ++j) {
            double d = (static_cast<double>(j) - center) / width;
            x.data[j] = std::exp(-0.5 * d * d);
        }
        out.push_back(std::move(x));
    }
    return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    // Inverse of the empirical CDF: value whose rank covers quantile q.
    std::size_t n = sorted.size();
    double pos = q * static_cast<double>(n);
    std::size_t idx = pos <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(pos)) - 1;
    if (idx >= n) idx = n - 1;
    return sorted[idx];
}

}  // namespace

double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("wasserstein1: both samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
        return total / static_cast<double>(a.size());
    }
    std::size_t grid = 4 * std::max(a.size(), b.size());
    double total = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
        double q = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        total += std::abs(quantile(a, q) - quantile(b, q));
    }
    return total / static_cast<double>(grid);
}

std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins) {
    if (bins < 1) throw std::invalid_argument("histogram_csv: bins must be >= 1");
    if (!(lo < hi)) throw std::invalid_argument("histogram_csv: lo must be below hi");
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        int idx = static_cast<int>(std::floor((v - lo) / width));
        idx = std::min(std::max(idx, 0), bins - 1);
        ++counts[static_cast<std::size_t>(idx)];
    }
    std::string out = "bin_left,bin_right,count\n";
    for (int i = 0; i < bins; ++i) {
        out += format_double(lo + width * i) + "," + format_double(lo + width * (i + 1)) +
               "," + std::to_string(counts[static_cast<std::size_t>(i)]) + "\n";
    }
    return out;
}

std::vector<double> scalar_values(const std::vector<Tensor>& xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const Tensor& x : xs) {
        if (x.numel() != 1)
            throw std::invalid_argument("scalar_values: tensors must hold one component");
        out.push_back(x.data[0]);
    }
    return out;
}

std::vector<double> scalar_values(const std::vector<DataPoint>& xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const DataPoint& d : xs) {
        if (d.x.numel() != 1)
            throw std::invalid_argument("scalar_values: tensors must hold one component");
        out.push_back(d.x.data[0]);
    }
    return out;
}

}  // namespace dgen
