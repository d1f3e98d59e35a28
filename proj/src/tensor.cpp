#include "dgen/tensor.hpp"

#include <cmath>

namespace dgen {

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("Tensor: shape does not match data length");
    }
}

Tensor::Tensor(std::initializer_list<double> values)
    : shape{values.size()}, data(values) {}

Tensor Tensor::zeros(const std::vector<std::size_t>& shape) {
    return Tensor(shape, std::vector<double>(shape_numel(shape), 0.0));
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero-sized dimension");
        n *= d;
    }
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

double squared_l2(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

double squared_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "squared_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double l1_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

Tensor affine_combine(double a, const Tensor& x, double b, const Tensor& y) {
    require_same_shape(x, y, "affine_combine");
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

Tensor scale(double a, const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v *= a;
    return out;
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    Tensor out = x;
    for (double& v : out.data) v = std::min(hi, std::max(lo, v));
    return out;
}

}  // namespace dgen
