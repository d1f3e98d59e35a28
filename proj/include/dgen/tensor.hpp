#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgen {

/// Shape-tagged dense array of float64, row-major. Holds anything from a
/// scalar series sample to an HxWxC image; all arithmetic here is
/// elementwise, so the shape is carried for bookkeeping and compatibility
/// checks only.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);
    explicit Tensor(std::initializer_list<double> values);

    static Tensor zeros(const std::vector<std::size_t>& shape);
    static Tensor scalar(double v) { return Tensor({v}); }

    std::size_t numel() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    bool operator==(const Tensor& other) const {
        return shape == other.shape && data == other.data;
    }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

/// Throws std::invalid_argument when the shapes differ; `what` names the
/// operation for the error message.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double squared_l2(const Tensor& a);
double squared_distance(const Tensor& a, const Tensor& b);
double l1_distance(const Tensor& a, const Tensor& b);

/// a*x + b*y, elementwise.
Tensor affine_combine(double a, const Tensor& x, double b, const Tensor& y);
Tensor scale(double a, const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

}  // namespace dgen
