#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "invnet/error.hpp"

namespace invnet {

enum class Precision { f64, f32 };

std::string shape_to_string(std::span<const std::size_t> shape);
std::size_t shape_size(std::span<const std::size_t> shape);

/// Dense n-dimensional array, row-major contiguous, 64-bit storage.
///
/// A tensor tagged Precision::f32 keeps its storage rounded to single
/// precision at operation boundaries, so reduced-precision behaviour can be
/// studied without a second storage type.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0,
                    Precision precision = Precision::f64);
    static Tensor from_values(std::vector<std::size_t> shape,
                              std::vector<double> values,
                              Precision precision = Precision::f64);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    Precision precision() const noexcept { return precision_; }
    void set_precision(Precision p);

    /// Rounds storage to f32 when tagged f32; no-op for f64 tensors.
    void quantize();

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Same data, new shape; total size must match.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    void fill(double v);

    /// Throws NumericError when any element is NaN or infinite.
    void ensure_finite(const std::string& context) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    Precision precision_ = Precision::f64;
};

// Elementwise helpers; shapes must match exactly. Results inherit the
// left operand's precision tag.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& a, double factor);
double dot(const Tensor& a, const Tensor& b);

}  // namespace invnet
