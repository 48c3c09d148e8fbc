#include "invnet/tensor.hpp"

#include <cmath>
#include <utility>

namespace invnet {

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    out += ")";
    return out;
}

std::size_t shape_size(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill, Precision precision)
    : shape_(std::move(shape)), precision_(precision) {
    if (shape_.empty()) {
        throw ShapeError("tensor shape must have at least one axis");
    }
    for (std::size_t e : shape_) {
        if (e == 0) {
            throw ShapeError("tensor extents must be positive, got " +
                             shape_to_string(shape_));
        }
    }
    data_.assign(shape_size(shape_), fill);
    quantize();
}

Tensor Tensor::from_values(std::vector<std::size_t> shape,
                           std::vector<double> values, Precision precision) {
    Tensor t(std::move(shape), 0.0, Precision::f64);
    if (values.size() != t.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_to_string(t.shape_));
    }
    t.data_ = std::move(values);
    t.precision_ = precision;
    t.quantize();
    return t;
}

void Tensor::set_precision(Precision p) {
    precision_ = p;
    quantize();
}

void Tensor::quantize() {
    if (precision_ == Precision::f32) {
        for (double& v : data_) {
            v = static_cast<double>(static_cast<float>(v));
        }
    }
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_size(new_shape) != size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(new_shape));
    }
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    out.precision_ = precision_;
    return out;
}

void Tensor::fill(double v) {
    for (double& x : data_) {
        x = v;
    }
    quantize();
}

void Tensor::ensure_finite(const std::string& context) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NumericError(context + ": non-finite value at flat index " +
                               std::to_string(i));
        }
    }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += b[i];
    }
    out.quantize();
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= b[i];
    }
    out.quantize();
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= b[i];
    }
    out.quantize();
    return out;
}

Tensor scaled(const Tensor& a, double factor) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= factor;
    }
    out.quantize();
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace invnet
