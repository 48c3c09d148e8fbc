#include "invnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace invnet {

namespace {

std::string with_name(const std::string& what, const std::string& layer_name) {
    if (layer_name.empty()) {
        return what;
    }
    return what + " (" + layer_name + ")";
}

void check_slope(double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw ShapeError("activation slope must lie in (0, 1), got " +
                         std::to_string(slope));
    }
}

// Splits an input into (batch count, feature shape) where the feature rank is
// known; a missing batch axis means a single sample.
struct BatchView {
    std::size_t batch = 1;
    bool batched = false;
};

BatchView batch_view(const Tensor& t, std::size_t feature_rank, const char* op) {
    BatchView v;
    if (t.rank() == feature_rank) {
        return v;
    }
    if (t.rank() == feature_rank + 1) {
        v.batch = t.extent(0);
        v.batched = true;
        return v;
    }
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(feature_rank) + " or " +
                     std::to_string(feature_rank + 1) + " input, got " +
                     shape_to_string(t.shape()));
}

}  // namespace

Tensor leaky_relu(const Tensor& z, double slope) {
    check_slope(slope);
    Tensor out = z;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 0.0) {
            out[i] *= slope;
        }
    }
    out.quantize();
    return out;
}

Tensor leaky_relu_inverse(const Tensor& a, double slope) {
    check_slope(slope);
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 0.0) {
            out[i] /= slope;
        }
    }
    out.quantize();
    return out;
}

Tensor activation_derivative(const Tensor& z, double slope) {
    check_slope(slope);
    Tensor out = z;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (out[i] >= 0.0) ? 1.0 : slope;
    }
    return out;
}

DenseLayer make_dense_layer(Matrix W, Tensor b, double slope) {
    check_slope(slope);
    if (W.rows() != W.cols()) {
        throw ShapeError("dense layer weight must be square, got " +
                         std::to_string(W.rows()) + "x" + std::to_string(W.cols()));
    }
    if (b.rank() != 1 || b.size() != W.rows()) {
        throw ShapeError("dense layer bias must be a vector of width " +
                         std::to_string(W.rows()));
    }
    DenseLayer layer;
    layer.W = std::move(W);
    layer.b = std::move(b);
    layer.slope = slope;
    return layer;
}

DenseOut dense_forward(const DenseLayer& layer, const Tensor& a_prev) {
    const std::size_t n = layer.width();
    const BatchView v = batch_view(a_prev, 1, "dense_forward");
    if (a_prev.size() != v.batch * n) {
        throw ShapeError("dense_forward: input width " +
                         std::to_string(a_prev.size() / v.batch) +
                         " does not match layer width " + std::to_string(n));
    }

    Tensor z(v.batched ? std::vector<std::size_t>{v.batch, n}
                       : std::vector<std::size_t>{n});
    const double* x = a_prev.data();
    const double* w = layer.W.tensor().data();
    double* out = z.data();
    for (std::size_t i = 0; i < v.batch; ++i) {
        const double* xi = x + i * n;
        double* zi = out + i * n;
        for (std::size_t r = 0; r < n; ++r) {
            const double* wr = w + r * n;
            double acc = layer.b[r];
            for (std::size_t c = 0; c < n; ++c) {
                acc += wr[c] * xi[c];
            }
            zi[r] = acc;
        }
    }
    z.set_precision(a_prev.precision());
    z.ensure_finite("dense_forward");
    DenseOut result;
    result.a = leaky_relu(z, layer.slope);
    result.z = std::move(z);
    return result;
}

Tensor dense_inverse(const DenseLayer& layer, const Tensor& a,
                     const std::string& layer_name) {
    const std::size_t n = layer.width();
    const BatchView v = batch_view(a, 1, "dense_inverse");
    if (a.size() != v.batch * n) {
        throw ShapeError(with_name("dense_inverse: activation width mismatch",
                                   layer_name));
    }

    Matrix w_inv;
    try {
        w_inv = invert_square(layer.W);
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(with_name(e.what(), layer_name));
    }

    Tensor u = leaky_relu_inverse(a, layer.slope);
    for (std::size_t i = 0; i < v.batch; ++i) {
        for (std::size_t r = 0; r < n; ++r) {
            u[i * n + r] -= layer.b[r];
        }
    }

    Tensor out(a.shape());
    const double* w = w_inv.tensor().data();
    for (std::size_t i = 0; i < v.batch; ++i) {
        const double* ui = u.data() + i * n;
        double* oi = out.data() + i * n;
        for (std::size_t r = 0; r < n; ++r) {
            const double* wr = w + r * n;
            double acc = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                acc += wr[c] * ui[c];
            }
            oi[r] = acc;
        }
    }
    out.set_precision(a.precision());
    out.ensure_finite(with_name("dense_inverse", layer_name));
    return out;
}

CoverageMap coverage_map(const std::vector<std::size_t>& input_extents,
                         const std::vector<std::size_t>& kernel_extents,
                         std::size_t stride) {
    if (input_extents.empty() || input_extents.size() > 2 ||
        input_extents.size() != kernel_extents.size()) {
        throw ShapeError("coverage_map: spatial rank must be 1 or 2 and match "
                         "the kernel rank");
    }
    if (stride == 0) {
        throw ShapeError("coverage_map: stride must be positive");
    }
    // Per-axis placement counts; total coverage is their outer product.
    std::vector<std::vector<int>> axis_counts;
    for (std::size_t d = 0; d < input_extents.size(); ++d) {
        const std::size_t in = input_extents[d];
        const std::size_t k = kernel_extents[d];
        if (k == 0 || k > in) {
            throw ShapeError("coverage_map: kernel extent " + std::to_string(k) +
                             " invalid for input extent " + std::to_string(in));
        }
        if (stride > k) {
            throw ShapeError("coverage_map: stride " + std::to_string(stride) +
                             " exceeds kernel extent " + std::to_string(k) +
                             " (input positions would be skipped)");
        }
        if ((in - k) % stride != 0) {
            throw ShapeError("coverage_map: geometry does not tile exactly: (" +
                             std::to_string(in) + " - " + std::to_string(k) +
                             ") % " + std::to_string(stride) + " != 0");
        }
        const std::size_t placements = (in - k) / stride + 1;
        std::vector<int> counts(in, 0);
        for (std::size_t p = 0; p < placements; ++p) {
            for (std::size_t off = 0; off < k; ++off) {
                counts[p * stride + off] += 1;
            }
        }
        axis_counts.push_back(std::move(counts));
    }

    CoverageMap map;
    map.shape = input_extents;
    if (axis_counts.size() == 1) {
        map.counts = axis_counts[0];
    } else {
        map.counts.resize(input_extents[0] * input_extents[1]);
        for (std::size_t y = 0; y < input_extents[0]; ++y) {
            for (std::size_t x = 0; x < input_extents[1]; ++x) {
                map.counts[y * input_extents[1] + x] =
                    axis_counts[0][y] * axis_counts[1][x];
            }
        }
    }
    return map;
}

std::size_t ConvLayer::out_h() const {
    return (input_shape[1] - kernel_h()) / stride + 1;
}

std::size_t ConvLayer::out_w() const {
    return (input_shape[2] - kernel_w()) / stride + 1;
}

std::vector<std::size_t> ConvLayer::full_output_shape() const {
    return {out_channels(), out_h(), out_w()};
}

std::vector<std::size_t> ConvLayer::forward_output_shape() const {
    return {forward_channels, out_h(), out_w()};
}

ConvLayer make_conv_layer(Tensor kernel, Tensor bias, std::size_t stride,
                          double slope, std::size_t forward_channels,
                          std::vector<std::size_t> input_shape,
                          OverlapCorrection correction) {
    check_slope(slope);
    if (kernel.rank() != 4) {
        throw ShapeError("conv kernel must be rank 4 [C_out, C_in, KY, KX], got " +
                         shape_to_string(kernel.shape()));
    }
    const std::size_t c_out = kernel.extent(0);
    const std::size_t c_in = kernel.extent(1);
    const std::size_t ky = kernel.extent(2);
    const std::size_t kx = kernel.extent(3);
    if (c_out != c_in * ky * kx) {
        throw ShapeError(
            "invertibility constraint violated: C_out must equal C_in*KY*KX, got " +
            std::to_string(c_out) + " != " + std::to_string(c_in * ky * kx));
    }
    if (bias.rank() != 1 || bias.size() != c_out) {
        throw ShapeError("conv bias must be a vector of length C_out");
    }
    if (input_shape.size() != 3 || input_shape[0] != c_in) {
        throw ShapeError("conv input shape must be [C_in, IY, IX] with C_in = " +
                         std::to_string(c_in) + ", got " +
                         shape_to_string(input_shape));
    }
    if (forward_channels == 0 || forward_channels > c_out) {
        throw ShapeError("forward_channels must lie in [1, C_out], got " +
                         std::to_string(forward_channels));
    }

    ConvLayer layer;
    layer.kernel = std::move(kernel);
    layer.bias = std::move(bias);
    layer.stride = stride;
    layer.slope = slope;
    layer.forward_channels = forward_channels;
    layer.input_shape = std::move(input_shape);
    layer.correction = correction;
    layer.coverage = coverage_map({layer.input_shape[1], layer.input_shape[2]},
                                  {ky, kx}, stride);
    return layer;
}

ConvOut conv_forward(const ConvLayer& layer, const Tensor& x) {
    const BatchView v = batch_view(x, 3, "conv_forward");
    const std::size_t c_in = layer.in_channels();
    const std::size_t iy = layer.input_shape[1];
    const std::size_t ix = layer.input_shape[2];
    const std::vector<std::size_t> feature(
        x.shape().end() - 3, x.shape().end());
    if (feature != layer.input_shape) {
        throw ShapeError("conv_forward: input shape " + shape_to_string(feature) +
                         " does not match layer input " +
                         shape_to_string(layer.input_shape));
    }

    const std::size_t c_out = layer.out_channels();
    const std::size_t ky = layer.kernel_h();
    const std::size_t kx = layer.kernel_w();
    const std::size_t oy = layer.out_h();
    const std::size_t ox = layer.out_w();
    const std::size_t s = layer.stride;

    std::vector<std::size_t> out_shape =
        v.batched ? std::vector<std::size_t>{v.batch, c_out, oy, ox}
                  : std::vector<std::size_t>{c_out, oy, ox};
    Tensor z(out_shape);

    const double* k = layer.kernel.data();
    for (std::size_t n = 0; n < v.batch; ++n) {
        const double* xn = x.data() + n * c_in * iy * ix;
        double* zn = z.data() + n * c_out * oy * ox;
        for (std::size_t co = 0; co < c_out; ++co) {
            const double* kc = k + co * c_in * ky * kx;
            const double b = layer.bias[co];
            for (std::size_t y = 0; y < oy; ++y) {
                for (std::size_t xw = 0; xw < ox; ++xw) {
                    double acc = b;
                    for (std::size_t ci = 0; ci < c_in; ++ci) {
                        const double* xc = xn + ci * iy * ix;
                        const double* kk = kc + ci * ky * kx;
                        for (std::size_t dy = 0; dy < ky; ++dy) {
                            const double* row = xc + (y * s + dy) * ix + xw * s;
                            const double* krow = kk + dy * kx;
                            for (std::size_t dx = 0; dx < kx; ++dx) {
                                acc += krow[dx] * row[dx];
                            }
                        }
                    }
                    zn[co * oy * ox + y * ox + xw] = acc;
                }
            }
        }
    }
    z.set_precision(x.precision());
    z.ensure_finite("conv_forward");

    ConvOut out;
    out.a_full = leaky_relu(z, layer.slope);
    out.z_full = std::move(z);

    // Prefix-channel slice; auxiliary (trailing) channels stay in a_full only.
    const std::size_t fwd = layer.forward_channels;
    std::vector<std::size_t> fwd_shape =
        v.batched ? std::vector<std::size_t>{v.batch, fwd, oy, ox}
                  : std::vector<std::size_t>{fwd, oy, ox};
    Tensor a_fwd(fwd_shape);
    for (std::size_t n = 0; n < v.batch; ++n) {
        const double* src = out.a_full.data() + n * c_out * oy * ox;
        double* dst = a_fwd.data() + n * fwd * oy * ox;
        std::copy(src, src + fwd * oy * ox, dst);
    }
    a_fwd.set_precision(x.precision());
    out.a_fwd = std::move(a_fwd);
    return out;
}

Tensor invert_kernel(const Tensor& kernel, const std::string& layer_name) {
    if (kernel.rank() != 4) {
        throw ShapeError(with_name("invert_kernel: kernel must be rank 4",
                                   layer_name));
    }
    const std::size_t c_out = kernel.extent(0);
    const std::size_t patch =
        kernel.extent(1) * kernel.extent(2) * kernel.extent(3);
    if (c_out != patch) {
        throw ShapeError(with_name(
            "invert_kernel: reshaped kernel matrix is not square (" +
                std::to_string(c_out) + "x" + std::to_string(patch) + ")",
            layer_name));
    }
    Matrix m(kernel.reshaped({c_out, patch}));
    Matrix inv;
    try {
        inv = invert_square(transpose(m));
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(with_name(e.what(), layer_name));
    }
    return inv.tensor().reshaped(
        {c_out, kernel.extent(1), kernel.extent(2), kernel.extent(3)});
}

Tensor transposed_conv(const Tensor& v, const Tensor& kernel,
                       std::size_t stride,
                       const std::vector<std::size_t>& input_shape) {
    if (kernel.rank() != 4 || input_shape.size() != 3) {
        throw ShapeError("transposed_conv: kernel must be rank 4 and input "
                         "shape rank 3");
    }
    const BatchView bv = batch_view(v, 3, "transposed_conv");
    const std::size_t c_out = kernel.extent(0);
    const std::size_t c_in = kernel.extent(1);
    const std::size_t ky = kernel.extent(2);
    const std::size_t kx = kernel.extent(3);
    const std::size_t iy = input_shape[1];
    const std::size_t ix = input_shape[2];
    if (input_shape[0] != c_in) {
        throw ShapeError("transposed_conv: input channel mismatch");
    }
    if (v.extent(v.rank() - 3) != c_out) {
        throw ShapeError("transposed_conv: expected " + std::to_string(c_out) +
                         " channels, got " + std::to_string(v.extent(v.rank() - 3)));
    }
    const std::size_t oy = v.extent(v.rank() - 2);
    const std::size_t ox = v.extent(v.rank() - 1);
    if ((iy - ky) / stride + 1 != oy || (ix - kx) / stride + 1 != ox) {
        throw ShapeError("transposed_conv: output extents inconsistent with "
                         "input geometry");
    }

    std::vector<std::size_t> out_shape =
        bv.batched ? std::vector<std::size_t>{bv.batch, c_in, iy, ix}
                   : std::vector<std::size_t>{c_in, iy, ix};
    Tensor out(out_shape);

    const double* k = kernel.data();
    for (std::size_t n = 0; n < bv.batch; ++n) {
        const double* vn = v.data() + n * c_out * oy * ox;
        double* on = out.data() + n * c_in * iy * ix;
        for (std::size_t co = 0; co < c_out; ++co) {
            const double* kc = k + co * c_in * ky * kx;
            const double* vc = vn + co * oy * ox;
            for (std::size_t y = 0; y < oy; ++y) {
                for (std::size_t xw = 0; xw < ox; ++xw) {
                    const double val = vc[y * ox + xw];
                    if (val == 0.0) {
                        continue;
                    }
                    for (std::size_t ci = 0; ci < c_in; ++ci) {
                        double* oc = on + ci * iy * ix;
                        const double* kk = kc + ci * ky * kx;
                        for (std::size_t dy = 0; dy < ky; ++dy) {
                            double* row = oc + (y * stride + dy) * ix + xw * stride;
                            const double* krow = kk + dy * kx;
                            for (std::size_t dx = 0; dx < kx; ++dx) {
                                row[dx] += krow[dx] * val;
                            }
                        }
                    }
                }
            }
        }
    }
    out.set_precision(v.precision());
    return out;
}

Tensor conv_inverse(const ConvLayer& layer, const Tensor& a_full,
                    const Tensor& x, const std::string& layer_name) {
    const BatchView bv = batch_view(a_full, 3, "conv_inverse");
    const std::size_t c_out = layer.out_channels();
    const std::size_t channels = a_full.extent(a_full.rank() - 3);
    if (channels != c_out) {
        throw ShapeError(with_name(
            "auxiliary channels required for inversion: expected " +
                std::to_string(c_out) + " channels, got " +
                std::to_string(channels),
            layer_name));
    }
    const BatchView xv = batch_view(x, 3, "conv_inverse");
    if (xv.batch != bv.batch) {
        throw ShapeError(with_name("conv_inverse: batch mismatch between "
                                   "activations and cached input",
                                   layer_name));
    }
    const std::vector<std::size_t> xfeat(x.shape().end() - 3, x.shape().end());
    if (xfeat != layer.input_shape) {
        throw ShapeError(with_name("conv_inverse: cached input shape mismatch",
                                   layer_name));
    }

    // Eq.-style ordering: undo the activation, then the bias, then the
    // linear map (as a transposed convolution with the inverted kernel).
    Tensor u = leaky_relu_inverse(a_full, layer.slope);
    const std::size_t oy = layer.out_h();
    const std::size_t ox = layer.out_w();
    for (std::size_t n = 0; n < bv.batch; ++n) {
        double* un = u.data() + n * c_out * oy * ox;
        for (std::size_t co = 0; co < c_out; ++co) {
            const double b = layer.bias[co];
            double* uc = un + co * oy * ox;
            for (std::size_t i = 0; i < oy * ox; ++i) {
                uc[i] -= b;
            }
        }
    }

    const Tensor kinv = invert_kernel(layer.kernel, layer_name);
    Tensor xh = transposed_conv(u, kinv, layer.stride, layer.input_shape);

    // Overlapping receptive fields reconstruct each pixel once per covering
    // placement; correct with the cached forward signal (or divide).
    const std::size_t c_in = layer.in_channels();
    const std::size_t iy = layer.input_shape[1];
    const std::size_t ix = layer.input_shape[2];
    const int* counts = layer.coverage.counts.data();
    for (std::size_t n = 0; n < bv.batch; ++n) {
        double* xn = xh.data() + n * c_in * iy * ix;
        const double* fwd = x.data() + n * c_in * iy * ix;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            double* plane = xn + ci * iy * ix;
            const double* fplane = fwd + ci * iy * ix;
            for (std::size_t p = 0; p < iy * ix; ++p) {
                if (layer.correction == OverlapCorrection::subtract_forward) {
                    plane[p] -= fplane[p] * (counts[p] - 1);
                } else {
                    plane[p] /= counts[p];
                }
            }
        }
    }
    xh.set_precision(a_full.precision());
    xh.ensure_finite(with_name("conv_inverse", layer_name));
    return xh;
}

Tensor conv_weight_adjoint(const Tensor& delta, const Tensor& x,
                           const std::vector<std::size_t>& kernel_shape,
                           std::size_t stride) {
    const BatchView dv = batch_view(delta, 3, "conv_weight_adjoint");
    const BatchView xv = batch_view(x, 3, "conv_weight_adjoint");
    if (dv.batch != xv.batch) {
        throw ShapeError("conv_weight_adjoint: batch mismatch");
    }
    const std::size_t c_out = kernel_shape[0];
    const std::size_t c_in = kernel_shape[1];
    const std::size_t ky = kernel_shape[2];
    const std::size_t kx = kernel_shape[3];
    const std::size_t oy = delta.extent(delta.rank() - 2);
    const std::size_t ox = delta.extent(delta.rank() - 1);
    const std::size_t iy = x.extent(x.rank() - 2);
    const std::size_t ix = x.extent(x.rank() - 1);

    Tensor dk(std::vector<std::size_t>{c_out, c_in, ky, kx});
    for (std::size_t n = 0; n < dv.batch; ++n) {
        const double* dn = delta.data() + n * c_out * oy * ox;
        const double* xn = x.data() + n * c_in * iy * ix;
        for (std::size_t co = 0; co < c_out; ++co) {
            const double* dc = dn + co * oy * ox;
            for (std::size_t y = 0; y < oy; ++y) {
                for (std::size_t xw = 0; xw < ox; ++xw) {
                    const double d = dc[y * ox + xw];
                    if (d == 0.0) {
                        continue;
                    }
                    for (std::size_t ci = 0; ci < c_in; ++ci) {
                        const double* xc = xn + ci * iy * ix;
                        double* kk = dk.data() + (co * c_in + ci) * ky * kx;
                        for (std::size_t dy = 0; dy < ky; ++dy) {
                            const double* row = xc + (y * stride + dy) * ix +
                                                xw * stride;
                            double* krow = kk + dy * kx;
                            for (std::size_t dx = 0; dx < kx; ++dx) {
                                krow[dx] += d * row[dx];
                            }
                        }
                    }
                }
            }
        }
    }
    const double inv_batch = 1.0 / static_cast<double>(dv.batch);
    for (std::size_t i = 0; i < dk.size(); ++i) {
        dk[i] *= inv_batch;
    }
    return dk;
}

Network::Network(std::vector<std::size_t> input_shape, Precision precision)
    : input_shape_(std::move(input_shape)), precision_(precision) {
    if (input_shape_.empty()) {
        throw ShapeError("network input shape must be non-empty");
    }
    boundary_shapes_.push_back(input_shape_);
}

std::size_t Network::input_size() const {
    return shape_size(input_shape_);
}

std::size_t Network::output_size() const {
    if (layers_.empty()) {
        throw ShapeError("network has no layers");
    }
    return shape_size(boundary_shapes_.back());
}

const std::vector<std::size_t>& Network::layer_input_shape(std::size_t i) const {
    return boundary_shapes_.at(i);
}

const std::vector<std::size_t>& Network::layer_output_shape(std::size_t i) const {
    return boundary_shapes_.at(i + 1);
}

void Network::add(DenseLayer layer) {
    const std::size_t expected = shape_size(boundary_shapes_.back());
    if (layer.width() != expected) {
        throw ShapeError("dense layer width " + std::to_string(layer.width()) +
                         " does not match incoming size " +
                         std::to_string(expected));
    }
    layer.W.tensor().set_precision(precision_);
    layer.b.set_precision(precision_);
    boundary_shapes_.push_back({layer.width()});
    layers_.emplace_back(std::move(layer));
    bump_version();
}

void Network::add(ConvLayer layer) {
    if (layer.input_shape != boundary_shapes_.back()) {
        throw ShapeError("conv layer input " + shape_to_string(layer.input_shape) +
                         " does not match incoming shape " +
                         shape_to_string(boundary_shapes_.back()) +
                         " (conv layers must precede dense layers)");
    }
    layer.kernel.set_precision(precision_);
    layer.bias.set_precision(precision_);
    boundary_shapes_.push_back(layer.forward_output_shape());
    layers_.emplace_back(std::move(layer));
    bump_version();
}

ForwardCache Network::forward(const Tensor& x) const {
    if (layers_.empty()) {
        throw ShapeError("network has no layers");
    }
    const std::size_t feature_rank = input_shape_.size();
    const BatchView bv = batch_view(x, feature_rank, "Network::forward");
    const std::vector<std::size_t> feature(
        x.shape().end() - static_cast<long>(feature_rank), x.shape().end());
    if (feature != input_shape_) {
        throw ShapeError("Network::forward: input shape " +
                         shape_to_string(feature) + " does not match " +
                         shape_to_string(input_shape_));
    }

    ForwardCache cache;
    cache.version = version_;
    cache.batch = bv.batch;
    cache.input = x;
    if (!bv.batched) {
        std::vector<std::size_t> shape = {1};
        shape.insert(shape.end(), input_shape_.begin(), input_shape_.end());
        cache.input = x.reshaped(shape);
    }
    cache.input.set_precision(precision_);

    Tensor cur = cache.input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerCache lc;
        if (const auto* dense = std::get_if<DenseLayer>(&layers_[i])) {
            Tensor flat = cur.reshaped({bv.batch, dense->width()});
            DenseOut out = dense_forward(*dense, flat);
            lc.z = std::move(out.z);
            lc.a_full = out.a;
            lc.a_fwd = std::move(out.a);
        } else {
            const auto& conv = std::get<ConvLayer>(layers_[i]);
            std::vector<std::size_t> shape = {bv.batch};
            shape.insert(shape.end(), conv.input_shape.begin(),
                         conv.input_shape.end());
            ConvOut out = conv_forward(conv, cur.reshaped(shape));
            lc.z = std::move(out.z_full);
            lc.a_full = std::move(out.a_full);
            lc.a_fwd = std::move(out.a_fwd);
        }
        cur = lc.a_fwd;
        cache.layers.push_back(std::move(lc));
    }
    cache.logits = cur.reshaped({bv.batch, output_size()});
    return cache;
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (Layer& l : layers_) {
        if (auto* dense = std::get_if<DenseLayer>(&l)) {
            out.push_back(&dense->W.tensor());
            out.push_back(&dense->b);
        } else {
            auto& conv = std::get<ConvLayer>(l);
            out.push_back(&conv.kernel);
            out.push_back(&conv.bias);
        }
    }
    return out;
}

std::vector<const Tensor*> Network::parameters() const {
    std::vector<const Tensor*> out;
    for (const Layer& l : layers_) {
        if (const auto* dense = std::get_if<DenseLayer>(&l)) {
            out.push_back(&dense->W.tensor());
            out.push_back(&dense->b);
        } else {
            const auto& conv = std::get<ConvLayer>(l);
            out.push_back(&conv.kernel);
            out.push_back(&conv.bias);
        }
    }
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : parameters()) {
        n += t->size();
    }
    return n;
}

}  // namespace invnet
