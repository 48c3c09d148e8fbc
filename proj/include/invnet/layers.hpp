#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "invnet/linalg.hpp"
#include "invnet/tensor.hpp"

namespace invnet {

// Leaky-ReLU activation family. `slope` is the negative-branch slope and must
// be positive so the activation is invertible on all of R. The derivative at
// exactly zero is taken as 1 (the z >= 0 branch).
Tensor leaky_relu(const Tensor& z, double slope);
Tensor leaky_relu_inverse(const Tensor& a, double slope);
Tensor activation_derivative(const Tensor& z, double slope);

/// Square fully connected layer: a = f(W a_prev + b).
struct DenseLayer {
    Matrix W;          // n x n
    Tensor b;          // [n]
    double slope = 0.1;

    std::size_t width() const { return b.size(); }
};

DenseLayer make_dense_layer(Matrix W, Tensor b, double slope);

/// Per-input-position count of covering receptive fields. Depends only on
/// geometry, never on data.
struct CoverageMap {
    std::vector<std::size_t> shape;  // spatial extents
    std::vector<int> counts;         // row-major, every entry >= 1
};

/// Counts, for every position of a spatial input, how many kernel placements
/// cover it. Supports rank-1 and rank-2 spatial shapes. The geometry must
/// tile exactly: (extent - kernel) % stride == 0 on every axis.
CoverageMap coverage_map(const std::vector<std::size_t>& input_extents,
                         const std::vector<std::size_t>& kernel_extents,
                         std::size_t stride);

enum class OverlapCorrection {
    subtract_forward,  // x_hat -= x .* (n_x - 1): preserves feedback signal
    divide,            // x_hat /= n_x: averages feedback across receptive fields
};

/// Invertible convolution. The reshaped kernel matrix is square
/// (C_out == C_in * KY * KX). Output channels beyond `forward_channels` are
/// auxiliary: they do not feed the next layer but must be kept for inversion.
struct ConvLayer {
    Tensor kernel;  // [C_out, C_in, KY, KX]
    Tensor bias;    // [C_out]
    std::size_t stride = 1;
    double slope = 0.1;
    std::size_t forward_channels = 0;
    std::vector<std::size_t> input_shape;  // [C_in, IY, IX]
    CoverageMap coverage;
    OverlapCorrection correction = OverlapCorrection::subtract_forward;

    std::size_t out_channels() const { return kernel.extent(0); }
    std::size_t in_channels() const { return kernel.extent(1); }
    std::size_t kernel_h() const { return kernel.extent(2); }
    std::size_t kernel_w() const { return kernel.extent(3); }
    std::size_t out_h() const;
    std::size_t out_w() const;
    std::vector<std::size_t> full_output_shape() const;     // [C_out, OY, OX]
    std::vector<std::size_t> forward_output_shape() const;  // [fwd, OY, OX]
};

/// Validates every geometry constraint and precomputes the coverage map.
ConvLayer make_conv_layer(Tensor kernel, Tensor bias, std::size_t stride,
                          double slope, std::size_t forward_channels,
                          std::vector<std::size_t> input_shape,
                          OverlapCorrection correction =
                              OverlapCorrection::subtract_forward);

struct DenseOut {
    Tensor z;
    Tensor a;
};

// Dense ops accept a single sample [n] or a batch [N, n].
DenseOut dense_forward(const DenseLayer& layer, const Tensor& a_prev);
Tensor dense_inverse(const DenseLayer& layer, const Tensor& a,
                     const std::string& layer_name = {});

/// Reshapes the kernel to its square matrix, transposes, inverts, reshapes
/// back. Applying twice returns the original kernel (up to rounding).
Tensor invert_kernel(const Tensor& kernel, const std::string& layer_name = {});

struct ConvOut {
    Tensor z_full;
    Tensor a_full;
    Tensor a_fwd;
};

// Conv ops accept a single sample [C, H, W] or a batch [N, C, H, W].
ConvOut conv_forward(const ConvLayer& layer, const Tensor& x);

/// Reconstructs the layer input from the full (auxiliary-inclusive) output.
/// `x` is the cached forward input, consumed by the overlap correction.
Tensor conv_inverse(const ConvLayer& layer, const Tensor& a_full,
                    const Tensor& x, const std::string& layer_name = {});

/// Adjoint of the forward cross-correlation: scatters `v` [.., C_out, OY, OX]
/// back through `kernel` onto an input-shaped tensor [.., C_in, IY, IX].
Tensor transposed_conv(const Tensor& v, const Tensor& kernel,
                       std::size_t stride,
                       const std::vector<std::size_t>& input_shape);

/// Weight adjoint of the convolution: accumulates d(kernel) from an output
/// delta and the layer input, averaged over the batch.
Tensor conv_weight_adjoint(const Tensor& delta, const Tensor& x,
                           const std::vector<std::size_t>& kernel_shape,
                           std::size_t stride);

using Layer = std::variant<DenseLayer, ConvLayer>;

struct LayerCache {
    Tensor z;       // pre-activation, full channels
    Tensor a_full;  // post-activation, full channels
    Tensor a_fwd;   // forwarded slice (prefix channels)
};

/// Everything one training step needs to run any backward pass: the network
/// input plus per-layer pre-activations and (full and sliced) activations.
struct ForwardCache {
    Tensor input;
    std::vector<LayerCache> layers;
    Tensor logits;  // flattened forward output of the last layer, [N, out]
    std::uint64_t version = 0;
    std::size_t batch = 0;
};

/// An ordered stack of invertible layers. Layer shapes are validated as they
/// are added; a version counter detects stale caches after parameter updates.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<std::size_t> input_shape,
                     Precision precision = Precision::f64);

    void add(DenseLayer layer);
    void add(ConvLayer layer);

    std::size_t depth() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return layers_.at(i); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::size_t input_size() const;
    std::size_t output_size() const;

    /// Feature shape of layer i's input (network input shape for i == 0).
    const std::vector<std::size_t>& layer_input_shape(std::size_t i) const;
    /// Feature shape of layer i's forwarded output.
    const std::vector<std::size_t>& layer_output_shape(std::size_t i) const;

    Precision precision() const { return precision_; }
    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

    /// Forward pass over [N, ...input] or [...input]; the cache is batched.
    ForwardCache forward(const Tensor& x) const;

    /// Weight and bias tensors in layer order: W/kernel, then b/bias.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;

private:
    std::vector<Layer> layers_;
    std::vector<std::size_t> input_shape_;
    std::vector<std::vector<std::size_t>> boundary_shapes_;  // depth+1 entries
    Precision precision_ = Precision::f64;
    std::uint64_t version_ = 0;
};

}  // namespace invnet
