// Independent reference implementations used to check the library. These are
// deliberately written as plain nested loops, sharing no code with the
// implementation paths they verify.
#pragma once

#include <cstddef>
#include <vector>

#include "invnet/linalg.hpp"
#include "invnet/rng.hpp"
#include "invnet/tensor.hpp"

namespace oracles {

inline invnet::Tensor random_tensor(std::vector<std::size_t> shape,
                                    std::uint64_t seed, double scale = 1.0) {
    invnet::Rng rng(seed);
    invnet::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = scale * rng.normal();
    }
    return t;
}

// Direct per-element evaluation of f(W x + b) with leaky-ReLU.
inline std::vector<double> dense_layer_by_hand(
    const invnet::Matrix& w, const std::vector<double>& b,
    const std::vector<double>& x, double slope) {
    const std::size_t n = b.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double z = b[r];
        for (std::size_t c = 0; c < n; ++c) {
            z += w(r, c) * x[c];
        }
        out[r] = z >= 0.0 ? z : slope * z;
    }
    return out;
}

// Brute-force valid cross-correlation with bias, no activation:
// z[co, oy, ox] = bias[co] + sum_ci sum_ky sum_kx k[co,ci,ky,kx] *
//                 x[ci, oy*s+ky, ox*s+kx]
inline invnet::Tensor conv_by_hand(const invnet::Tensor& x,
                                   const invnet::Tensor& kernel,
                                   const invnet::Tensor& bias,
                                   std::size_t stride) {
    const std::size_t c_out = kernel.extent(0);
    const std::size_t c_in = kernel.extent(1);
    const std::size_t ky = kernel.extent(2);
    const std::size_t kx = kernel.extent(3);
    const std::size_t iy = x.extent(1);
    const std::size_t ix = x.extent(2);
    const std::size_t oy = (iy - ky) / stride + 1;
    const std::size_t ox = (ix - kx) / stride + 1;

    invnet::Tensor z(std::vector<std::size_t>{c_out, oy, ox});
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t y = 0; y < oy; ++y) {
            for (std::size_t w = 0; w < ox; ++w) {
                double acc = bias[co];
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    for (std::size_t dy = 0; dy < ky; ++dy) {
                        for (std::size_t dx = 0; dx < kx; ++dx) {
                            const double kv =
                                kernel[((co * c_in + ci) * ky + dy) * kx + dx];
                            const double xv =
                                x[(ci * iy + y * stride + dy) * ix +
                                  w * stride + dx];
                            acc += kv * xv;
                        }
                    }
                }
                z[(co * oy + y) * ox + w] = acc;
            }
        }
    }
    return z;
}

// Brute-force scatter adjoint of the cross-correlation above.
inline invnet::Tensor transposed_conv_by_hand(
    const invnet::Tensor& v, const invnet::Tensor& kernel, std::size_t stride,
    std::size_t iy, std::size_t ix) {
    const std::size_t c_out = kernel.extent(0);
    const std::size_t c_in = kernel.extent(1);
    const std::size_t ky = kernel.extent(2);
    const std::size_t kx = kernel.extent(3);
    const std::size_t oy = v.extent(1);
    const std::size_t ox = v.extent(2);

    invnet::Tensor out(std::vector<std::size_t>{c_in, iy, ix});
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t y = 0; y < oy; ++y) {
            for (std::size_t w = 0; w < ox; ++w) {
                const double val = v[(co * oy + y) * ox + w];
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    for (std::size_t dy = 0; dy < ky; ++dy) {
                        for (std::size_t dx = 0; dx < kx; ++dx) {
                            out[(ci * iy + y * stride + dy) * ix + w * stride +
                                dx] +=
                                kernel[((co * c_in + ci) * ky + dy) * kx + dx] *
                                val;
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Well-conditioned random square kernel: an orthogonal reshape matrix plus a
// small random perturbation.
inline invnet::Tensor random_invertible_kernel(std::size_t c_in, std::size_t ky,
                                               std::size_t kx,
                                               std::uint64_t seed,
                                               double perturbation = 0.1) {
    const std::size_t c_out = c_in * ky * kx;
    invnet::Matrix q = invnet::orthogonal_init(c_out, seed);
    invnet::Rng rng(invnet::mix_seed(seed, 77));
    for (std::size_t i = 0; i < q.tensor().size(); ++i) {
        q.tensor()[i] += perturbation * rng.normal();
    }
    return q.tensor().reshaped({c_out, c_in, ky, kx});
}

}  // namespace oracles
