#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invnet/layers.hpp"
#include "invnet/rng.hpp"
#include "oracles.hpp"

using namespace invnet;

namespace {

DenseLayer random_dense(std::size_t n, std::uint64_t seed, double slope = 0.1) {
    Tensor b = oracles::random_tensor({n}, mix_seed(seed, 1), 0.3);
    return make_dense_layer(orthogonal_init(n, seed), b, slope);
}

ConvLayer random_conv(std::size_t c_in, std::size_t k, std::size_t stride,
                      std::size_t iy, std::size_t ix, std::size_t fwd,
                      std::uint64_t seed, double slope = 0.1) {
    Tensor kernel = oracles::random_invertible_kernel(c_in, k, k, seed);
    const std::size_t c_out = kernel.extent(0);
    Tensor bias = oracles::random_tensor({c_out}, mix_seed(seed, 2), 0.2);
    return make_conv_layer(kernel, bias, stride, slope,
                           fwd == 0 ? c_out : fwd, {c_in, iy, ix});
}

}  // namespace

TEST_CASE("leaky_relu family on pinned values") {
    const Tensor z = Tensor::from_values({3}, {2.0, -1.0, 0.0});
    Tensor a = leaky_relu(z, 0.01);
    CHECK(a[0] == 2.0);
    CHECK(a[1] == -0.01);
    CHECK(a[2] == 0.0);

    Tensor inv = leaky_relu_inverse(Tensor::from_values({2}, {-0.01, 5.0}), 0.01);
    CHECK(inv[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(inv[1] == 5.0);

    CHECK_THROWS_AS(leaky_relu(z, 0.0), ShapeError);
}

TEST_CASE("leaky_relu inverse round trip is bit exact") {
    // The pair divides by the exact slope that multiplied, so the round trip
    // is exact whenever slope is a power of two.
    Tensor z = oracles::random_tensor({64}, 99);
    Tensor back = leaky_relu_inverse(leaky_relu(z, 0.125), 0.125);
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(back[i] == z[i]);
    }
    // general slopes recover within rounding
    Tensor b2 = leaky_relu_inverse(leaky_relu(z, 0.1), 0.1);
    CHECK(max_abs_diff(b2, z) <= 1e-15);
}

TEST_CASE("activation_derivative uses the z >= 0 convention") {
    Tensor d = activation_derivative(Tensor::from_values({2}, {2.0, -3.0}), 0.01);
    CHECK(d[0] == 1.0);
    CHECK(d[1] == 0.01);
    CHECK(activation_derivative(Tensor({1}, 0.0), 0.01)[0] == 1.0);
    Tensor pos = activation_derivative(Tensor({5}, 3.0), 0.3);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        CHECK(pos[i] == 1.0);
    }
}

TEST_CASE("dense_forward on pinned examples") {
    DenseLayer id = make_dense_layer(identity(2), Tensor({2}, 0.0), 0.5);
    DenseOut out = id.W.rows() ? dense_forward(id, Tensor::from_values({2}, {1.0, -1.0}))
                               : DenseOut{};
    CHECK(out.z[0] == 1.0);
    CHECK(out.z[1] == -1.0);
    CHECK(out.a[0] == 1.0);
    CHECK(out.a[1] == -0.5);

    Matrix two = identity(2);
    two(0, 0) = 2.0;
    two(1, 1) = 2.0;
    DenseLayer scale = make_dense_layer(two, Tensor({2}, 1.0), 0.5);
    DenseOut out2 = dense_forward(scale, Tensor({2}, 0.0));
    CHECK(out2.z[0] == 1.0);
    CHECK(out2.a[0] == 1.0);
    CHECK(out2.a[1] == 1.0);

    CHECK_THROWS_AS(dense_forward(id, Tensor({3}, 0.0)), ShapeError);
}

TEST_CASE("dense_forward matches the scalar-loop oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        DenseLayer layer = random_dense(7, seed, 0.2);
        Tensor x = oracles::random_tensor({7}, mix_seed(seed, 9));
        DenseOut out = dense_forward(layer, x);
        std::vector<double> expect = oracles::dense_layer_by_hand(
            layer.W, std::vector<double>(layer.b.data(), layer.b.data() + 7),
            std::vector<double>(x.data(), x.data() + 7), 0.2);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(out.a[i] == doctest::Approx(expect[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("dense_inverse undoes dense_forward") {
    DenseLayer id = make_dense_layer(identity(2), Tensor({2}, 0.0), 0.5);
    Tensor back = dense_inverse(id, Tensor::from_values({2}, {1.0, -0.5}));
    CHECK(back[0] == 1.0);
    CHECK(back[1] == doctest::Approx(-1.0).epsilon(1e-14));

    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        DenseLayer layer = random_dense(9, seed);
        Tensor x = oracles::random_tensor({9}, mix_seed(seed, 10));
        DenseOut out = dense_forward(layer, x);
        Tensor rec = dense_inverse(layer, out.a);
        CHECK(max_abs_diff(rec, x) <= 1e-8);
    }
}

TEST_CASE("dense_inverse of an orthogonal layer equals the transpose route") {
    DenseLayer layer = random_dense(6, 21, 0.1);
    Tensor a = oracles::random_tensor({6}, 22);
    Tensor inv = dense_inverse(layer, a);

    // Independent route: W^T (f^-1(a) - b) with hand loops.
    std::vector<double> u(6);
    for (std::size_t i = 0; i < 6; ++i) {
        const double v = a[i] >= 0.0 ? a[i] : a[i] / 0.1;
        u[i] = v - layer.b[i];
    }
    for (std::size_t c = 0; c < 6; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < 6; ++r) {
            acc += layer.W(r, c) * u[r];
        }
        CHECK(inv[c] == doctest::Approx(acc).epsilon(1e-8));
    }
}

TEST_CASE("dense_inverse names the layer on singular weights") {
    Matrix w(2, 2);  // all zeros
    DenseLayer layer;
    layer.W = w;
    layer.b = Tensor({2}, 0.0);
    layer.slope = 0.1;
    try {
        dense_inverse(layer, Tensor({2}, 1.0), "layer 3");
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
    }
}

TEST_CASE("coverage_map on pinned geometries") {
    CoverageMap c1 = coverage_map({4}, {2}, 1);
    CHECK(c1.counts == std::vector<int>{1, 2, 2, 1});

    CoverageMap c2 = coverage_map({6}, {2}, 2);
    CHECK(c2.counts == std::vector<int>{1, 1, 1, 1, 1, 1});

    CoverageMap c3 = coverage_map({4, 4}, {2, 2}, 1);
    CHECK(c3.counts[0] == 1);                  // corner
    CHECK(c3.counts[1] == 2);                  // edge
    CHECK(c3.counts[1 * 4 + 1] == 4);          // interior
    CHECK(c3.counts[3 * 4 + 3] == 1);          // far corner
    int total = 0;
    for (int v : c3.counts) {
        total += v;
    }
    CHECK(total == 9 * 4);  // 9 placements, each covering 4 cells

    CHECK_THROWS_AS(coverage_map({5}, {2}, 2), ShapeError);   // no exact tiling
    CHECK_THROWS_AS(coverage_map({4}, {2}, 3), ShapeError);   // stride > kernel
}

TEST_CASE("invert_kernel on pinned and derived cases") {
    Tensor scalar = Tensor::from_values({1, 1, 1, 1}, {2.0});
    CHECK(invert_kernel(scalar)[0] == doctest::Approx(0.5).epsilon(1e-14));

    // Orthogonal reshape matrix: (M^T)^-1 = M, so inversion is a fixed point.
    Tensor ortho = orthogonal_init(8, 5).tensor().reshaped({8, 2, 2, 2});
    CHECK(max_abs_diff(invert_kernel(ortho), ortho) <= 1e-8);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Tensor k = oracles::random_invertible_kernel(2, 2, 2, seed);
        Tensor twice = invert_kernel(invert_kernel(k));
        CHECK(max_abs_diff(twice, k) <= 1e-6);
    }

    CHECK_THROWS_AS(invert_kernel(Tensor({3, 1, 1, 1}, 1.0)), ShapeError);
}

TEST_CASE("conv_forward degenerates to a pointwise map for 1x1 kernels") {
    Tensor kernel = Tensor::from_values({1, 1, 1, 1}, {0.7});
    Tensor bias = Tensor::from_values({1}, {0.2});
    ConvLayer layer = make_conv_layer(kernel, bias, 1, 0.1, 1, {1, 3, 3});
    Tensor x = oracles::random_tensor({1, 3, 3}, 4);
    ConvOut out = conv_forward(layer, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = 0.7 * x[i] + 0.2;
        CHECK(out.z_full[i] == doctest::Approx(z).epsilon(1e-14));
        CHECK(out.a_full[i] == doctest::Approx(z >= 0 ? z : 0.1 * z));
    }
}

TEST_CASE("conv_forward matches the nested-loop oracle") {
    struct Geometry {
        std::size_t c_in, k, stride, iy, ix;
    };
    const Geometry cases[] = {
        {1, 2, 1, 6, 6}, {1, 2, 2, 6, 6}, {2, 2, 1, 5, 7},
        {1, 3, 1, 8, 8}, {2, 3, 3, 9, 6}, {4, 2, 2, 8, 8},
    };
    std::uint64_t seed = 31;
    for (const Geometry& g : cases) {
        ConvLayer layer = random_conv(g.c_in, g.k, g.stride, g.iy, g.ix, 0,
                                      ++seed);
        Tensor x = oracles::random_tensor({g.c_in, g.iy, g.ix},
                                          mix_seed(seed, 3));
        ConvOut out = conv_forward(layer, x);
        Tensor expect = oracles::conv_by_hand(x, layer.kernel, layer.bias,
                                              g.stride);
        CHECK(max_abs_diff(out.z_full, expect) <= 1e-10);
    }
}

TEST_CASE("forward slice keeps the channel prefix") {
    ConvLayer layer = random_conv(1, 2, 2, 4, 4, 4, 77);
    Tensor x = oracles::random_tensor({1, 4, 4}, 78);
    ConvOut all = conv_forward(layer, x);
    CHECK(all.a_fwd.same_shape(all.a_full));
    CHECK(max_abs_diff(all.a_fwd, all.a_full) == 0.0);

    ConvLayer sliced = random_conv(1, 2, 2, 4, 4, 2, 77);
    ConvOut some = conv_forward(sliced, x);
    CHECK(some.a_fwd.extent(0) == 2);
    for (std::size_t i = 0; i < some.a_fwd.size(); ++i) {
        CHECK(some.a_fwd[i] == some.a_full[i]);
    }
}

TEST_CASE("conv_inverse reconstructs for non-overlapping strides") {
    ConvLayer layer = random_conv(2, 2, 2, 6, 6, 0, 101);
    for (int c : layer.coverage.counts) {
        CHECK(c == 1);  // correction term vanishes
    }
    Tensor x = oracles::random_tensor({2, 6, 6}, 102);
    ConvOut out = conv_forward(layer, x);
    Tensor rec = conv_inverse(layer, out.a_full, x);
    CHECK(max_abs_diff(rec, x) <= 1e-8);
}

TEST_CASE("conv_inverse reconstructs with overlapping receptive fields") {
    ConvLayer layer = random_conv(1, 2, 1, 8, 8, 0, 103);
    Tensor x = oracles::random_tensor({1, 8, 8}, 104);
    ConvOut out = conv_forward(layer, x);
    Tensor rec = conv_inverse(layer, out.a_full, x);
    CHECK(max_abs_diff(rec, x) <= 1e-8);
}

TEST_CASE("conv_inverse divide variant also reconstructs the input") {
    Tensor kernel = oracles::random_invertible_kernel(1, 2, 2, 105);
    Tensor bias = oracles::random_tensor({4}, 106, 0.2);
    ConvLayer layer = make_conv_layer(kernel, bias, 1, 0.1, 4, {1, 6, 6},
                                      OverlapCorrection::divide);
    Tensor x = oracles::random_tensor({1, 6, 6}, 107);
    ConvOut out = conv_forward(layer, x);
    Tensor rec = conv_inverse(layer, out.a_full, x);
    CHECK(max_abs_diff(rec, x) <= 1e-8);
}

TEST_CASE("auxiliary channels are required but forward slicing loses nothing") {
    ConvLayer layer = random_conv(1, 2, 1, 8, 8, 2, 109);  // 2 of 4 forwarded
    Tensor x = oracles::random_tensor({1, 8, 8}, 110);
    ConvOut out = conv_forward(layer, x);

    Tensor rec = conv_inverse(layer, out.a_full, x);
    CHECK(max_abs_diff(rec, x) <= 1e-8);

    try {
        conv_inverse(layer, out.a_fwd, x, "layer 1");
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find(
                  "auxiliary channels required for inversion") !=
              std::string::npos);
    }
}

TEST_CASE("conv_inverse is linear in the positive-activation regime") {
    Tensor kernel = oracles::random_invertible_kernel(1, 2, 2, 111);
    Tensor bias = Tensor({4}, 5.0);  // lifts every pre-activation above zero
    ConvLayer layer = make_conv_layer(kernel, bias, 1, 0.1, 4, {1, 5, 5});
    Tensor x = oracles::random_tensor({1, 5, 5}, 112, 0.3);
    ConvOut out = conv_forward(layer, x);
    for (std::size_t i = 0; i < out.z_full.size(); ++i) {
        REQUIRE(out.z_full[i] > 0.0);
    }

    Tensor perturbed = out.a_full;
    Tensor delta(out.a_full.shape());
    delta[3] = 0.25;  // a single output-channel entry
    perturbed[3] += 0.25;

    Tensor base = conv_inverse(layer, out.a_full, x);
    Tensor moved = conv_inverse(layer, perturbed, x);
    Tensor diff = sub(moved, base);

    Tensor expect = oracles::transposed_conv_by_hand(
        delta, invert_kernel(layer.kernel), 1, 5, 5);
    CHECK(max_abs_diff(diff, expect) <= 1e-10);
}

TEST_CASE("universal round trip across layer types and precisions") {
    // dense
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        DenseLayer layer = random_dense(8, seed);
        Tensor x = oracles::random_tensor({8}, mix_seed(seed, 40));
        CHECK(max_abs_diff(dense_inverse(layer, dense_forward(layer, x).a), x) <=
              1e-8);
    }
    // conv, overlapping and not, with and without auxiliaries
    struct Geometry {
        std::size_t c_in, k, stride, iy, ix, fwd;
    };
    const Geometry cases[] = {
        {1, 2, 1, 6, 6, 0}, {1, 2, 2, 6, 6, 0}, {2, 2, 1, 6, 6, 4},
        {1, 3, 1, 7, 7, 5}, {2, 3, 3, 9, 9, 0},
    };
    std::uint64_t seed = 300;
    for (const Geometry& g : cases) {
        ConvLayer layer = random_conv(g.c_in, g.k, g.stride, g.iy, g.ix, g.fwd,
                                      ++seed);
        Tensor x = oracles::random_tensor({g.c_in, g.iy, g.ix},
                                          mix_seed(seed, 41));
        ConvOut out = conv_forward(layer, x);
        CHECK(max_abs_diff(conv_inverse(layer, out.a_full, x), x) <= 1e-8);
    }
}

TEST_CASE("f32 round trip degrades gracefully") {
    DenseLayer layer = random_dense(16, 5);
    layer.W.tensor().set_precision(Precision::f32);
    layer.b.set_precision(Precision::f32);
    Tensor x = oracles::random_tensor({16}, 6);
    x.set_precision(Precision::f32);
    DenseOut out = dense_forward(layer, x);
    Tensor rec = dense_inverse(layer, out.a);
    const double err = max_abs_diff(rec, x);
    CHECK(err <= 1e-3);
    CHECK(err > 1e-9);  // visibly single-precision
}

TEST_CASE("network wires conv into dense and checks shapes") {
    Network net({1, 6, 6});
    net.add(random_conv(1, 2, 2, 6, 6, 2, 400));      // -> [2, 3, 3]
    Tensor w = orthogonal_init(18, 401).tensor();
    net.add(make_dense_layer(Matrix(w), Tensor({18}, 0.0), 0.1));
    CHECK(net.output_size() == 18);

    Tensor x = oracles::random_tensor({2, 1, 6, 6}, 402);
    ForwardCache cache = net.forward(x);
    CHECK(cache.batch == 2);
    CHECK(cache.layers.size() == 2);
    CHECK(cache.logits.shape() == std::vector<std::size_t>{2, 18});
    CHECK(cache.version == net.version());

    // stale-cache detection
    net.bump_version();
    CHECK(cache.version != net.version());

    // dense that does not match the incoming size
    Network bad({1, 6, 6});
    bad.add(random_conv(1, 2, 2, 6, 6, 2, 403));
    CHECK_THROWS_AS(
        bad.add(make_dense_layer(Matrix(orthogonal_init(5, 1)),
                                 Tensor({5}, 0.0), 0.1)),
        ShapeError);

    // conv after dense is rejected
    Network bad2({4});
    bad2.add(make_dense_layer(Matrix(orthogonal_init(4, 2)), Tensor({4}, 0.0),
                              0.1));
    CHECK_THROWS_AS(bad2.add(random_conv(1, 2, 2, 2, 2, 0, 404)), ShapeError);
}

TEST_CASE("conv constructor validates the invertibility constraint") {
    Tensor kernel({3, 1, 2, 2}, 0.5);  // C_out != C_in*KY*KX
    CHECK_THROWS_AS(
        make_conv_layer(kernel, Tensor({3}, 0.0), 1, 0.1, 3, {1, 4, 4}),
        ShapeError);

    Tensor ok = oracles::random_invertible_kernel(1, 2, 2, 1);
    CHECK_THROWS_AS(
        make_conv_layer(ok, Tensor({4}, 0.0), 1, 0.1, 0, {1, 4, 4}),
        ShapeError);  // forward_channels = 0
    CHECK_THROWS_AS(
        make_conv_layer(ok, Tensor({4}, 0.0), 2, 0.1, 4, {1, 5, 4}),
        ShapeError);  // (5 - 2) % 2 != 0: no exact tiling on rows
}

TEST_CASE("layer ops reject non-finite values") {
    DenseLayer layer = random_dense(4, 9);
    Tensor x({4}, 0.0);
    x[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(dense_forward(layer, x), NumericError);
}
