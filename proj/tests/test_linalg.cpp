#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invnet/linalg.hpp"
#include "invnet/rng.hpp"
#include "oracles.hpp"

using namespace invnet;

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
    CHECK_THROWS_AS(t.reshaped({5}), ShapeError);

    t[0] = std::nan("");
    CHECK_THROWS_AS(t.ensure_finite("test"), NumericError);
}

TEST_CASE("f32 tensors are stored at single precision") {
    Tensor t = Tensor::from_values({2}, {1.0 / 3.0, 2.0 / 3.0});
    t.set_precision(Precision::f32);
    CHECK(t[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(t[0] != 1.0 / 3.0);
    CHECK(t[0] == static_cast<double>(static_cast<float>(1.0 / 3.0)));
}

TEST_CASE("orthogonal_init 1x1 is a unit") {
    for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
        Matrix q = orthogonal_init(1, seed);
        CHECK(std::fabs(q(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
        Matrix qqt = matmul(q, transpose(q));
        CHECK(qqt(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("orthogonal_init satisfies Q Q^T = I") {
    Matrix q = orthogonal_init(4, 7);
    CHECK(orthogonality_residual(q) <= 1e-10);
    Matrix big = orthogonal_init(64, 3);
    CHECK(orthogonality_residual(big) <= 1e-10);
}

TEST_CASE("orthogonal_init is deterministic per seed") {
    Matrix a = orthogonal_init(4, 7);
    Matrix b = orthogonal_init(4, 7);
    for (std::size_t i = 0; i < a.tensor().size(); ++i) {
        CHECK(a.tensor()[i] == b.tensor()[i]);
    }
    Matrix c = orthogonal_init(4, 8);
    CHECK(max_abs_diff(a.tensor(), c.tensor()) > 1e-3);
}

TEST_CASE("orthogonal_init has unit determinant magnitude") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Matrix q = orthogonal_init(6, seed);
        CHECK(std::fabs(std::fabs(determinant(q)) - 1.0) <= 1e-8);
    }
}

TEST_CASE("orthogonal_init rejects n = 0") {
    CHECK_THROWS_AS(orthogonal_init(0, 1), ShapeError);
}

TEST_CASE("invert_square handles identity and diagonals") {
    Matrix i3 = identity(3);
    Matrix inv = invert_square(i3);
    CHECK(max_abs_diff(inv.tensor(), i3.tensor()) == 0.0);

    Matrix d(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    Matrix dinv = invert_square(d);
    CHECK(dinv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(dinv(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(dinv(0, 1) == 0.0);
}

TEST_CASE("inverse of an orthogonal matrix equals its transpose") {
    Matrix q = orthogonal_init(8, 3);
    Matrix inv = invert_square(q);
    Matrix qt = transpose(q);
    CHECK(max_abs_diff(inv.tensor(), qt.tensor()) <= 1e-8);
}

TEST_CASE("invert_square residual stays small") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Matrix q = orthogonal_init(12, seed);
        Rng rng(mix_seed(seed, 5));
        for (std::size_t i = 0; i < q.tensor().size(); ++i) {
            q.tensor()[i] += 0.05 * rng.normal();
        }
        Matrix inv = invert_square(q);
        Matrix prod = matmul(q, inv);
        Matrix i = identity(12);
        CHECK(max_abs_diff(prod.tensor(), i.tensor()) <= 1e-8);
    }
}

TEST_CASE("invert_square is an involution on well-conditioned input") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        Matrix m = orthogonal_init(9, seed);
        Rng rng(mix_seed(seed, 6));
        for (std::size_t i = 0; i < m.tensor().size(); ++i) {
            m.tensor()[i] += 0.1 * rng.normal();
        }
        Matrix twice = invert_square(invert_square(m));
        CHECK(max_abs_diff(twice.tensor(), m.tensor()) <= 1e-6);
    }
}

TEST_CASE("invert_square leaves its input unmodified") {
    Matrix m = orthogonal_init(5, 11);
    Matrix copy = m;
    (void)invert_square(m);
    CHECK(max_abs_diff(m.tensor(), copy.tensor()) == 0.0);
}

TEST_CASE("invert_square rejects singular and near-singular input") {
    Matrix z(3, 3);
    CHECK_THROWS_AS(invert_square(z), SingularMatrixError);

    Matrix near = identity(2);
    near(1, 1) = 1e-13;  // condition estimate ~1e13 > the 1e12 cap
    CHECK_THROWS_AS(invert_square(near), SingularMatrixError);

    Matrix rect(2, 3);
    CHECK_THROWS_AS(invert_square(rect), ShapeError);
}

TEST_CASE("l2_norm on known vectors") {
    CHECK(l2_norm(Tensor::from_values({2}, {3.0, 4.0})) == 5.0);
    CHECK(l2_norm(Tensor({4}, 0.0)) == 0.0);
    CHECK(l2_norm(Tensor::from_values({4}, {1.0, 1.0, 1.0, 1.0})) == 2.0);
    CHECK(l2_norm(Tensor::from_values({2, 2}, {1.0, 1.0, 1.0, 1.0})) == 2.0);
}

TEST_CASE("matmul against a hand-computed product") {
    Matrix a(2, 3);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(0, 2) = 3;
    a(1, 0) = 4;
    a(1, 1) = 5;
    a(1, 2) = 6;
    Matrix b(3, 2);
    b(0, 0) = 7;
    b(0, 1) = 8;
    b(1, 0) = 9;
    b(1, 1) = 10;
    b(2, 0) = 11;
    b(2, 1) = 12;
    Matrix c = matmul(a, b);
    CHECK(c(0, 0) == 58.0);
    CHECK(c(0, 1) == 64.0);
    CHECK(c(1, 0) == 139.0);
    CHECK(c(1, 1) == 154.0);
}

TEST_CASE("rng streams are deterministic and sane") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.normal() == b.normal());
    }
    Rng c(7);
    double mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        mean += c.normal();
    }
    mean /= n;
    CHECK(std::fabs(mean) < 0.05);

    Rng d(9);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t v = d.index(13);
        CHECK(v < 13);
    }
}
