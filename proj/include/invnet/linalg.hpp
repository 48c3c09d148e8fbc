#pragma once

#include <cstdint>

#include "invnet/tensor.hpp"

namespace invnet {

/// Rank-2 tensor with matrix accessors. Rows and columns are both >= 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    explicit Matrix(Tensor t);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return t_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return t_[r * cols_ + c]; }

    Tensor& tensor() noexcept { return t_; }
    const Tensor& tensor() const noexcept { return t_; }

private:
    Tensor t_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

Matrix identity(std::size_t n);
Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);

/// Orthogonal factor of a seeded standard-normal square matrix, computed by
/// Householder QR with the triangular factor's diagonal made positive so the
/// decomposition (and hence the result) is unique. Deterministic per seed.
Matrix orthogonal_init(std::size_t n, std::uint64_t seed);

/// Exact inverse via partially pivoted LU. Throws SingularMatrixError for
/// exactly singular input or when the 1-norm condition estimate exceeds
/// `condition_cap`.
Matrix invert_square(const Matrix& m, double condition_cap = 1e12);

double determinant(const Matrix& m);

/// Largest absolute entry of M*M^T - I.
double orthogonality_residual(const Matrix& m);

/// Euclidean norm over all elements.
double l2_norm(const Tensor& v);

/// Largest |a - b| over all elements; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace invnet
