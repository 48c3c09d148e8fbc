#include "invnet/linalg.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "invnet/rng.hpp"

namespace invnet {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : t_(Tensor({rows, cols}, fill)), rows_(rows), cols_(cols) {}

Matrix::Matrix(Tensor t) {
    if (t.rank() != 2) {
        throw ShapeError("matrix requires a rank-2 tensor, got " +
                         shape_to_string(t.shape()));
    }
    rows_ = t.extent(0);
    cols_ = t.extent(1);
    t_ = std::move(t);
}

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(c, r) = m(r, c);
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double f = a(i, k);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += f * b(k, j);
            }
        }
    }
    return out;
}

Matrix orthogonal_init(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ShapeError("orthogonal_init: dimension must be positive");
    }

    Rng rng(seed);
    std::vector<double> a(n * n);
    for (double& v : a) {
        v = rng.normal();
    }

    // Householder QR in place; reflectors kept for assembling Q.
    std::vector<std::vector<double>> reflectors(n);
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            norm += a[i * n + k] * a[i * n + k];
        }
        norm = std::sqrt(norm);
        std::vector<double> v(n - k, 0.0);
        if (norm > 0.0) {
            const double x0 = a[k * n + k];
            const double alpha = x0 >= 0.0 ? -norm : norm;
            for (std::size_t i = k; i < n; ++i) {
                v[i - k] = a[i * n + k];
            }
            v[0] -= alpha;
            double vnorm = 0.0;
            for (double x : v) {
                vnorm += x * x;
            }
            vnorm = std::sqrt(vnorm);
            if (vnorm > 0.0) {
                for (double& x : v) {
                    x /= vnorm;
                }
                for (std::size_t j = k; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t i = k; i < n; ++i) {
                        s += v[i - k] * a[i * n + j];
                    }
                    s *= 2.0;
                    for (std::size_t i = k; i < n; ++i) {
                        a[i * n + j] -= s * v[i - k];
                    }
                }
            } else {
                v.assign(n - k, 0.0);
            }
        }
        reflectors[k] = std::move(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the identity.
    Matrix q = identity(n);
    for (std::size_t kk = n; kk-- > 0;) {
        const std::vector<double>& v = reflectors[kk];
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = kk; i < n; ++i) {
                s += v[i - kk] * q(i, j);
            }
            s *= 2.0;
            for (std::size_t i = kk; i < n; ++i) {
                q(i, j) -= s * v[i - kk];
            }
        }
    }

    // Make diag(R) positive: flip the matching column of Q.
    for (std::size_t j = 0; j < n; ++j) {
        if (a[j * n + j] < 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                q(i, j) = -q(i, j);
            }
        }
    }
    return q;
}

namespace {

struct LuFactors {
    std::vector<double> lu;       // packed L (unit diagonal) and U
    std::vector<std::size_t> piv; // row swapped with k at step k
    int sign = 1;
    std::size_t n = 0;
};

LuFactors lu_decompose(const Matrix& m) {
    const std::size_t n = m.rows();
    LuFactors f;
    f.n = n;
    f.lu.assign(m.tensor().data(), m.tensor().data() + n * n);
    f.piv.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::fabs(f.lu[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double cand = std::fabs(f.lu[i * n + k]);
            if (cand > best) {
                best = cand;
                p = i;
            }
        }
        f.piv[k] = p;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(f.lu[k * n + j], f.lu[p * n + j]);
            }
            f.sign = -f.sign;
        }
        const double pivot = f.lu[k * n + k];
        if (pivot == 0.0) {
            throw SingularMatrixError("matrix is singular (zero pivot at column " +
                                      std::to_string(k) + ")");
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            f.lu[i * n + k] /= pivot;
            const double factor = f.lu[i * n + k];
            if (factor == 0.0) {
                continue;
            }
            for (std::size_t j = k + 1; j < n; ++j) {
                f.lu[i * n + j] -= factor * f.lu[k * n + j];
            }
        }
    }
    return f;
}

double norm1(const Matrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            s += std::fabs(m(i, j));
        }
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

Matrix invert_square(const Matrix& m, double condition_cap) {
    if (m.rows() != m.cols()) {
        throw ShapeError("invert_square: matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    const std::size_t n = m.rows();
    const LuFactors f = lu_decompose(m);

    Matrix inv(n, n);
    std::vector<double> x(n);
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = (i == col) ? 1.0 : 0.0;
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (f.piv[k] != k) {
                std::swap(x[k], x[f.piv[k]]);
            }
        }
        // forward substitution (unit lower triangle)
        for (std::size_t i = 1; i < n; ++i) {
            double s = x[i];
            for (std::size_t j = 0; j < i; ++j) {
                s -= f.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        // back substitution
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x[ii];
            for (std::size_t j = ii + 1; j < n; ++j) {
                s -= f.lu[ii * n + j] * x[j];
            }
            x[ii] = s / f.lu[ii * n + ii];
        }
        for (std::size_t i = 0; i < n; ++i) {
            inv(i, col) = x[i];
        }
    }

    const double cond = norm1(m) * norm1(inv);
    if (!(cond <= condition_cap)) {
        throw SingularMatrixError("matrix is near-singular (condition estimate " +
                                  std::to_string(cond) + " exceeds cap)");
    }
    inv.tensor().ensure_finite("invert_square");
    return inv;
}

double determinant(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ShapeError("determinant: matrix must be square");
    }
    LuFactors f;
    try {
        f = lu_decompose(m);
    } catch (const SingularMatrixError&) {
        return 0.0;
    }
    double det = f.sign;
    for (std::size_t i = 0; i < f.n; ++i) {
        det *= f.lu[i * f.n + i];
    }
    return det;
}

double orthogonality_residual(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ShapeError("orthogonality_residual: matrix must be square");
    }
    const std::size_t n = m.rows();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += m(i, k) * m(j, k);
            }
            if (i == j) {
                s -= 1.0;
            }
            worst = std::max(worst, std::fabs(s));
        }
    }
    return worst;
}

double l2_norm(const Tensor& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += v[i] * v[i];
    }
    return std::sqrt(s);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    }
    return worst;
}

}  // namespace invnet
