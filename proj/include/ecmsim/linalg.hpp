#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ecmsim/errors.hpp"

// Small dense linear algebra for tiny systems: state spaces of 2-5 states,
// design matrices with <= 6 columns. Partial-pivot LU throughout.

namespace ecmsim::linalg {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// LU factorization with partial pivoting, done in place on a copy.
// Returns nullopt when a pivot falls below tol * max|A|.
inline std::optional<std::vector<double>> solve(Matrix a, std::vector<double> b,
                                                double relative_tol = 1e-13) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw ValidationError("solve: shape mismatch");
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    if (scale == 0.0) return std::nullopt;
    const double pivot_floor = relative_tol * scale;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (std::abs(a(pivot, col)) <= pivot_floor) return std::nullopt;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(col, j));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
        x[i] = acc / a(i, i);
    }
    return x;
}

inline std::optional<Matrix> invert(const Matrix& a, double relative_tol = 1e-13) {
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<double> e(n, 0.0);
        e[col] = 1.0;
        auto x = solve(a, std::move(e), relative_tol);
        if (!x) return std::nullopt;
        for (std::size_t i = 0; i < n; ++i) inv(i, col) = (*x)[i];
    }
    return inv;
}

inline std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& v) {
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

}  // namespace ecmsim::linalg
