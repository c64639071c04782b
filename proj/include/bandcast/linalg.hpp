#pragma once

#include <cstddef>
#include <vector>

namespace bandcast {

// Row-major dense matrix, just enough for the regression stack.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    const double* row(size_t r) const { return data.data() + r * cols; }
    double* row(size_t r) { return data.data() + r * cols; }
};

// Least-squares solve of min ||A x - b||_2 via Householder QR. Falls back to
// the SVD-based minimum-norm solution when A is (numerically) rank-deficient,
// setting *rank_deficient when given.
std::vector<double> lstsq(const Matrix& A, const std::vector<double>& b,
                          bool* rank_deficient = nullptr);

// Minimum-norm least-squares solution via one-sided Jacobi SVD. Exposed for
// tests; lstsq() calls it on rank deficiency.
std::vector<double> svd_lstsq(const Matrix& A, const std::vector<double>& b);

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace bandcast
