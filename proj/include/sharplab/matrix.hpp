#pragma once

#include <cstddef>
#include <vector>

namespace sharplab {

// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

// c = a * b       (a: m x k, b: k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b     (a: k x m, b: k x n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * b^T     (a: m x k, b: n x k)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

std::vector<double> column_sums(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace sharplab
