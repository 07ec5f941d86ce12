#include "sharplab/matrix.hpp"

#include <cmath>
#include <string>

#include "sharplab/errors.hpp"
#include "sharplab/kernels.hpp"

namespace sharplab {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DimensionError(std::string("matmul: ") + what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "inner dimensions differ");
    Matrix c(a.rows, b.cols);
    kernels::active().gemm_nn(a.data.data(), b.data.data(), c.data.data(), a.rows,
                              a.cols, b.cols);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, "inner dimensions differ");
    Matrix c(a.cols, b.cols);
    kernels::active().gemm_tn(a.data.data(), b.data.data(), c.data.data(), a.cols,
                              a.rows, b.cols);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "inner dimensions differ");
    Matrix c(a.rows, b.rows);
    kernels::active().gemm_nt(a.data.data(), b.data.data(), c.data.data(), a.rows,
                              a.cols, b.rows);
    return c;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> sums(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) sums[c] += row[c];
    }
    return sums;
}

bool all_finite(const Matrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace sharplab
