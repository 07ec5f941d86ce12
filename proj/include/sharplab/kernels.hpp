#pragma once

#include <cstddef>

namespace sharplab::kernels {

// Dense double-precision kernels behind the vector and matrix math.
//
// Two implementations exist: portable scalar reference kernels and AVX2/FMA
// variants compiled in their own translation unit. active() resolves once at
// first use: AVX2 when the CPU supports it, overridable with the environment
// variable SHARPLAB_KERNELS=scalar|avx2|auto or select().
//
// All matrices are row-major. gemm_* accumulate into c (callers zero c first
// when they want a plain product):
//   gemm_nn: c[m x n] += a[m x k] * b[k x n]
//   gemm_tn: c[m x n] += a[k x m]^T * b[k x n]
//   gemm_nt: c[m x n] += a[m x k] * b[n x k]^T
struct Ops {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sumsq)(const double* a, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n);
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n);
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n);
};

const Ops& scalar_ops();

// nullptr when the build or the running CPU lacks AVX2+FMA.
const Ops* avx2_ops();

const Ops& active();

// name: "auto", "scalar" or "avx2". Throws ArgumentError for anything else
// or when the requested variant is unavailable.
void select(const char* name);

}  // namespace sharplab::kernels
