#include "sharplab/kernels.hpp"

// AVX2/FMA variants. This TU is compiled with -mavx2 -mfma; callers must
// gate on avx2_ops() != nullptr, which checks the running CPU.
//
// Reductions (dot, sumsq, gemm_nt) accumulate lane-wise and differ from the
// scalar kernels by reassociation roundoff only; axpy and scale are exact
// elementwise matches.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace sharplab::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double r = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sumsq_avx2(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d v0 = _mm256_loadu_pd(a + i);
        const __m256d v1 = _mm256_loadu_pd(a + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    if (i + 4 <= n) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
        i += 4;
    }
    double r = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) r += a[i] * a[i];
    return r;
}

// mul+add instead of fmadd keeps axpy/scale bit-identical to the scalar
// kernels; the trajectory tests lean on that.
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void gemm_nn_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a[i * k + l];
            const __m256d vav = _mm256_set1_pd(av);
            const double* brow = b + l * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d cv = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(vav, _mm256_loadu_pd(brow + j), cv));
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            const __m256d vav = _mm256_set1_pd(av);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d cv = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(vav, _mm256_loadu_pd(brow + j), cv));
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] += dot_avx2(arow, b + j * k, k);
        }
    }
}

}  // namespace

const Ops* avx2_ops() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) {
        return nullptr;
    }
    static const Ops ops{
        "avx2",     dot_avx2,     sumsq_avx2,   axpy_avx2,
        scale_avx2, gemm_nn_avx2, gemm_tn_avx2, gemm_nt_avx2,
    };
    return &ops;
}

}  // namespace sharplab::kernels

#else

namespace sharplab::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace sharplab::kernels

#endif
