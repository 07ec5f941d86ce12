#include <doctest.h>

#include <cmath>
#include <vector>

#include "sharplab/kernels.hpp"
#include "sharplab/rng.hpp"

using namespace sharplab;

namespace {

std::vector<double> random_vec(RngStream& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
    return v;
}

// Reduction kernels may reassociate; bound the difference by an
// accumulated-magnitude scale.
void check_close(double a, double b, double scale) {
    CHECK(std::abs(a - b) <= 1e-13 * (1.0 + scale));
}

}  // namespace

TEST_CASE("scalar and avx2 kernels are equivalent") {
    const kernels::Ops& scalar = kernels::scalar_ops();
    const kernels::Ops* simd = kernels::avx2_ops();
    if (!simd) {
        MESSAGE("avx2 unavailable on this host; skipping equivalence checks");
        return;
    }

    RngStream rng(20240901);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 64u, 67u, 256u, 1000u}) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);

        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        check_close(scalar.dot(a.data(), b.data(), n), simd->dot(a.data(), b.data(), n), mag);
        check_close(scalar.sumsq(a.data(), n), simd->sumsq(a.data(), n), mag);

        // Elementwise kernels avoid fused contraction and must match bit-wise.
        auto y1 = b;
        auto y2 = b;
        scalar.axpy(0.37, a.data(), y1.data(), n);
        simd->axpy(0.37, a.data(), y2.data(), n);
        CHECK(y1 == y2);

        auto x1 = a;
        auto x2 = a;
        scalar.scale(-1.75, x1.data(), n);
        simd->scale(-1.75, x2.data(), n);
        CHECK(x1 == x2);
    }
}

TEST_CASE("gemm variants match scalar reference") {
    const kernels::Ops& scalar = kernels::scalar_ops();
    const kernels::Ops* simd = kernels::avx2_ops();
    if (!simd) return;

    RngStream rng(77);
    const struct {
        std::size_t m, k, n;
    } shapes[] = {{1, 1, 1}, {2, 3, 5}, {7, 4, 9}, {8, 16, 12}, {13, 31, 6}, {32, 17, 33}};

    for (const auto& s : shapes) {
        const auto a_nn = random_vec(rng, s.m * s.k);
        const auto b_nn = random_vec(rng, s.k * s.n);
        const auto a_tn = random_vec(rng, s.k * s.m);
        const auto b_nt = random_vec(rng, s.n * s.k);

        std::vector<double> c1(s.m * s.n, 0.0), c2(s.m * s.n, 0.0);
        scalar.gemm_nn(a_nn.data(), b_nn.data(), c1.data(), s.m, s.k, s.n);
        simd->gemm_nn(a_nn.data(), b_nn.data(), c2.data(), s.m, s.k, s.n);
        for (std::size_t i = 0; i < c1.size(); ++i) {
            check_close(c1[i], c2[i], static_cast<double>(s.k));
        }

        std::fill(c1.begin(), c1.end(), 0.0);
        std::fill(c2.begin(), c2.end(), 0.0);
        scalar.gemm_tn(a_tn.data(), b_nn.data(), c1.data(), s.m, s.k, s.n);
        simd->gemm_tn(a_tn.data(), b_nn.data(), c2.data(), s.m, s.k, s.n);
        for (std::size_t i = 0; i < c1.size(); ++i) {
            check_close(c1[i], c2[i], static_cast<double>(s.k));
        }

        std::fill(c1.begin(), c1.end(), 0.0);
        std::fill(c2.begin(), c2.end(), 0.0);
        scalar.gemm_nt(a_nn.data(), b_nt.data(), c1.data(), s.m, s.k, s.n);
        simd->gemm_nt(a_nn.data(), b_nt.data(), c2.data(), s.m, s.k, s.n);
        for (std::size_t i = 0; i < c1.size(); ++i) {
            check_close(c1[i], c2[i], static_cast<double>(s.k));
        }
    }
}

TEST_CASE("gemm_nn matches an independent triple-loop oracle") {
    RngStream rng(5);
    const std::size_t m = 6, k = 11, n = 7;
    const auto a = random_vec(rng, m * k);
    const auto b = random_vec(rng, k * n);

    std::vector<double> expect(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            long double acc = 0.0L;
            for (std::size_t l = 0; l < k; ++l) {
                acc += static_cast<long double>(a[i * k + l]) * b[l * n + j];
            }
            expect[i * n + j] = static_cast<double>(acc);
        }
    }

    std::vector<double> c(m * n, 0.0);
    kernels::active().gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("kernel selection") {
    CHECK_NOTHROW(kernels::select("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_NOTHROW(kernels::select("auto"));
    CHECK_THROWS(kernels::select("sse9"));
}
