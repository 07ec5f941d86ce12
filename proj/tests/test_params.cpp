#include <doctest.h>

#include <cmath>

#include "sharplab/errors.hpp"
#include "sharplab/param_vector.hpp"
#include "sharplab/rng.hpp"

using namespace sharplab;

TEST_CASE("dot basics") {
    CHECK(dot({1, 2}, {3, 4}) == 11.0);
    CHECK(dot({5, -3, 2}, zeros(3)) == 0.0);
    CHECK_THROWS_AS(dot({1, 2}, {1, 2, 3}), DimensionError);
}

TEST_CASE("dot matches extended-precision accumulation oracle") {
    RngStream rng(42);
    const ParamVector a = gaussian_vector(rng, 64, 1.0);
    const ParamVector b = gaussian_vector(rng, 64, 1.0);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<long double>(a[i]) * b[i];
    }
    CHECK(dot(a, b) == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
}

TEST_CASE("l2_norm") {
    CHECK(l2_norm({3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(l2_norm(zeros(17)) == 0.0);

    RngStream rng(7);
    const ParamVector a = gaussian_vector(rng, 128, 2.0);
    CHECK(l2_norm(a) == doctest::Approx(std::sqrt(dot(a, a))).epsilon(1e-12));
}

TEST_CASE("axpy") {
    CHECK(axpy(2.0, {1, 0}, {0, 1}) == ParamVector{2, 1});

    RngStream rng(9);
    const ParamVector x = gaussian_vector(rng, 33, 1.0);
    const ParamVector y = gaussian_vector(rng, 33, 1.0);
    CHECK(axpy(0.0, x, y) == y);

    const ParamVector z = axpy(-1.0, x, x);
    for (double v : z) CHECK(v == 0.0);

    CHECK_THROWS_AS(axpy(1.0, x, zeros(5)), DimensionError);
}

TEST_CASE("dot is symmetric and bilinear") {
    RngStream rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const ParamVector a = gaussian_vector(rng, 40, 1.0);
        const ParamVector b = gaussian_vector(rng, 40, 1.0);
        const ParamVector c = gaussian_vector(rng, 40, 1.0);
        const double alpha = 2.0 * rng.uniform() - 1.0;

        CHECK(dot(a, b) == doctest::Approx(dot(b, a)).epsilon(1e-12));
        const double lhs = dot(axpy(alpha, a, b), c);
        const double rhs = alpha * dot(a, c) + dot(b, c);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("norm scales with axpy from zero") {
    RngStream rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        const ParamVector x = gaussian_vector(rng, 64, 1.0);
        const double alpha = 4.0 * rng.uniform() - 2.0;
        const double lhs = l2_norm(axpy(alpha, x, zeros(64)));
        CHECK(lhs == doctest::Approx(std::abs(alpha) * l2_norm(x)).epsilon(1e-12));
    }
}

TEST_CASE("gaussian_vector") {
    RngStream rng(100);
    const ParamVector z = gaussian_vector(rng, 10, 0.0);
    for (double v : z) CHECK(v == 0.0);

    RngStream r1(321), r2(321);
    CHECK(gaussian_vector(r1, 50, 1.5) == gaussian_vector(r2, 50, 1.5));

    CHECK_THROWS_AS(gaussian_vector(rng, 0, 1.0), ArgumentError);
    CHECK_THROWS_AS(gaussian_vector(rng, 4, -1.0), ArgumentError);
}

TEST_CASE("gaussian_vector sample statistics") {
    RngStream rng(2024);
    const std::size_t n = 100000;
    const ParamVector v = gaussian_vector(rng, n, 1.0);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);

    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("rng determinism and splitting") {
    RngStream a(987), b(987);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // children are independent of parent draw position and of each other
    RngStream parent(11);
    parent.next_u64();
    RngStream c0 = parent.split(0);
    RngStream c0_again = RngStream(11).split(0);
    CHECK(c0.next_u64() == c0_again.next_u64());
    RngStream c1 = parent.split(1);
    CHECK(RngStream(11).split(0).next_u64() != c1.next_u64());
}

TEST_CASE("uniform stays in [0,1)") {
    RngStream rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
