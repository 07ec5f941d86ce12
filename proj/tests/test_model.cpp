#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sharplab/data.hpp"
#include "sharplab/errors.hpp"
#include "sharplab/mlp.hpp"
#include "sharplab/objective.hpp"

using namespace sharplab;

namespace {

Batch random_batch(RngStream& rng, std::size_t n, std::size_t d, int classes) {
    Batch b;
    b.inputs = Matrix(n, d);
    for (double& v : b.inputs.data) v = rng.gaussian();
    b.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.labels[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(classes));
    }
    return b;
}

// Central finite differences of the loss, coordinate by coordinate.
ParamVector fd_gradient(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                        double h) {
    ParamVector g(model.params.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        ParamVector wp = model.params;
        ParamVector wm = model.params;
        wp[i] += h;
        wm[i] -= h;
        g[i] = (loss_with(model, wp, batch, cfg) - loss_with(model, wm, batch, cfg)) / (2.0 * h);
    }
    return g;
}

double max_rel_error(const ParamVector& a, const ParamVector& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-2});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("forward identity single layer") {
    MlpModel m;
    m.layer_sizes = {3, 3};
    m.activation = Activation::tanh;  // single layer emits raw logits regardless
    m.params = zeros(MlpModel::param_count(m.layer_sizes));
    for (int i = 0; i < 3; ++i) m.params[static_cast<std::size_t>(i * 3 + i)] = 1.0;

    Matrix x(2, 3);
    x.data = {0.5, -1.25, 2.0, 3.0, 0.0, -0.75};
    const Matrix y = forward(m, x);
    CHECK(y.data == x.data);
}

TEST_CASE("forward all-zero parameters give zero logits") {
    MlpModel m;
    m.layer_sizes = {4, 5, 3};
    m.activation = Activation::relu;
    m.params = zeros(MlpModel::param_count(m.layer_sizes));

    RngStream rng(1);
    const Batch b = random_batch(rng, 6, 4, 3);
    const Matrix y = forward(m, b.inputs);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("forward matches a hand-rolled matrix oracle") {
    RngStream rng(17);
    MlpModel m = MlpModel::init({3, 4, 2}, Activation::tanh, rng);
    Matrix x(3, 3);
    for (double& v : x.data) v = rng.gaussian();

    // independent dense path with explicit loops over the documented layout
    const auto matmul_oracle = [&](const Matrix& a, std::size_t woff, std::size_t boff,
                                   std::size_t din, std::size_t dout) {
        Matrix z(a.rows, dout);
        for (std::size_t r = 0; r < a.rows; ++r) {
            for (std::size_t j = 0; j < dout; ++j) {
                double acc = m.params[boff + j];
                for (std::size_t i = 0; i < din; ++i) {
                    acc += a(r, i) * m.params[woff + i * dout + j];
                }
                z(r, j) = acc;
            }
        }
        return z;
    };

    Matrix h = matmul_oracle(x, m.weight_offset(1), m.bias_offset(1), 3, 4);
    for (double& v : h.data) v = std::tanh(v);
    const Matrix expect = matmul_oracle(h, m.weight_offset(2), m.bias_offset(2), 4, 2);

    const Matrix got = forward(m, x);
    for (std::size_t i = 0; i < got.data.size(); ++i) {
        CHECK(got.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("forward error paths") {
    RngStream rng(3);
    MlpModel m = MlpModel::init({3, 2}, Activation::relu, rng);
    Matrix bad(2, 4);
    CHECK_THROWS_AS(forward(m, bad), DimensionError);

    Matrix nan_input(1, 3);
    nan_input.data = {1.0, std::nan(""), 0.0};
    CHECK_THROWS_AS(forward(m, nan_input), InputError);
}

TEST_CASE("loss of uniform logits is ln K") {
    MlpModel m;
    m.layer_sizes = {2, 4};
    m.activation = Activation::relu;
    m.params = zeros(MlpModel::param_count(m.layer_sizes));  // zero logits = uniform

    Batch b;
    b.inputs = Matrix(3, 2);
    b.inputs.data = {1, 2, 3, 4, 5, 6};
    b.labels = {0, 2, 3};

    for (double s : {0.0, 0.1, 0.5}) {
        LossConfig cfg{s, 0.0};
        CHECK(loss(m, b, cfg) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
}

TEST_CASE("saturated correct prediction has near-zero loss") {
    MlpModel m;
    m.layer_sizes = {1, 2};
    m.activation = Activation::relu;
    m.params = zeros(MlpModel::param_count(m.layer_sizes));
    m.params[0] = 30.0;  // w for class 0; input 1 gives logits (30, 0)

    Batch b;
    b.inputs = Matrix(1, 1);
    b.inputs.data = {1.0};
    b.labels = {0};
    CHECK(loss(m, b, LossConfig{0.0, 0.0}) < 1e-10);
}

TEST_CASE("loss matches the smoothed cross-entropy formula") {
    RngStream rng(23);
    MlpModel m = MlpModel::init({4, 6, 3}, Activation::tanh, rng);
    const Batch b = random_batch(rng, 5, 4, 3);
    const LossConfig cfg{0.1, 0.0};

    const Matrix logits = forward(m, b.inputs);
    double expect = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double denom = 0.0;
        double zmax = logits(i, 0);
        for (std::size_t c = 1; c < 3; ++c) zmax = std::max(zmax, logits(i, c));
        for (std::size_t c = 0; c < 3; ++c) denom += std::exp(logits(i, c) - zmax);
        for (std::size_t c = 0; c < 3; ++c) {
            const double p = std::exp(logits(i, c) - zmax) / denom;
            const double q =
                0.1 / 3.0 + (static_cast<int>(c) == b.labels[i] ? 1.0 - 0.1 : 0.0);
            expect -= q * std::log(p);
        }
    }
    expect /= 5.0;
    CHECK(loss(m, b, cfg) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at a convex 1-parameter minimum") {
    // one weight, one input, two classes with symmetric data: minimum at w=0
    MlpModel m;
    m.layer_sizes = {1, 2};
    m.activation = Activation::relu;
    m.params = zeros(4);

    Batch b;
    b.inputs = Matrix(2, 1);
    b.inputs.data = {1.0, -1.0};
    b.labels = {0, 0};
    const ParamVector g = grad(m, b, LossConfig{0.0, 0.0});
    // bias gradients cancel for label 0 vs uniform start only in w; check w coords
    CHECK(std::abs(g[0]) < 1e-8);
    CHECK(std::abs(g[1]) < 1e-8);
}

TEST_CASE("gradient of a two-sample batch is the mean of per-sample gradients") {
    RngStream rng(31);
    MlpModel m = MlpModel::init({3, 5, 2}, Activation::relu, rng);
    Batch both = random_batch(rng, 2, 3, 2);

    Batch first;
    first.inputs = Matrix(1, 3);
    std::copy(both.inputs.row(0), both.inputs.row(0) + 3, first.inputs.row(0));
    first.labels = {both.labels[0]};
    Batch second;
    second.inputs = Matrix(1, 3);
    std::copy(both.inputs.row(1), both.inputs.row(1) + 3, second.inputs.row(0));
    second.labels = {both.labels[1]};

    const LossConfig cfg{0.1, 0.0};
    const ParamVector g = grad(m, both, cfg);
    const ParamVector g1 = grad(m, first, cfg);
    const ParamVector g2 = grad(m, second, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g[i] == doctest::Approx(0.5 * (g1[i] + g2[i])).epsilon(1e-10));
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    const std::vector<std::vector<int>> shapes = {{4, 3}, {4, 6, 3}, {4, 5, 4, 3}};
    for (Activation act : {Activation::relu, Activation::tanh}) {
        for (const auto& shape : shapes) {
            for (std::uint64_t seed : {1u, 2u, 3u}) {
                RngStream rng(seed);
                MlpModel m = MlpModel::init(shape, act, rng);
                const Batch b = random_batch(rng, 8, 4, 3);
                const LossConfig cfg{0.1, 0.0};
                const ParamVector analytic = grad(m, b, cfg);
                const ParamVector numeric = fd_gradient(m, b, cfg, 1e-5);
                CHECK(max_rel_error(analytic, numeric) <= 1e-5);
            }
        }
    }
}

TEST_CASE("grad and loss never mutate model parameters") {
    RngStream rng(8);
    MlpModel m = MlpModel::init({4, 6, 3}, Activation::tanh, rng);
    const Batch b = random_batch(rng, 4, 4, 3);
    const ParamVector before = m.params;
    (void)forward(m, b.inputs);
    (void)loss(m, b, LossConfig{0.1, 0.0});
    (void)grad(m, b, LossConfig{0.1, 0.0});
    (void)hvp(m, b, LossConfig{0.1, 0.0}, gaussian_vector(rng, m.params.size(), 1.0));
    CHECK(m.params == before);
}

TEST_CASE("hvp on a quadratic returns A d") {
    RngStream rng(12);
    Matrix a(6, 6);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = rng.gaussian();
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    const QuadraticObjective quad(a);
    const ParamVector w = gaussian_vector(rng, 6, 1.0);
    const ParamVector d = gaussian_vector(rng, 6, 1.0);

    const ParamVector got = hvp(quad, w, d);
    const ParamVector expect = quad.hessian_apply(d);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-8));
    }

    const ParamVector zero = hvp(quad, w, zeros(6));
    for (double v : zero) CHECK(v == 0.0);
    CHECK_THROWS_AS(hvp(quad, w, d, -1.0), ArgumentError);
}

TEST_CASE("hvp is symmetric on a smooth net") {
    RngStream rng(44);
    MlpModel m = MlpModel::init({3, 6, 2}, Activation::tanh, rng);
    const Batch b = random_batch(rng, 6, 3, 2);
    const LossConfig cfg{0.0, 0.0};

    const ParamVector d = gaussian_vector(rng, m.params.size(), 1.0);
    const ParamVector e = gaussian_vector(rng, m.params.size(), 1.0);
    const double lhs = dot(hvp(m, b, cfg, d), e);
    const double rhs = dot(hvp(m, b, cfg, e), d);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("hvp agrees with the second difference of the loss") {
    RngStream rng(45);
    MlpModel m = MlpModel::init({3, 5, 2}, Activation::tanh, rng);
    const Batch b = random_batch(rng, 8, 3, 2);
    const LossConfig cfg{0.0, 0.0};

    ParamVector d = gaussian_vector(rng, m.params.size(), 1.0);
    scale_inplace(1.0 / l2_norm(d), d);
    const double quad_form = dot(d, hvp(m, b, cfg, d));

    const double h = 1e-3;
    const double l0 = loss(m, b, cfg);
    const double lp = loss_with(m, axpy(h, d, m.params), b, cfg);
    const double lm = loss_with(m, axpy(-h, d, m.params), b, cfg);
    const double second_diff = (lp - 2.0 * l0 + lm) / (h * h);
    CHECK(quad_form == doctest::Approx(second_diff).epsilon(1e-3));
}

TEST_CASE("feature_matrix shape and zero propagation") {
    RngStream rng(9);
    MlpModel m = MlpModel::init({4, 8, 3}, Activation::relu, rng);
    std::vector<Batch> data;
    data.push_back(random_batch(rng, 2, 4, 3));
    data.push_back(random_batch(rng, 3, 4, 3));

    const Matrix f = feature_matrix(m, data);
    CHECK(f.rows == 5);
    CHECK(f.cols == 8);

    MlpModel zero = m;
    zero.params = zeros(m.params.size());
    const Matrix fz = feature_matrix(zero, data);
    for (double v : fz.data) CHECK(v == 0.0);

    MlpModel single;
    single.layer_sizes = {4, 3};
    single.activation = Activation::relu;
    single.params = zeros(MlpModel::param_count(single.layer_sizes));
    CHECK_THROWS_AS(feature_matrix(single, data), ShapeError);
}

TEST_CASE("feature_matrix matches an instrumented forward") {
    RngStream rng(10);
    MlpModel m = MlpModel::init({4, 6, 3}, Activation::tanh, rng);
    std::vector<Batch> data;
    data.push_back(random_batch(rng, 4, 4, 3));

    const Matrix f = feature_matrix(m, data);
    // instrument: first layer by hand
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t j = 0; j < 6; ++j) {
            double acc = m.params[m.bias_offset(1) + j];
            for (std::size_t i = 0; i < 4; ++i) {
                acc += data[0].inputs(r, i) * m.params[m.weight_offset(1) + i * 6 + j];
            }
            CHECK(f(r, j) == doctest::Approx(std::tanh(acc)).epsilon(1e-12));
        }
    }
}

TEST_CASE("numerical_rank") {
    Matrix eye(8, 8);
    for (std::size_t i = 0; i < 8; ++i) eye(i, i) = 1.0;
    CHECK(numerical_rank(eye, 1e-6) == 8);

    // rank-1 outer product
    Matrix outer(5, 4);
    const double u[5] = {1, -2, 0.5, 3, 1};
    const double v[4] = {2, 1, -1, 0.25};
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 4; ++j) outer(i, j) = u[i] * v[j];
    }
    CHECK(numerical_rank(outer, 1e-6) == 1);

    Matrix empty;
    CHECK_THROWS_AS(numerical_rank(empty, 1e-6), ShapeError);
    CHECK_THROWS_AS(numerical_rank(eye, 0.0), ArgumentError);
    CHECK_THROWS_AS(numerical_rank(eye, 1.0), ArgumentError);
}

TEST_CASE("numerical_rank matches a Gram-eigenvalue oracle") {
    RngStream rng(66);
    Matrix m(20, 10);
    for (double& v : m.data) v = rng.gaussian();
    // squash two directions to make the threshold meaningful
    for (std::size_t r = 0; r < 20; ++r) {
        m(r, 8) = 1e-9 * m(r, 0);
        m(r, 9) = 1e-9 * m(r, 1);
    }

    Eigen::MatrixXd em(20, 10);
    for (std::size_t r = 0; r < 20; ++r) {
        for (std::size_t c = 0; c < 10; ++c) em(static_cast<Eigen::Index>(r),
                                                static_cast<Eigen::Index>(c)) = m(r, c);
    }
    const Eigen::MatrixXd gram = em.transpose() * em;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double smax = std::sqrt(eig.eigenvalues().maxCoeff());
    int expected = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        if (std::sqrt(std::max(0.0, eig.eigenvalues()(i))) > 1e-6 * smax) ++expected;
    }
    CHECK(numerical_rank(m, 1e-6) == expected);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    RngStream rng(99);
    const MlpModel m = MlpModel::init({5, 7, 3}, Activation::tanh, rng);
    const auto path = std::filesystem::temp_directory_path() / "sharplab_ckpt_test.bin";
    save_checkpoint(m, path);
    const MlpModel loaded = load_checkpoint(path);
    CHECK(loaded.layer_sizes == m.layer_sizes);
    CHECK(loaded.activation == m.activation);
    CHECK(loaded.params == m.params);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects a foreign file") {
    const auto path = std::filesystem::temp_directory_path() / "sharplab_ckpt_bad.bin";
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOTACKPTxxxxxxxxxxxxxxxx", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
