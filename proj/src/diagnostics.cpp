#include "sharplab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "sharplab/errors.hpp"

namespace sharplab {
namespace {

ParamVector unit(const ParamVector& d, const char* what) {
    const double n = l2_norm(d);
    if (n == 0.0) throw ArgumentError(std::string(what) + ": zero direction");
    ParamVector out = d;
    scale_inplace(1.0 / n, out);
    return out;
}

void validate_grid(std::span<const double> grid, const char* what) {
    if (grid.empty()) throw ArgumentError(std::string(what) + ": empty rho grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ArgumentError(std::string(what) + ": rho grid must be strictly increasing");
        }
    }
}

// Strict inequalities of the curvature/slope conditions cannot be witnessed
// at exact float equality; a relative tie-guard absorbs FD roundoff.
bool strictly_greater(double a, double b) {
    return a > b + 1e-9 * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

double sharpness(const Objective& obj, const ParamVector& w, const ParamVector& direction,
                 double rho) {
    const ParamVector d = unit(direction, "sharpness");
    if (rho == 0.0) return 0.0;
    return obj.loss(axpy(rho, d, w)) - obj.loss(w);
}

double sharpness(const MlpModel& model, const Batch& batch, const ParamVector& direction,
                 double rho, const LossConfig& cfg) {
    const MlpObjective obj(model, std::span<const Batch>(&batch, 1), cfg);
    return sharpness(obj, model.params, direction, rho);
}

double cosine_similarity(const ParamVector& a, const ParamVector& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw ArgumentError("cosine_similarity: zero vector");
    return dot(a, b) / (na * nb);
}

double directional_curvature(const Objective& obj, const ParamVector& w,
                             const ParamVector& direction) {
    const ParamVector d = unit(direction, "directional_curvature");
    return dot(d, hvp(obj, w, d));
}

double directional_curvature(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                             const ParamVector& direction) {
    const MlpObjective obj(model, std::span<const Batch>(&batch, 1), cfg);
    return directional_curvature(obj, model.params, direction);
}

LanczosResult lanczos_topk(const LinearOperator& op, std::size_t dim, int k, int max_iter,
                           std::uint64_t seed) {
    if (k < 1) throw ArgumentError("lanczos: k must be >= 1");
    if (max_iter < k || static_cast<std::size_t>(max_iter) > dim) {
        throw ArgumentError("lanczos: need k <= max_iter <= dim");
    }

    RngStream rng(seed);
    std::vector<ParamVector> basis;
    basis.push_back(unit(gaussian_vector(rng, dim, 1.0), "lanczos"));

    std::vector<double> alphas;
    std::vector<double> betas;
    LanczosResult result;

    for (int j = 0; j < max_iter; ++j) {
        ParamVector z = op(basis[static_cast<std::size_t>(j)]);
        const double alpha = dot(basis[static_cast<std::size_t>(j)], z);
        alphas.push_back(alpha);
        axpy_inplace(-alpha, basis[static_cast<std::size_t>(j)], z);
        if (j > 0) axpy_inplace(-betas[static_cast<std::size_t>(j - 1)], basis[static_cast<std::size_t>(j - 1)], z);

        // Full reorthogonalization, two classical Gram-Schmidt passes.
        for (int pass = 0; pass < 2; ++pass) {
            for (const ParamVector& q : basis) axpy_inplace(-dot(q, z), q, z);
        }

        result.iterations = j + 1;
        const double beta = l2_norm(z);
        double scale = 1.0;
        for (double a : alphas) scale = std::max(scale, std::abs(a));
        for (double b : betas) scale = std::max(scale, std::abs(b));
        if (beta <= 1e-10 * scale) {
            result.breakdown = true;
            break;
        }
        if (result.iterations == max_iter) break;
        betas.push_back(beta);
        scale_inplace(1.0 / beta, z);
        basis.push_back(std::move(z));
    }

    // Ritz values and vectors of the tridiagonal restriction.
    const int m = result.iterations;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        t(i, i) = alphas[static_cast<std::size_t>(i)];
        if (i + 1 < m) {
            t(i, i + 1) = betas[static_cast<std::size_t>(i)];
            t(i + 1, i) = betas[static_cast<std::size_t>(i)];
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);

    const int count = std::min(k, m);
    for (int i = 0; i < count; ++i) {
        const int idx = m - 1 - i;  // Eigen sorts ascending
        const double lambda = eig.eigenvalues()(idx);
        ParamVector u = zeros(dim);
        for (int r = 0; r < m; ++r) {
            axpy_inplace(eig.eigenvectors()(r, idx), basis[static_cast<std::size_t>(r)], u);
        }
        ParamVector res = op(u);
        axpy_inplace(-lambda, u, res);
        result.eigenvalues.push_back(lambda);
        result.residual_norms.push_back(l2_norm(res));
    }
    return result;
}

LanczosResult lanczos_topk(const MlpModel& model, std::span<const Batch> dataset,
                           const LossConfig& cfg, int k, int max_iter, std::uint64_t seed) {
    const MlpObjective obj(model, dataset, cfg);
    const ParamVector w = model.params;
    const LinearOperator op = [&obj, &w](const ParamVector& d) { return hvp(obj, w, d); };
    return lanczos_topk(op, w.size(), k, max_iter, seed);
}

ParamVector filter_normalize(const ParamVector& direction, const MlpModel& model) {
    if (direction.size() != model.params.size()) {
        throw DimensionError("filter_normalize: direction of wrong length");
    }
    ParamVector out = direction;

    const auto rescale_group = [&](const std::vector<std::size_t>& idx) {
        double wss = 0.0;
        double dss = 0.0;
        for (std::size_t i : idx) {
            wss += model.params[i] * model.params[i];
            dss += out[i] * out[i];
        }
        const double wn = std::sqrt(wss);
        const double dn = std::sqrt(dss);
        if (wn == 0.0) {
            for (std::size_t i : idx) out[i] = 0.0;
        } else if (dn > 0.0) {
            const double f = wn / dn;
            for (std::size_t i : idx) out[i] *= f;
        }
    };

    std::vector<std::size_t> idx;
    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
        const std::size_t din = static_cast<std::size_t>(model.layer_sizes[l - 1]);
        const std::size_t dout = static_cast<std::size_t>(model.layer_sizes[l]);
        const std::size_t woff = model.weight_offset(l);
        // one group per output neuron: its column of W_l
        for (std::size_t j = 0; j < dout; ++j) {
            idx.clear();
            for (std::size_t i = 0; i < din; ++i) idx.push_back(woff + i * dout + j);
            rescale_group(idx);
        }
        // one bias group per layer
        idx.clear();
        const std::size_t boff = model.bias_offset(l);
        for (std::size_t j = 0; j < dout; ++j) idx.push_back(boff + j);
        rescale_group(idx);
    }
    return out;
}

SliceDirection slice_direction_from_string(const std::string& name) {
    if (name == "gradient") return SliceDirection::gradient;
    if (name == "momentum") return SliceDirection::momentum;
    if (name == "filter_random") return SliceDirection::filter_random;
    throw ArgumentError("unknown slice direction '" + name + "'");
}

LandscapeSlice landscape_slice(const Objective& obj, const ParamVector& w,
                               const ParamVector& direction, std::span<const double> rho_grid) {
    validate_grid(rho_grid, "landscape_slice");
    LandscapeSlice slice;
    slice.directions.push_back(direction);
    slice.rho_grid.assign(rho_grid.begin(), rho_grid.end());
    slice.base_loss = obj.loss(w);
    slice.losses.reserve(rho_grid.size());
    for (double rho : rho_grid) {
        slice.losses.push_back(rho == 0.0 ? slice.base_loss
                                          : obj.loss(axpy(rho, direction, w)));
    }
    return slice;
}

LandscapeSlice landscape_slice_1d(const MlpModel& model, std::span<const Batch> data,
                                  const LossConfig& cfg, SliceDirection kind,
                                  std::span<const double> rho_grid, const OptState* state,
                                  std::uint64_t seed) {
    const MlpObjective obj(model, data, cfg);
    ParamVector direction;
    switch (kind) {
        case SliceDirection::gradient:
            direction = unit(obj.grad(model.params), "landscape_slice_1d");
            break;
        case SliceDirection::momentum:
            if (!state) throw ArgumentError("landscape_slice_1d: momentum kind needs a state");
            direction = unit(state->momentum.v, "landscape_slice_1d");
            break;
        case SliceDirection::filter_random: {
            RngStream rng(seed);
            direction = filter_normalize(gaussian_vector(rng, model.params.size(), 1.0), model);
            break;
        }
    }
    return landscape_slice(obj, model.params, direction, rho_grid);
}

LandscapeSlice landscape_slice_2d(const MlpModel& model, std::span<const Batch> data,
                                  const LossConfig& cfg, std::span<const double> rho_grid_x,
                                  std::span<const double> rho_grid_y, std::uint64_t seed) {
    validate_grid(rho_grid_x, "landscape_slice_2d");
    validate_grid(rho_grid_y, "landscape_slice_2d");
    const MlpObjective obj(model, data, cfg);

    RngStream rng(seed);
    LandscapeSlice slice;
    slice.directions.push_back(
        filter_normalize(gaussian_vector(rng, model.params.size(), 1.0), model));
    slice.directions.push_back(
        filter_normalize(gaussian_vector(rng, model.params.size(), 1.0), model));
    slice.rho_grid.assign(rho_grid_x.begin(), rho_grid_x.end());
    slice.rho_grid_y.assign(rho_grid_y.begin(), rho_grid_y.end());
    slice.base_loss = obj.loss(model.params);
    slice.losses.reserve(rho_grid_x.size() * rho_grid_y.size());
    for (double rx : rho_grid_x) {
        for (double ry : rho_grid_y) {
            if (rx == 0.0 && ry == 0.0) {
                slice.losses.push_back(slice.base_loss);
                continue;
            }
            ParamVector w = model.params;
            if (rx != 0.0) axpy_inplace(rx, slice.directions[0], w);
            if (ry != 0.0) axpy_inplace(ry, slice.directions[1], w);
            slice.losses.push_back(obj.loss(w));
        }
    }
    return slice;
}

PlaneProjection gradient_plane_projection(const ParamVector& g_msam, const ParamVector& g_sam,
                                          const ParamVector& g_sgd) {
    const double n_msam = l2_norm(g_msam);
    if (n_msam == 0.0) throw ArgumentError("plane projection: zero g_msam");
    const ParamVector e1 = unit(g_sam, "plane projection");
    const double n_sgd = l2_norm(g_sgd);
    if (n_sgd == 0.0) throw ArgumentError("plane projection: zero g_sgd");

    const double along = dot(g_sgd, e1);
    ParamVector u = axpy(-along, e1, g_sgd);
    const double n_u = l2_norm(u);
    if (n_u < 1e-6 * n_sgd) {
        throw DegeneracyError("plane projection: g_sam and g_sgd are near-collinear");
    }
    scale_inplace(1.0 / n_u, u);

    const double p1 = dot(g_msam, e1);
    const double p2 = dot(g_msam, u);
    PlaneProjection proj;
    proj.theta = std::atan2(p2, p1);
    proj.in_plane_fraction = std::hypot(p1, p2) / n_msam;
    return proj;
}

RhoCrossing rho_zero_crossing(const Objective& obj, const ParamVector& w, const ParamVector& v,
                              double rho_sam, std::span<const double> rho_grid) {
    validate_grid(rho_grid, "rho_zero_crossing");
    const ParamVector g_sgd = obj.grad(w);
    const ParamVector g_dir = unit(g_sgd, "rho_zero_crossing");
    const ParamVector g_sam = obj.grad(axpy(rho_sam, g_dir, w));
    const ParamVector v_dir = unit(v, "rho_zero_crossing");

    RhoCrossing crossing;
    crossing.thetas.reserve(rho_grid.size());
    for (double rho : rho_grid) {
        const ParamVector g_msam = obj.grad(axpy(-rho, v_dir, w));
        crossing.thetas.push_back(gradient_plane_projection(g_msam, g_sam, g_sgd).theta);
    }
    for (std::size_t i = 0; i + 1 < crossing.thetas.size(); ++i) {
        const double a = crossing.thetas[i];
        const double b = crossing.thetas[i + 1];
        if (a == 0.0) {
            crossing.rho0 = rho_grid[i];
            return crossing;
        }
        if (a * b < 0.0) {
            crossing.rho0 = rho_grid[i] + (rho_grid[i + 1] - rho_grid[i]) * (-a) / (b - a);
            return crossing;
        }
    }
    if (crossing.thetas.back() == 0.0) {
        crossing.rho0 = rho_grid.back();
        return crossing;
    }
    throw NoCrossingError("rho_zero_crossing: theta does not change sign on the grid",
                          crossing.thetas);
}

RhoCrossing rho_zero_crossing(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                              const OptState& state, double rho_sam,
                              std::span<const double> rho_grid) {
    const MlpObjective obj(model, std::span<const Batch>(&batch, 1), cfg);
    return rho_zero_crossing(obj, model.params, state.momentum.v, rho_sam, rho_grid);
}

Setting1Result setting1_check(const Objective& obj, const ParamVector& w, const ParamVector& v,
                              int n_directions, std::uint64_t seed) {
    if (n_directions < 2) throw ArgumentError("setting1_check: need at least 2 directions");
    const ParamVector v_dir = unit(v, "setting1_check");

    Setting1Result result;
    result.vhv = dot(v_dir, hvp(obj, w, v_dir));

    RngStream rng(seed);
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n_directions; ++i) {
        const ParamVector d = unit(gaussian_vector(rng, w.size(), 1.0), "setting1_check");
        const double c = dot(d, hvp(obj, w, d));
        sum += c;
        sumsq += c * c;
    }
    const double n = static_cast<double>(n_directions);
    result.kappa = sum / n;
    const double variance = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    result.kappa_stderr = std::sqrt(variance / n);

    result.gv = dot(obj.grad(w), v_dir);
    result.curvature_ok = strictly_greater(result.vhv, result.kappa);
    result.slope_ok = !strictly_greater(result.gv, 0.0);
    return result;
}

Setting1Result setting1_check(const MlpModel& model, std::span<const Batch> dataset,
                              const LossConfig& cfg, const ParamVector& v, int n_directions,
                              std::uint64_t seed) {
    const MlpObjective obj(model, dataset, cfg);
    return setting1_check(obj, model.params, v, n_directions, seed);
}

LemmaResult lemma_check(const QuadraticObjective& quad, const ParamVector& w,
                        const ParamVector& v, double rho, double sigma, long n_samples,
                        std::uint64_t seed, double slack_coeff) {
    if (n_samples < 1000) {
        throw ArgumentError("lemma_check: need at least 1000 samples for a usable estimate");
    }
    if (!(rho > 0.0) || !(sigma > 0.0)) {
        throw ArgumentError("lemma_check: rho and sigma must be positive");
    }
    const ParamVector v_dir = unit(v, "lemma_check");

    LemmaResult result;
    result.rhs = quad.loss(axpy(-rho, v_dir, w));

    RngStream rng(seed);
    double sum = 0.0;
    double sumsq = 0.0;
    for (long s = 0; s < n_samples; ++s) {
        const ParamVector eps = gaussian_vector(rng, w.size(), sigma);
        double value = 0.0;
        if (l2_norm(eps) <= rho) value = quad.loss(axpy(1.0, eps, w));
        sum += value;
        sumsq += value * value;
    }
    const double n = static_cast<double>(n_samples);
    result.lhs = sum / n;
    const double variance = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    result.se = std::sqrt(variance / n);
    result.slack = slack_coeff * rho * rho * rho + 3.0 * result.se;
    result.holds = result.lhs <= result.rhs + result.slack;
    return result;
}

}  // namespace sharplab
