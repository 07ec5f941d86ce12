#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sharplab/mlp.hpp"
#include "sharplab/objective.hpp"
#include "sharplab/optim.hpp"
#include "sharplab/param_vector.hpp"

namespace sharplab {

// Loss values along one or two directions scaled by a rho grid.
struct LandscapeSlice {
    std::vector<ParamVector> directions;  // post-normalization, 1 or 2 entries
    std::vector<double> rho_grid;         // strictly increasing
    std::vector<double> rho_grid_y;       // empty for 1D slices
    // 1D: losses[i] at rho_grid[i]. 2D: row-major, losses[ix * |grid_y| + iy].
    std::vector<double> losses;
    double base_loss = 0.0;
};

struct LanczosResult {
    std::vector<double> eigenvalues;      // Ritz values, descending
    std::vector<double> residual_norms;   // |H u - lambda u| per Ritz pair
    int iterations = 0;
    bool breakdown = false;
};

struct PlaneProjection {
    double theta = 0.0;              // signed angle from g_sam toward g_sgd
    double in_plane_fraction = 0.0;  // |projection| / |g_msam|
};

struct RhoCrossing {
    double rho0 = 0.0;
    std::vector<double> thetas;  // theta over the scanned grid
};

struct Setting1Result {
    bool curvature_ok = false;  // vHv > kappa (with a roundoff tie-guard)
    bool slope_ok = false;      // grad . v <= 0 (idem)
    double kappa = 0.0;         // Monte-Carlo mean curvature estimate
    double kappa_stderr = 0.0;
    double vhv = 0.0;
    double gv = 0.0;
};

struct LemmaResult {
    double lhs = 0.0;  // truncated expectation of the perturbed loss
    double rhs = 0.0;  // loss at w - rho v
    double se = 0.0;   // Monte-Carlo standard error of lhs
    double slack = 0.0;
    bool holds = false;
};

// L(w + rho * d/|d|) - L(w). rho == 0 returns exactly 0.
double sharpness(const Objective& obj, const ParamVector& w, const ParamVector& direction,
                 double rho);
double sharpness(const MlpModel& model, const Batch& batch, const ParamVector& direction,
                 double rho, const LossConfig& cfg);

double cosine_similarity(const ParamVector& a, const ParamVector& b);

// Rayleigh quotient d^T H d / |d|^2 through the finite-difference HVP.
double directional_curvature(const Objective& obj, const ParamVector& w,
                             const ParamVector& direction);
double directional_curvature(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                             const ParamVector& direction);

using LinearOperator = std::function<ParamVector(const ParamVector&)>;

// Lanczos with full reorthogonalization on a symmetric operator. Terminates
// early on breakdown (invariant subspace exhausted) with the converged Ritz
// values and the breakdown flag set.
LanczosResult lanczos_topk(const LinearOperator& op, std::size_t dim, int k, int max_iter,
                           std::uint64_t seed);
LanczosResult lanczos_topk(const MlpModel& model, std::span<const Batch> dataset,
                           const LossConfig& cfg, int k, int max_iter, std::uint64_t seed);

// Rescale a direction so every weight group matches the norm of the model's
// group. Groups are one per output neuron (its incoming weight column) plus
// one bias group per layer; groups with zero weight norm zero the direction.
ParamVector filter_normalize(const ParamVector& direction, const MlpModel& model);

enum class SliceDirection : std::uint8_t { gradient, momentum, filter_random };

SliceDirection slice_direction_from_string(const std::string& name);

// Core slice evaluator; the direction is used exactly as given.
LandscapeSlice landscape_slice(const Objective& obj, const ParamVector& w,
                               const ParamVector& direction, std::span<const double> rho_grid);

// gradient / momentum directions are L2-normalized; filter_random draws a
// seeded Gaussian and filter-normalizes it without a global rescale.
LandscapeSlice landscape_slice_1d(const MlpModel& model, std::span<const Batch> data,
                                  const LossConfig& cfg, SliceDirection kind,
                                  std::span<const double> rho_grid,
                                  const OptState* state = nullptr, std::uint64_t seed = 0);

LandscapeSlice landscape_slice_2d(const MlpModel& model, std::span<const Batch> data,
                                  const LossConfig& cfg, std::span<const double> rho_grid_x,
                                  std::span<const double> rho_grid_y, std::uint64_t seed);

// Orthogonal projection of g_msam onto span(g_sam, g_sgd). theta is measured
// from g_sam, positive toward g_sgd. Near-collinear bases (sin of the angle
// below 1e-6) raise DegeneracyError.
PlaneProjection gradient_plane_projection(const ParamVector& g_msam, const ParamVector& g_sam,
                                          const ParamVector& g_sgd);

// Scan theta(rho) for the momentum-perturbed gradient over rho_grid and
// return the first zero crossing by linear interpolation. Throws
// NoCrossingError (carrying the theta sequence) when no sign change occurs.
RhoCrossing rho_zero_crossing(const Objective& obj, const ParamVector& w, const ParamVector& v,
                              double rho_sam, std::span<const double> rho_grid);
RhoCrossing rho_zero_crossing(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                              const OptState& state, double rho_sam,
                              std::span<const double> rho_grid);

// Checks v^T H v > kappa and grad . v <= 0 with kappa estimated as the mean
// directional curvature over n_directions random unit vectors.
Setting1Result setting1_check(const Objective& obj, const ParamVector& w, const ParamVector& v,
                              int n_directions, std::uint64_t seed);
Setting1Result setting1_check(const MlpModel& model, std::span<const Batch> dataset,
                              const LossConfig& cfg, const ParamVector& v,
                              int n_directions = 256, std::uint64_t seed = 0);

// Monte-Carlo check of E[1_{|eps|<=rho} L(w+eps)] <= L(w - rho v) + slack on
// an explicit quadratic, slack = slack_coeff * rho^3 + 3 * standard error.
LemmaResult lemma_check(const QuadraticObjective& quad, const ParamVector& w,
                        const ParamVector& v, double rho, double sigma, long n_samples,
                        std::uint64_t seed, double slack_coeff = 1.0);

}  // namespace sharplab
