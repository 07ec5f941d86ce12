#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sharplab/objective.hpp"
#include "sharplab/param_vector.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

enum class PerturbKind : std::uint8_t {
    none,
    sam,            // +rho * g / |g|, costs an extra pass
    msam,           // -rho * v / |v|
    nag,            // -eta * mu * v, bypasses normalization
    random,         // seeded Gaussian direction
    last_grad_pos,  // +previous step's gradient
    last_grad_neg,  // -previous step's gradient
};

enum class PerturbNorm : std::uint8_t {
    l2,            // eps = rho * delta / |delta|
    relative,      // eps = rho * (delta.|w|) / |delta.|w||, elementwise weighting
    unnormalized,  // eps = rho * delta
    lr_scaled,     // eps = rho * eta * delta
};

PerturbKind perturb_kind_from_string(const std::string& name);
PerturbNorm perturb_norm_from_string(const std::string& name);
const char* to_string(PerturbKind k);
const char* to_string(PerturbNorm n);

// Declarative description of a perturbation family. rho may be negative
// (sign ablations); it is never clamped.
struct PerturbationSpec {
    PerturbKind kind = PerturbKind::none;
    double rho = 0.0;
    PerturbNorm normalization = PerturbNorm::l2;
    // 1 = perturb this coordinate. Masked-out coordinates are zeroed in the
    // direction before normalization and are never displaced.
    std::optional<std::vector<std::uint8_t>> mask;
    // Force effective rho = 0 while the lr warm-up runs.
    bool warmup_zero = false;

    void validate(std::size_t dim) const;
};

struct MomentumState {
    ParamVector v;  // exponential moving average of gradients, zero before step 0
    double mu = 0.0;
    std::optional<ParamVector> last_grad;  // previous step's update gradient
};

struct PassCounter {
    long forward = 0;
    long backward = 0;
};

// Optimizer state. w_tilde holds the weights as stored between steps: the
// unperturbed weights for every rule except the efficient momentum-
// perturbation step, which keeps the next perturbation baked in
// (stored_perturbed == true) and relies on finalize() for removal.
struct OptState {
    ParamVector w_tilde;
    MomentumState momentum;
    long step_count = 0;
    PassCounter passes;
    bool stored_perturbed = false;
    double applied_rho = 0.0;  // rho baked into w_tilde when stored_perturbed

    static OptState init(ParamVector w0, double mu);
};

// Optional per-step instrumentation for tests.
struct StepTrace {
    ParamVector eval_w;       // where the gradient was evaluated
    ParamVector epsilon;      // eval_w - unperturbed weights
    ParamVector update_base;  // unperturbed weights the update starts from
    ParamVector grad_used;    // gradient fed into the momentum update (decay included)
};

struct StepStats {
    double eval_loss = 0.0;  // batch loss at the gradient evaluation point
    double grad_norm = 0.0;  // norm of the raw data gradient at that point
    // cos(v_{t-1}, g_t) with the raw data gradient; empty when either is zero.
    std::optional<double> cos_vprev_g;
};

// v <- mu v + (g + lambda w);  w <- w - eta v. Throws DivergenceError on a
// non-finite loss or gradient, carrying the step index.
StepStats sgd_momentum_step(OptState& state, const Objective& obj, double eta,
                            double weight_decay, StepTrace* trace = nullptr);

// Gradient taken after the momentum lookahead w - eta mu v.
StepStats nag_step(OptState& state, const Objective& obj, double eta,
                   double weight_decay, StepTrace* trace = nullptr);

// Two-pass rule: ascend rho along the normalized first gradient, take the
// second gradient there, update from the unperturbed weights. |g| == 0 makes
// the perturbation zero.
StepStats sam_step(OptState& state, const Objective& obj, double eta,
                   double weight_decay, double rho, StepTrace* trace = nullptr);

// Efficient momentum-perturbation step: one gradient per step against the
// stored perturbed weights, with the previous perturbation removed and the
// next one applied in the same update. |v| == 0 means no perturbation.
StepStats msam_step(OptState& state, const Objective& obj, double eta,
                    double weight_decay, double rho, StepTrace* trace = nullptr);

// Literal three-phase form (perturb, evaluate, restore, update) storing
// unperturbed weights; kept as the equivalence oracle for msam_step.
StepStats msam_reference_step(OptState& state, const Objective& obj, double eta,
                              double weight_decay, double rho, StepTrace* trace = nullptr);

// Generic three-phase perturbed step covering every ablation family. rng is
// required for PerturbKind::random only.
StepStats perturbed_step(OptState& state, const Objective& obj, double eta,
                         double weight_decay, const PerturbationSpec& spec,
                         RngStream* rng = nullptr, StepTrace* trace = nullptr);

// Unperturbed weights of a state; removes the stored perturbation when one
// is baked in, otherwise returns w_tilde as-is. rho must be the rho of the
// last step; the one-argument form uses the recorded value.
ParamVector finalize(const OptState& state, double rho);
ParamVector finalize(const OptState& state);

}  // namespace sharplab
