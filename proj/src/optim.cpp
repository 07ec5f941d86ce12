#include "sharplab/optim.hpp"

#include <cmath>
#include <cstdio>

#include "sharplab/errors.hpp"

namespace sharplab {
namespace {

void require_eta(double eta) {
    if (!(eta > 0.0)) throw ArgumentError("step: eta must be positive");
}

void check_finite(double value, const ParamVector& g, long step) {
    if (!std::isfinite(value) || !all_finite(g)) {
        throw DivergenceError("non-finite loss or gradient at step " + std::to_string(step),
                              step);
    }
}

std::optional<double> cosine(const ParamVector& a, const ParamVector& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return std::nullopt;
    return dot(a, b) / (na * nb);
}

void fill_trace(StepTrace* trace, const ParamVector& eval_w, const ParamVector& base,
                const ParamVector& g_eff) {
    if (!trace) return;
    trace->eval_w = eval_w;
    trace->update_base = base;
    trace->epsilon = axpy(-1.0, base, eval_w);
    trace->grad_used = g_eff;
}

// Momentum and weight update shared by every rule; w is updated in place.
void momentum_update(MomentumState& m, ParamVector& w, const ParamVector& g_eff, double eta) {
    scale_inplace(m.mu, m.v);
    axpy_inplace(1.0, g_eff, m.v);
    axpy_inplace(-eta, m.v, w);
}

ParamVector with_decay(const ParamVector& g, const ParamVector& w, double weight_decay) {
    if (weight_decay == 0.0) return g;
    return axpy(weight_decay, w, g);
}

}  // namespace

PerturbKind perturb_kind_from_string(const std::string& name) {
    if (name == "none") return PerturbKind::none;
    if (name == "sam") return PerturbKind::sam;
    if (name == "msam") return PerturbKind::msam;
    if (name == "nag") return PerturbKind::nag;
    if (name == "random") return PerturbKind::random;
    if (name == "last_grad_pos") return PerturbKind::last_grad_pos;
    if (name == "last_grad_neg") return PerturbKind::last_grad_neg;
    throw ArgumentError("unknown perturbation kind '" + name + "'");
}

PerturbNorm perturb_norm_from_string(const std::string& name) {
    if (name == "l2") return PerturbNorm::l2;
    if (name == "relative") return PerturbNorm::relative;
    if (name == "unnormalized") return PerturbNorm::unnormalized;
    if (name == "lr_scaled") return PerturbNorm::lr_scaled;
    throw ArgumentError("unknown perturbation normalization '" + name + "'");
}

const char* to_string(PerturbKind k) {
    switch (k) {
        case PerturbKind::none: return "none";
        case PerturbKind::sam: return "sam";
        case PerturbKind::msam: return "msam";
        case PerturbKind::nag: return "nag";
        case PerturbKind::random: return "random";
        case PerturbKind::last_grad_pos: return "last_grad_pos";
        case PerturbKind::last_grad_neg: return "last_grad_neg";
    }
    return "?";
}

const char* to_string(PerturbNorm n) {
    switch (n) {
        case PerturbNorm::l2: return "l2";
        case PerturbNorm::relative: return "relative";
        case PerturbNorm::unnormalized: return "unnormalized";
        case PerturbNorm::lr_scaled: return "lr_scaled";
    }
    return "?";
}

void PerturbationSpec::validate(std::size_t dim) const {
    if (!mask) return;
    if (mask->size() != dim) {
        throw ArgumentError("perturbation mask has " + std::to_string(mask->size()) +
                            " entries, expected " + std::to_string(dim));
    }
    bool any = false;
    for (std::uint8_t m : *mask) any = any || m != 0;
    if (!any) throw ArgumentError("perturbation mask selects no coordinates");
}

OptState OptState::init(ParamVector w0, double mu) {
    if (!(mu >= 0.0 && mu < 1.0)) throw ArgumentError("momentum mu must be in [0,1)");
    OptState s;
    s.momentum.v = zeros(w0.size());
    s.momentum.mu = mu;
    s.w_tilde = std::move(w0);
    return s;
}

StepStats sgd_momentum_step(OptState& state, const Objective& obj, double eta,
                            double weight_decay, StepTrace* trace) {
    require_eta(eta);
    auto [value, g] = obj.loss_grad(state.w_tilde);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g, state.step_count);

    StepStats stats{value, l2_norm(g), cosine(state.momentum.v, g)};
    const ParamVector g_eff = with_decay(g, state.w_tilde, weight_decay);
    fill_trace(trace, state.w_tilde, state.w_tilde, g_eff);
    momentum_update(state.momentum, state.w_tilde, g_eff, eta);
    state.step_count += 1;
    return stats;
}

StepStats nag_step(OptState& state, const Objective& obj, double eta, double weight_decay,
                   StepTrace* trace) {
    require_eta(eta);
    ParamVector& w = state.w_tilde;
    const double lookahead = eta * state.momentum.mu;
    const bool perturb = lookahead != 0.0 && l2_norm(state.momentum.v) > 0.0;
    const ParamVector eval_w = perturb ? axpy(-lookahead, state.momentum.v, w) : w;

    auto [value, g] = obj.loss_grad(eval_w);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g, state.step_count);

    StepStats stats{value, l2_norm(g), cosine(state.momentum.v, g)};
    const ParamVector g_eff = with_decay(g, w, weight_decay);
    fill_trace(trace, eval_w, w, g_eff);
    momentum_update(state.momentum, w, g_eff, eta);
    state.step_count += 1;
    return stats;
}

StepStats sam_step(OptState& state, const Objective& obj, double eta, double weight_decay,
                   double rho, StepTrace* trace) {
    require_eta(eta);
    ParamVector& w = state.w_tilde;

    const ParamVector g1 = obj.grad(w);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(0.0, g1, state.step_count);

    const double n1 = l2_norm(g1);
    const ParamVector eval_w = (rho != 0.0 && n1 > 0.0) ? axpy(rho / n1, g1, w) : w;

    auto [value, g2] = obj.loss_grad(eval_w);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g2, state.step_count);

    StepStats stats{value, l2_norm(g2), cosine(state.momentum.v, g2)};
    const ParamVector g_eff = with_decay(g2, w, weight_decay);
    fill_trace(trace, eval_w, w, g_eff);
    momentum_update(state.momentum, w, g_eff, eta);
    state.step_count += 1;
    return stats;
}

StepStats msam_step(OptState& state, const Objective& obj, double eta, double weight_decay,
                    double rho, StepTrace* trace) {
    require_eta(eta);

    auto [value, g] = obj.loss_grad(state.w_tilde);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g, state.step_count);

    StepStats stats{value, l2_norm(g), cosine(state.momentum.v, g)};

    // Remove the perturbation applied at the end of the previous step.
    const ParamVector eval_w = trace ? state.w_tilde : ParamVector();
    ParamVector w = std::move(state.w_tilde);
    if (state.stored_perturbed) {
        const double vnorm = l2_norm(state.momentum.v);
        if (state.applied_rho != 0.0 && vnorm > 0.0) {
            axpy_inplace(state.applied_rho / vnorm, state.momentum.v, w);
        }
    }

    const ParamVector g_eff = with_decay(g, w, weight_decay);
    if (trace) fill_trace(trace, eval_w, w, g_eff);
    momentum_update(state.momentum, w, g_eff, eta);

    // Store the next perturbation.
    const double vnorm = l2_norm(state.momentum.v);
    if (rho != 0.0 && vnorm > 0.0) {
        axpy_inplace(-rho / vnorm, state.momentum.v, w);
        state.stored_perturbed = true;
        state.applied_rho = rho;
    } else {
        state.stored_perturbed = false;
        state.applied_rho = 0.0;
    }
    state.w_tilde = std::move(w);
    state.step_count += 1;
    return stats;
}

StepStats msam_reference_step(OptState& state, const Objective& obj, double eta,
                              double weight_decay, double rho, StepTrace* trace) {
    require_eta(eta);
    ParamVector& w = state.w_tilde;

    const double vnorm = l2_norm(state.momentum.v);
    const ParamVector eval_w =
        (rho != 0.0 && vnorm > 0.0) ? axpy(-rho / vnorm, state.momentum.v, w) : w;

    auto [value, g] = obj.loss_grad(eval_w);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g, state.step_count);

    StepStats stats{value, l2_norm(g), cosine(state.momentum.v, g)};
    const ParamVector g_eff = with_decay(g, w, weight_decay);
    fill_trace(trace, eval_w, w, g_eff);
    momentum_update(state.momentum, w, g_eff, eta);
    state.step_count += 1;
    return stats;
}

StepStats perturbed_step(OptState& state, const Objective& obj, double eta,
                         double weight_decay, const PerturbationSpec& spec, RngStream* rng,
                         StepTrace* trace) {
    require_eta(eta);
    if (spec.kind == PerturbKind::none) {
        return sgd_momentum_step(state, obj, eta, weight_decay, trace);
    }
    spec.validate(state.w_tilde.size());

    ParamVector& w = state.w_tilde;
    ParamVector epsilon;  // empty = zero perturbation

    // Build the raw direction delta.
    ParamVector delta;
    switch (spec.kind) {
        case PerturbKind::msam:
        case PerturbKind::nag:
            delta = state.momentum.v;
            if (spec.kind == PerturbKind::msam) scale_inplace(-1.0, delta);
            break;
        case PerturbKind::random:
            if (!rng) throw ArgumentError("perturbed_step: random kind needs an rng");
            delta = gaussian_vector(*rng, w.size(), 1.0);
            break;
        case PerturbKind::last_grad_pos:
        case PerturbKind::last_grad_neg:
            if (!state.momentum.last_grad) {
                std::fprintf(stderr,
                             "notice: last-gradient perturbation at step %ld has no stored "
                             "gradient yet; using zero\n",
                             state.step_count);
            } else {
                delta = *state.momentum.last_grad;
                if (spec.kind == PerturbKind::last_grad_neg) scale_inplace(-1.0, delta);
            }
            break;
        case PerturbKind::sam: {
            const ParamVector g1 = obj.grad(w);
            state.passes.forward += 1;
            state.passes.backward += 1;
            check_finite(0.0, g1, state.step_count);
            delta = g1;
            break;
        }
        case PerturbKind::none:
            break;
    }

    if (!delta.empty()) {
        if (spec.mask) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                if (!(*spec.mask)[i]) delta[i] = 0.0;
            }
        }
        if (spec.kind == PerturbKind::nag) {
            // eps = -eta mu v by definition; normalization does not apply.
            const double factor = -eta * state.momentum.mu;
            if (factor != 0.0 && l2_norm(delta) > 0.0) {
                epsilon = delta;
                scale_inplace(factor, epsilon);
            }
        } else {
            switch (spec.normalization) {
                case PerturbNorm::l2: {
                    const double n = l2_norm(delta);
                    if (n > 0.0 && spec.rho != 0.0) {
                        epsilon = delta;
                        scale_inplace(spec.rho / n, epsilon);
                    }
                    break;
                }
                case PerturbNorm::relative: {
                    ParamVector weighted = delta;
                    for (std::size_t i = 0; i < weighted.size(); ++i) {
                        weighted[i] *= std::abs(w[i]);
                    }
                    const double n = l2_norm(weighted);
                    if (n > 0.0 && spec.rho != 0.0) {
                        epsilon = std::move(weighted);
                        scale_inplace(spec.rho / n, epsilon);
                    }
                    break;
                }
                case PerturbNorm::unnormalized:
                    if (spec.rho != 0.0) {
                        epsilon = delta;
                        scale_inplace(spec.rho, epsilon);
                    }
                    break;
                case PerturbNorm::lr_scaled:
                    if (spec.rho != 0.0) {
                        epsilon = delta;
                        scale_inplace(spec.rho * eta, epsilon);
                    }
                    break;
            }
        }
    }

    const ParamVector eval_w = epsilon.empty() ? w : axpy(1.0, epsilon, w);
    auto [value, g] = obj.loss_grad(eval_w);
    state.passes.forward += 1;
    state.passes.backward += 1;
    check_finite(value, g, state.step_count);

    StepStats stats{value, l2_norm(g), cosine(state.momentum.v, g)};
    const ParamVector g_eff = with_decay(g, w, weight_decay);
    fill_trace(trace, eval_w, w, g_eff);
    state.momentum.last_grad = g_eff;
    momentum_update(state.momentum, w, g_eff, eta);
    state.step_count += 1;
    return stats;
}

ParamVector finalize(const OptState& state, double rho) {
    if (!state.stored_perturbed || rho == 0.0) return state.w_tilde;
    const double vnorm = l2_norm(state.momentum.v);
    if (vnorm == 0.0) return state.w_tilde;
    return axpy(rho / vnorm, state.momentum.v, state.w_tilde);
}

ParamVector finalize(const OptState& state) { return finalize(state, state.applied_rho); }

}  // namespace sharplab
