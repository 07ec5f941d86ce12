#include "sharplab/objective.hpp"

#include <cmath>

#include "sharplab/errors.hpp"
#include "sharplab/kernels.hpp"

namespace sharplab {

ParamVector hvp(const Objective& obj, const ParamVector& w, const ParamVector& d, double h) {
    if (h <= 0.0) throw ArgumentError("hvp: step h must be positive");
    if (d.size() != w.size()) throw DimensionError("hvp: direction of wrong length");
    ParamVector gp = obj.grad(axpy(h, d, w));
    const ParamVector gm = obj.grad(axpy(-h, d, w));
    axpy_inplace(-1.0, gm, gp);
    scale_inplace(1.0 / (2.0 * h), gp);
    return gp;
}

ParamVector hvp(const Objective& obj, const ParamVector& w, const ParamVector& d) {
    return hvp(obj, w, d, hvp_default_step(l2_norm(w), l2_norm(d)));
}

QuadraticObjective::QuadraticObjective(Matrix a) : a_(std::move(a)) {
    if (a_.rows != a_.cols || a_.rows == 0) {
        throw ShapeError("quadratic: matrix must be square and non-empty");
    }
}

QuadraticObjective QuadraticObjective::diagonal(const std::vector<double>& diag) {
    Matrix a(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) a(i, i) = diag[i];
    return QuadraticObjective(std::move(a));
}

double QuadraticObjective::loss(const ParamVector& w) const {
    return 0.5 * dot(w, hessian_apply(w));
}

ParamVector QuadraticObjective::grad(const ParamVector& w) const {
    return hessian_apply(w);
}

ParamVector QuadraticObjective::hessian_apply(const ParamVector& d) const {
    if (d.size() != a_.rows) throw DimensionError("quadratic: vector of wrong length");
    ParamVector out = zeros(a_.rows);
    kernels::active().gemm_nn(a_.data.data(), d.data(), out.data(), a_.rows, a_.cols, 1);
    return out;
}

MlpObjective::MlpObjective(const MlpModel& model, std::span<const Batch> batches,
                           LossConfig cfg)
    : model_(&model), batches_(batches), cfg_(cfg), total_samples_(0) {
    if (batches_.empty()) throw ArgumentError("objective: batch list is empty");
    for (const Batch& b : batches_) total_samples_ += b.inputs.rows;
}

double MlpObjective::loss(const ParamVector& w) const {
    double total = 0.0;
    for (const Batch& b : batches_) {
        total += loss_with(*model_, w, b, cfg_) * static_cast<double>(b.inputs.rows);
    }
    return total / static_cast<double>(total_samples_);
}

ParamVector MlpObjective::grad(const ParamVector& w) const {
    ParamVector g = zeros(w.size());
    for (const Batch& b : batches_) {
        axpy_inplace(static_cast<double>(b.inputs.rows) / static_cast<double>(total_samples_),
                     grad_with(*model_, w, b, cfg_), g);
    }
    return g;
}

std::pair<double, ParamVector> MlpObjective::loss_grad(const ParamVector& w) const {
    double total = 0.0;
    ParamVector g = zeros(w.size());
    for (const Batch& b : batches_) {
        const double weight =
            static_cast<double>(b.inputs.rows) / static_cast<double>(total_samples_);
        auto [value, bg] = loss_grad_with(*model_, w, b, cfg_);
        total += value * weight;
        axpy_inplace(weight, bg, g);
    }
    return {total, std::move(g)};
}

}  // namespace sharplab
