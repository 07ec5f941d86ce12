#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "sharplab/matrix.hpp"
#include "sharplab/mlp.hpp"
#include "sharplab/param_vector.hpp"

namespace sharplab {

// A differentiable scalar objective over a flat parameter vector. Optimizer
// steps and diagnostics are written against this surface so the same code
// runs on the MLP loss and on explicit quadratic test objectives.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::size_t dim() const = 0;
    virtual double loss(const ParamVector& w) const = 0;
    virtual ParamVector grad(const ParamVector& w) const = 0;
    // One fused evaluation; overridden where a single pass yields both.
    virtual std::pair<double, ParamVector> loss_grad(const ParamVector& w) const {
        return {loss(w), grad(w)};
    }
};

// Central-difference Hessian-vector product on any objective.
ParamVector hvp(const Objective& obj, const ParamVector& w, const ParamVector& d, double h);
ParamVector hvp(const Objective& obj, const ParamVector& w, const ParamVector& d);

// L(w) = 1/2 w^T A w with symmetric A; gradient A w. hessian_apply() is the
// exact product for use as a test oracle next to the finite-difference path.
class QuadraticObjective : public Objective {
public:
    explicit QuadraticObjective(Matrix a);
    static QuadraticObjective diagonal(const std::vector<double>& diag);

    std::size_t dim() const override { return a_.rows; }
    double loss(const ParamVector& w) const override;
    ParamVector grad(const ParamVector& w) const override;

    ParamVector hessian_apply(const ParamVector& d) const;
    const Matrix& matrix() const { return a_; }

private:
    Matrix a_;
};

// Mean loss of an MLP over one or more batches, weighted by sample count so
// a batch list reproduces the loss over their union.
class MlpObjective : public Objective {
public:
    MlpObjective(const MlpModel& model, std::span<const Batch> batches, LossConfig cfg);

    std::size_t dim() const override { return model_->params.size(); }
    double loss(const ParamVector& w) const override;
    ParamVector grad(const ParamVector& w) const override;
    std::pair<double, ParamVector> loss_grad(const ParamVector& w) const override;

    const MlpModel& model() const { return *model_; }

private:
    const MlpModel* model_;
    std::span<const Batch> batches_;
    LossConfig cfg_;
    std::size_t total_samples_;
};

}  // namespace sharplab
