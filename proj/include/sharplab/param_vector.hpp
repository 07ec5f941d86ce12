#pragma once

#include <cstddef>
#include <vector>

#include "sharplab/rng.hpp"

namespace sharplab {

// Flat vector of all trainable parameters, the common currency between the
// model, the optimizers and every diagnostic. Always 64-bit: the diagnostics
// rest on small finite differences.
using ParamVector = std::vector<double>;

ParamVector zeros(std::size_t dim);

// Throws DimensionError unless a.size() == b.size().
double dot(const ParamVector& a, const ParamVector& b);

double l2_norm(const ParamVector& a);

// y + alpha * x, inputs untouched.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);

// y += alpha * x
void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y);

void scale_inplace(double alpha, ParamVector& x);

bool all_finite(const ParamVector& a);

// i.i.d. N(0, sigma^2) entries drawn from rng in index order. sigma == 0
// short-circuits to the zero vector without consuming draws.
ParamVector gaussian_vector(RngStream& rng, std::size_t dim, double sigma);

}  // namespace sharplab
