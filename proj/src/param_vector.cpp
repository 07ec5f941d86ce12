#include "sharplab/param_vector.hpp"

#include <cmath>
#include <string>

#include "sharplab/errors.hpp"
#include "sharplab/kernels.hpp"

namespace sharplab {
namespace {

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": dimension mismatch (" +
                             std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
}

}  // namespace

ParamVector zeros(std::size_t dim) { return ParamVector(dim, 0.0); }

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_dim(a, b, "dot");
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double l2_norm(const ParamVector& a) {
    return std::sqrt(kernels::active().sumsq(a.data(), a.size()));
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
    require_same_dim(x, y, "axpy");
    ParamVector out = y;
    kernels::active().axpy(alpha, x.data(), out.data(), out.size());
    return out;
}

void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y) {
    require_same_dim(x, y, "axpy");
    kernels::active().axpy(alpha, x.data(), y.data(), y.size());
}

void scale_inplace(double alpha, ParamVector& x) {
    kernels::active().scale(alpha, x.data(), x.size());
}

bool all_finite(const ParamVector& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

ParamVector gaussian_vector(RngStream& rng, std::size_t dim, double sigma) {
    if (dim == 0) throw ArgumentError("gaussian_vector: dim must be positive");
    if (sigma < 0.0) throw ArgumentError("gaussian_vector: sigma must be >= 0");
    ParamVector out(dim, 0.0);
    if (sigma == 0.0) return out;
    for (double& v : out) v = sigma * rng.gaussian();
    return out;
}

}  // namespace sharplab
