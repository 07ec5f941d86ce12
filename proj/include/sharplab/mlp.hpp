#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sharplab/matrix.hpp"
#include "sharplab/param_vector.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };

Activation activation_from_string(const std::string& name);
const char* to_string(Activation a);

// One batch: n inputs of width d0 and n class labels in [0, K).
struct Batch {
    Matrix inputs;
    std::vector<int> labels;
};

struct LossConfig {
    // Smoothing s spreads s/K over every class and keeps 1-s on the target.
    double label_smoothing = 0.0;
    // Coupled L2, applied by the optimizer step, never inside loss()/grad():
    // sharpness probes measure the pure data loss.
    double weight_decay = 0.0;
};

// Multilayer perceptron over a flat parameter vector.
//
// Parameter layout (fixed; the checkpoint format and filter grouping rely
// on it): for each layer l = 1..L, the weight matrix W_l of shape
// (d_{l-1} x d_l) in row-major order, then the bias b_l of length d_l.
// Hidden layers apply the activation; the output layer emits raw logits.
struct MlpModel {
    std::vector<int> layer_sizes;  // [d0, ..., dL]
    Activation activation = Activation::relu;
    ParamVector params;

    std::size_t layer_count() const { return layer_sizes.size() - 1; }
    std::size_t input_dim() const { return static_cast<std::size_t>(layer_sizes.front()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layer_sizes.back()); }

    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;

    static std::size_t param_count(const std::vector<int>& layer_sizes);

    // He init for relu, Xavier for tanh, times init_scale; biases zero.
    static MlpModel init(std::vector<int> layer_sizes, Activation act,
                         RngStream& rng, double init_scale = 1.0);
};

Matrix forward(const MlpModel& model, const Matrix& inputs);
Matrix forward_with(const MlpModel& model, const ParamVector& w, const Matrix& inputs);

double loss(const MlpModel& model, const Batch& batch, const LossConfig& cfg);
double loss_with(const MlpModel& model, const ParamVector& w, const Batch& batch,
                 const LossConfig& cfg);

ParamVector grad(const MlpModel& model, const Batch& batch, const LossConfig& cfg);
ParamVector grad_with(const MlpModel& model, const ParamVector& w, const Batch& batch,
                      const LossConfig& cfg);

// One fused forward+backward; first element is the batch loss.
std::pair<double, ParamVector> loss_grad_with(const MlpModel& model, const ParamVector& w,
                                              const Batch& batch, const LossConfig& cfg);

// Hessian-vector product by central differences of the analytic gradient:
// (grad(w + h d) - grad(w - h d)) / (2h). Model parameters are never touched.
ParamVector hvp(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                const ParamVector& d, double h);
ParamVector hvp(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                const ParamVector& d);

double hvp_default_step(double w_norm, double d_norm);

// Post-activation outputs of the penultimate layer, one row per sample.
Matrix feature_matrix(const MlpModel& model, std::span<const Batch> dataset);

// Count of singular values above rel_tol * sigma_max; 0 for a zero matrix.
int numerical_rank(const Matrix& m, double rel_tol = 1e-6);

double accuracy(const MlpModel& model, const Matrix& inputs, const std::vector<int>& labels);

// Checkpoint file: little-endian, 8-byte magic "SLABCKPT", version byte,
// activation byte, u32 layer count, u32 layer sizes, raw f64 params in
// layout order. load(save(m)) == m bit-exact.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace sharplab
