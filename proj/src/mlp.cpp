#include "sharplab/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sharplab/errors.hpp"
#include "sharplab/kernels.hpp"

namespace sharplab {
namespace {

constexpr char kCheckpointMagic[8] = {'S', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kCheckpointVersion = 1;

struct ForwardPass {
    // activations[0] is the input batch; activations[l] the post-activation
    // output of layer l (logits for l == L).
    std::vector<Matrix> activations;
};

void validate_batch(const MlpModel& model, const Batch& batch) {
    if (batch.inputs.rows == 0) throw ArgumentError("batch: empty batch");
    if (batch.inputs.rows != batch.labels.size()) {
        throw DimensionError("batch: " + std::to_string(batch.inputs.rows) +
                             " inputs vs " + std::to_string(batch.labels.size()) +
                             " labels");
    }
    const int classes = model.layer_sizes.back();
    for (int label : batch.labels) {
        if (label < 0 || label >= classes) {
            throw ArgumentError("batch: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(classes) + ")");
        }
    }
}

void apply_activation(Activation act, Matrix& z) {
    switch (act) {
        case Activation::relu:
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::tanh:
            for (double& v : z.data) v = std::tanh(v);
            break;
    }
}

ForwardPass run_forward(const MlpModel& model, const ParamVector& w, const Matrix& inputs) {
    if (inputs.cols != model.input_dim()) {
        throw DimensionError("forward: input width " + std::to_string(inputs.cols) +
                             " != d0 " + std::to_string(model.input_dim()));
    }
    if (!all_finite(inputs)) throw InputError("forward: non-finite input");
    if (w.size() != MlpModel::param_count(model.layer_sizes)) {
        throw DimensionError("forward: parameter vector of wrong length");
    }

    ForwardPass pass;
    pass.activations.reserve(model.layer_count() + 1);
    pass.activations.push_back(inputs);

    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
        const std::size_t din = static_cast<std::size_t>(model.layer_sizes[l - 1]);
        const std::size_t dout = static_cast<std::size_t>(model.layer_sizes[l]);
        const Matrix& a = pass.activations.back();
        const double* weights = w.data() + model.weight_offset(l);
        const double* bias = w.data() + model.bias_offset(l);

        Matrix z(a.rows, dout);
        kernels::active().gemm_nn(a.data.data(), weights, z.data.data(), a.rows, din, dout);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* row = z.row(r);
            for (std::size_t c = 0; c < dout; ++c) row[c] += bias[c];
        }
        if (l < model.layer_count()) apply_activation(model.activation, z);
        pass.activations.push_back(std::move(z));
    }
    return pass;
}

// Per-row softmax and mean smoothed cross-entropy; dlogits (optional out) is
// the gradient of the mean loss w.r.t. the logits.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     double smoothing, Matrix* dlogits) {
    const std::size_t n = logits.rows;
    const std::size_t k = logits.cols;
    const double uniform = smoothing / static_cast<double>(k);
    double total = 0.0;
    if (dlogits) *dlogits = Matrix(n, k);

    for (std::size_t i = 0; i < n; ++i) {
        const double* z = logits.row(i);
        const double zmax = *std::max_element(z, z + k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - zmax);
        const double logsum = std::log(sum) + zmax;

        double dotqz = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double q = uniform + (static_cast<int>(c) == labels[i] ? 1.0 - smoothing : 0.0);
            dotqz += q * z[c];
        }
        total += logsum - dotqz;

        if (dlogits) {
            double* drow = dlogits->row(i);
            for (std::size_t c = 0; c < k; ++c) {
                const double p = std::exp(z[c] - logsum);
                const double q = uniform + (static_cast<int>(c) == labels[i] ? 1.0 - smoothing : 0.0);
                drow[c] = (p - q) / static_cast<double>(n);
            }
        }
    }
    return total / static_cast<double>(n);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw LengthError("checkpoint: truncated file " + path.string());
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ArgumentError("unknown activation '" + name + "'");
}

const char* to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

std::size_t MlpModel::weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 1; l < layer; ++l) {
        off += static_cast<std::size_t>(layer_sizes[l - 1]) * layer_sizes[l] + layer_sizes[l];
    }
    return off;
}

std::size_t MlpModel::bias_offset(std::size_t layer) const {
    return weight_offset(layer) +
           static_cast<std::size_t>(layer_sizes[layer - 1]) * layer_sizes[layer];
}

std::size_t MlpModel::param_count(const std::vector<int>& layer_sizes) {
    std::size_t count = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        count += static_cast<std::size_t>(layer_sizes[l - 1]) * layer_sizes[l] + layer_sizes[l];
    }
    return count;
}

MlpModel MlpModel::init(std::vector<int> layer_sizes, Activation act, RngStream& rng,
                        double init_scale) {
    if (layer_sizes.size() < 2) throw ShapeError("model: need at least one layer");
    for (int d : layer_sizes) {
        if (d <= 0) throw ArgumentError("model: layer sizes must be positive");
    }
    MlpModel m;
    m.layer_sizes = std::move(layer_sizes);
    m.activation = act;
    m.params = zeros(param_count(m.layer_sizes));
    for (std::size_t l = 1; l <= m.layer_count(); ++l) {
        const double fan_in = static_cast<double>(m.layer_sizes[l - 1]);
        const double gain = act == Activation::relu ? 2.0 : 1.0;
        const double stddev = init_scale * std::sqrt(gain / fan_in);
        double* w = m.params.data() + m.weight_offset(l);
        const std::size_t count =
            static_cast<std::size_t>(m.layer_sizes[l - 1]) * m.layer_sizes[l];
        for (std::size_t i = 0; i < count; ++i) w[i] = stddev * rng.gaussian();
    }
    return m;
}

Matrix forward(const MlpModel& model, const Matrix& inputs) {
    return forward_with(model, model.params, inputs);
}

Matrix forward_with(const MlpModel& model, const ParamVector& w, const Matrix& inputs) {
    return std::move(run_forward(model, w, inputs).activations.back());
}

double loss(const MlpModel& model, const Batch& batch, const LossConfig& cfg) {
    return loss_with(model, model.params, batch, cfg);
}

double loss_with(const MlpModel& model, const ParamVector& w, const Batch& batch,
                 const LossConfig& cfg) {
    validate_batch(model, batch);
    const Matrix logits = forward_with(model, w, batch.inputs);
    return cross_entropy(logits, batch.labels, cfg.label_smoothing, nullptr);
}

ParamVector grad(const MlpModel& model, const Batch& batch, const LossConfig& cfg) {
    return grad_with(model, model.params, batch, cfg);
}

ParamVector grad_with(const MlpModel& model, const ParamVector& w, const Batch& batch,
                      const LossConfig& cfg) {
    return loss_grad_with(model, w, batch, cfg).second;
}

std::pair<double, ParamVector> loss_grad_with(const MlpModel& model, const ParamVector& w,
                                              const Batch& batch, const LossConfig& cfg) {
    validate_batch(model, batch);
    const ForwardPass pass = run_forward(model, w, batch.inputs);
    const Matrix& logits = pass.activations.back();

    Matrix dz;
    const double value = cross_entropy(logits, batch.labels, cfg.label_smoothing, &dz);

    ParamVector g = zeros(w.size());
    for (std::size_t l = model.layer_count(); l >= 1; --l) {
        const std::size_t din = static_cast<std::size_t>(model.layer_sizes[l - 1]);
        const std::size_t dout = static_cast<std::size_t>(model.layer_sizes[l]);
        const Matrix& a_prev = pass.activations[l - 1];

        // dW_l = A_{l-1}^T dZ_l, db_l = column sums of dZ_l
        kernels::active().gemm_tn(a_prev.data.data(), dz.data.data(),
                                  g.data() + model.weight_offset(l), din, a_prev.rows, dout);
        const std::vector<double> db = column_sums(dz);
        std::copy(db.begin(), db.end(), g.data() + model.bias_offset(l));

        if (l == 1) break;

        // dA_{l-1} = dZ_l W_l^T, then through the activation.
        Matrix da(dz.rows, din);
        kernels::active().gemm_nt(dz.data.data(), w.data() + model.weight_offset(l),
                                  da.data.data(), dz.rows, dout, din);
        const Matrix& a_here = pass.activations[l - 1];
        switch (model.activation) {
            case Activation::relu:
                for (std::size_t i = 0; i < da.data.size(); ++i) {
                    da.data[i] = a_here.data[i] > 0.0 ? da.data[i] : 0.0;
                }
                break;
            case Activation::tanh:
                for (std::size_t i = 0; i < da.data.size(); ++i) {
                    da.data[i] *= 1.0 - a_here.data[i] * a_here.data[i];
                }
                break;
        }
        dz = std::move(da);
    }
    return {value, std::move(g)};
}

double hvp_default_step(double w_norm, double d_norm) {
    return 1e-4 * (1.0 + w_norm) / (d_norm + 1e-30);
}

ParamVector hvp(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                const ParamVector& d, double h) {
    if (h <= 0.0) throw ArgumentError("hvp: step h must be positive");
    if (d.size() != model.params.size()) throw DimensionError("hvp: direction of wrong length");
    const ParamVector wp = axpy(h, d, model.params);
    const ParamVector wm = axpy(-h, d, model.params);
    ParamVector gp = grad_with(model, wp, batch, cfg);
    const ParamVector gm = grad_with(model, wm, batch, cfg);
    axpy_inplace(-1.0, gm, gp);
    scale_inplace(1.0 / (2.0 * h), gp);
    return gp;
}

ParamVector hvp(const MlpModel& model, const Batch& batch, const LossConfig& cfg,
                const ParamVector& d) {
    return hvp(model, batch, cfg, d, hvp_default_step(l2_norm(model.params), l2_norm(d)));
}

Matrix feature_matrix(const MlpModel& model, std::span<const Batch> dataset) {
    if (model.layer_count() < 2) {
        throw ShapeError("feature_matrix: model has no hidden layer");
    }
    std::size_t total = 0;
    for (const Batch& b : dataset) total += b.inputs.rows;
    const std::size_t width = static_cast<std::size_t>(model.layer_sizes[model.layer_count() - 1]);

    Matrix features(total, width);
    std::size_t row = 0;
    for (const Batch& b : dataset) {
        ForwardPass pass = run_forward(model, model.params, b.inputs);
        const Matrix& penultimate = pass.activations[model.layer_count() - 1];
        std::copy(penultimate.data.begin(), penultimate.data.end(), features.row(row));
        row += penultimate.rows;
    }
    return features;
}

int numerical_rank(const Matrix& m, double rel_tol) {
    if (m.rows == 0 || m.cols == 0) throw ShapeError("numerical_rank: empty matrix");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw ArgumentError("numerical_rank: rel_tol must be in (0,1)");
    }
    Eigen::MatrixXd em(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) em(static_cast<Eigen::Index>(r),
                                                    static_cast<Eigen::Index>(c)) = m(r, c);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(em);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cutoff = rel_tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++rank;
    }
    return rank;
}

double accuracy(const MlpModel& model, const Matrix& inputs, const std::vector<int>& labels) {
    const Matrix logits = forward(model, inputs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row(i);
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(row, row + logits.cols) - row);
        if (static_cast<int>(best) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows);
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::uint8_t version = kCheckpointVersion;
    const std::uint8_t act = static_cast<std::uint8_t>(model.activation);
    out.write(reinterpret_cast<const char*>(&version), 1);
    out.write(reinterpret_cast<const char*>(&act), 1);
    write_u32(out, static_cast<std::uint32_t>(model.layer_sizes.size()));
    for (int d : model.layer_sizes) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : model.params) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8)) throw LengthError("checkpoint: truncated file " + path.string());
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw FormatError("checkpoint: bad magic in " + path.string());
    }
    std::uint8_t version = 0;
    std::uint8_t act = 0;
    if (!in.read(reinterpret_cast<char*>(&version), 1) ||
        !in.read(reinterpret_cast<char*>(&act), 1)) {
        throw LengthError("checkpoint: truncated file " + path.string());
    }
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    if (act > 1) throw FormatError("checkpoint: unknown activation tag");

    MlpModel m;
    m.activation = static_cast<Activation>(act);
    const std::uint32_t n = read_u32(in, path);
    if (n < 2) throw FormatError("checkpoint: fewer than two layer sizes");
    m.layer_sizes.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        m.layer_sizes[i] = static_cast<int>(read_u32(in, path));
    }
    const std::size_t dim = MlpModel::param_count(m.layer_sizes);
    m.params.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        unsigned char buf[8];
        if (!in.read(reinterpret_cast<char*>(buf), 8)) {
            throw LengthError("checkpoint: truncated parameter payload in " + path.string());
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
        m.params[i] = std::bit_cast<double>(bits);
    }
    return m;
}

}  // namespace sharplab
