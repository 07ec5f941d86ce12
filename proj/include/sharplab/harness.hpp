#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sharplab/config.hpp"
#include "sharplab/data.hpp"
#include "sharplab/mlp.hpp"
#include "sharplab/optim.hpp"

namespace sharplab {

// Metrics CSV column order; emit_metrics writes exactly this header.
inline constexpr const char* kMetricsHeader =
    "step,epoch,lr,effective_rho,train_loss,perturbed_loss,cos_sim,grad_norm,"
    "momentum_norm,forward_count,backward_count,wall_ns";

struct MetricsRecord {
    long step = 0;
    long epoch = 0;
    double lr = 0.0;
    double effective_rho = 0.0;
    double train_loss = 0.0;  // loss at the unperturbed weights, same batch
    std::optional<double> perturbed_loss;  // loss at the gradient evaluation point
    std::optional<double> cos_sim;         // cos(v_{t-1}, g_t)
    double grad_norm = 0.0;
    double momentum_norm = 0.0;  // |v| after the update
    long forward_count = 0;
    long backward_count = 0;
    long long wall_ns = 0;  // excluded from the determinism contract
};

enum class LrSchedule : std::uint8_t { constant, cosine, cosine_warmup };
LrSchedule lr_schedule_from_string(const std::string& name);

// constant: eta0. cosine: eta0/2 (1 + cos(pi step/total)). cosine_warmup:
// eta0 (step+1)/warmup rising to eta0 at the seam, then cosine over the
// remaining steps; never negative.
double lr_at(LrSchedule schedule, long step, long total_steps, double eta0, long warmup_steps);

// Effective perturbation strength at a step: 0 inside warm-up when
// warmup_zero, otherwise spec.rho, times lr for lr_scaled normalization.
double rho_at(const PerturbationSpec& spec, long step, long warmup_steps, double lr);

struct EpochStats {
    long epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
};

struct RunResult {
    double final_train_loss = 0.0;
    double final_train_acc = 0.0;
    double final_test_loss = 0.0;
    double final_test_acc = 0.0;
    std::vector<EpochStats> epoch_curve;
    std::vector<MetricsRecord> metrics;
    bool diverged = false;
    long divergence_step = -1;
    long total_steps = 0;
    MlpModel final_model;  // finalized (unperturbed) weights
    std::optional<int> feature_rank;
    std::filesystem::path metrics_path;
    std::filesystem::path summary_path;
    std::filesystem::path checkpoint_path;
};

// Train per config; emits metrics.csv, summary.json and model.ckpt under
// out_dir (pass an empty path to skip files). Fully deterministic given the
// config seed, wall_ns column excluded.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir = {});

// Perturbation mask over parameter coordinates by named group.
std::optional<std::vector<std::uint8_t>> build_mask(const MlpModel& model,
                                                    const std::string& kind);

struct ScanRow {
    double rho = 0.0;
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    bool diverged = false;
};

// Cartesian product of rho values and seeds, one independent run per cell,
// executed by a worker pool (jobs <= 0 means hardware concurrency) and
// merged in deterministic (rho, seed) order. Diverged runs are recorded and
// the scan continues.
std::vector<ScanRow> rho_scan(const ExperimentConfig& base, std::span<const double> rhos,
                              std::span<const std::uint64_t> seeds, int jobs = 0);

// The log-spaced rho grid with mantissas {1, 1.5, 2.2, 3.4, 5, 6.7} per
// decade, starting at decade_start.
std::vector<double> rho_log_grid(double decade_start, int n_decades);

struct BenchRow {
    std::string optimizer;
    double steps_per_sec = 0.0;
    double fwd_per_step = 0.0;
    double bwd_per_step = 0.0;
    double relative_speed = 1.0;  // this steps/s over the baseline's
};

// Fixed-step timing with the first 10% discarded as warm-start; the first
// config is the baseline. All configs must share dataset/model/batch/seed.
std::vector<BenchRow> speed_benchmark(std::span<const ExperimentConfig> cfgs, long steps);

void emit_metrics(std::span<const MetricsRecord> records, const std::filesystem::path& path);
std::vector<MetricsRecord> parse_metrics(const std::filesystem::path& path);

void emit_summary(const RunResult& result, const ExperimentConfig& cfg,
                  const std::filesystem::path& path);

void emit_scan(std::span<const ScanRow> rows, const std::filesystem::path& path);
void emit_bench(std::span<const BenchRow> rows, const std::filesystem::path& path);

}  // namespace sharplab
