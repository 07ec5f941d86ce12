#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sharplab {

// Flat key = value configuration with dotted sections. '#' starts a comment;
// unknown keys are hard errors so a typo cannot silently poison a sweep.
struct DatasetSpec {
    std::string kind = "clusters";  // clusters | idx
    // clusters
    int classes = 4;
    int dim = 16;
    int train_per_class = 64;
    int test_per_class = 256;
    double sigma = 0.5;
    // idx
    std::string images;
    std::string labels;
    std::string test_images;
    std::string test_labels;
    bool normalize = true;
};

struct ModelSpec {
    std::vector<int> hidden = {32};  // layer widths between input and classes
    std::string activation = "relu";
    double init_scale = 1.0;
};

struct OptimizerSpec {
    std::string kind = "sgd";  // sgd | nag | sam | msam | msam_ref | perturbed
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double rho = 0.0;
};

struct PerturbationConfig {
    std::string kind = "none";  // for optimizer.kind = perturbed
    std::string normalization = "l2";
    std::string mask = "none";  // none | weights | biases | first_layer | last_layer
    bool warmup_zero = false;
};

struct ScheduleSpec {
    std::string kind = "constant";  // constant | cosine | cosine_warmup
    long epochs = 10;
    long warmup_epochs = 0;
};

struct BatchSpec {
    std::size_t size = 32;
    bool drop_last = false;
};

struct TelemetrySpec {
    int cosine_window = 50;  // running-average window for summary statistics
    long probe_every = 1;    // steps between unperturbed-loss probes
    bool feature_rank = false;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelSpec model;
    double label_smoothing = 0.1;
    OptimizerSpec optimizer;
    PerturbationConfig perturbation;
    ScheduleSpec schedule;
    BatchSpec batch;
    TelemetrySpec telemetry;
    std::uint64_t seed = 1;

    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_string(const std::string& text);

    // Throws ConfigError on any out-of-range or inconsistent field.
    void validate() const;

    // Serialization in the same key = value schema; parses back identically.
    std::string to_string() const;
};

}  // namespace sharplab
