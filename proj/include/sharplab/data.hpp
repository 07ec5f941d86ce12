#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sharplab/matrix.hpp"
#include "sharplab/mlp.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

struct Dataset {
    Matrix inputs;            // N x D
    std::vector<int> labels;  // in [0, classes)
    int classes = 0;
    std::string name;

    std::size_t size() const { return inputs.rows; }
    std::size_t dim() const { return inputs.cols; }
};

struct BatchPlan {
    std::size_t batch_size = 32;
    std::uint64_t shuffle_seed = 0;
    bool drop_last = false;
};

// K class means drawn uniformly on the unit sphere, points = mean + N(0,
// sigma^2) noise. Labels are exactly balanced and class-grouped in order;
// identical seeds give bit-identical datasets.
Dataset make_gaussian_clusters(int classes, int dim, int n_per_class, double sigma,
                               std::uint64_t seed);

// Class-balanced split: the first head_per_class samples of every class go
// to the first dataset. Assumes the class-grouped order of
// make_gaussian_clusters.
std::pair<Dataset, Dataset> split_per_class(const Dataset& d, int head_per_class);

// IDX (big-endian) image/label pair, pixels scaled from u8 to [0,1].
// Images magic 0x00000803 with dims [N, rows, cols]; labels magic
// 0x00000801 with N entries. The two counts must agree.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// Writes the IDX pair back; inputs must hold u8/255 grid values so the
// round trip is byte-identical.
void save_idx(const Dataset& d, std::size_t rows, std::size_t cols,
              const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

struct Normalizer {
    std::vector<double> means;
    std::vector<double> stds;  // population std; 0 marks a constant feature
};

// Per-feature mean 0 / std 1; constant features map to 0. Returns the
// constants so held-out splits reuse the training statistics.
std::pair<Dataset, Normalizer> normalize_dataset(const Dataset& d);
Dataset apply_normalizer(const Normalizer& n, const Dataset& d);

// One epoch of batches under the seeded permutation of (shuffle_seed,
// epoch). Every sample appears exactly once; the final short batch is kept
// unless drop_last.
std::vector<Batch> batches(const Dataset& d, const BatchPlan& plan, long epoch);

}  // namespace sharplab
