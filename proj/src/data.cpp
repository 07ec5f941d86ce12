#include "sharplab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sharplab/errors.hpp"
#include "sharplab/param_vector.hpp"

namespace sharplab {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw LengthError("idx: truncated header in " + path.string());
    }
    return (static_cast<std::uint32_t>(buf[0]) << 24) |
           (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char buf[4] = {
        static_cast<unsigned char>((v >> 24) & 0xFF),
        static_cast<unsigned char>((v >> 16) & 0xFF),
        static_cast<unsigned char>((v >> 8) & 0xFF),
        static_cast<unsigned char>(v & 0xFF),
    };
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

Dataset make_gaussian_clusters(int classes, int dim, int n_per_class, double sigma,
                               std::uint64_t seed) {
    if (classes < 2) throw ArgumentError("clusters: need at least 2 classes");
    if (dim < 1) throw ArgumentError("clusters: dim must be >= 1");
    if (n_per_class < 1) throw ArgumentError("clusters: n_per_class must be >= 1");
    if (sigma < 0.0) throw ArgumentError("clusters: sigma must be >= 0");

    RngStream rng(seed);
    std::vector<ParamVector> means;
    means.reserve(static_cast<std::size_t>(classes));
    for (int k = 0; k < classes; ++k) {
        ParamVector m = gaussian_vector(rng, static_cast<std::size_t>(dim), 1.0);
        double n = l2_norm(m);
        while (n == 0.0) {  // astronomically unlikely; redraw keeps the contract
            m = gaussian_vector(rng, static_cast<std::size_t>(dim), 1.0);
            n = l2_norm(m);
        }
        scale_inplace(1.0 / n, m);
        means.push_back(std::move(m));
    }

    Dataset d;
    d.classes = classes;
    d.name = "gaussian_clusters";
    d.inputs = Matrix(static_cast<std::size_t>(classes) * n_per_class,
                      static_cast<std::size_t>(dim));
    d.labels.resize(d.inputs.rows);
    std::size_t row = 0;
    for (int k = 0; k < classes; ++k) {
        for (int i = 0; i < n_per_class; ++i) {
            double* out = d.inputs.row(row);
            for (int c = 0; c < dim; ++c) {
                out[c] = means[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] +
                         (sigma > 0.0 ? sigma * rng.gaussian() : 0.0);
            }
            d.labels[row] = k;
            ++row;
        }
    }
    return d;
}

std::pair<Dataset, Dataset> split_per_class(const Dataset& d, int head_per_class) {
    if (head_per_class < 1) throw ArgumentError("split: head_per_class must be >= 1");
    Dataset head;
    Dataset tail;
    head.classes = tail.classes = d.classes;
    head.name = d.name + "/head";
    tail.name = d.name + "/tail";

    std::vector<std::size_t> head_rows;
    std::vector<std::size_t> tail_rows;
    std::vector<int> seen(static_cast<std::size_t>(d.classes), 0);
    for (std::size_t r = 0; r < d.size(); ++r) {
        int& count = seen[static_cast<std::size_t>(d.labels[r])];
        (count < head_per_class ? head_rows : tail_rows).push_back(r);
        ++count;
    }
    for (int k = 0; k < d.classes; ++k) {
        if (seen[static_cast<std::size_t>(k)] < head_per_class) {
            throw ArgumentError("split: class " + std::to_string(k) + " has fewer than " +
                                std::to_string(head_per_class) + " samples");
        }
    }

    const auto take = [&](Dataset& out, const std::vector<std::size_t>& rows) {
        out.inputs = Matrix(rows.size(), d.dim());
        out.labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy(d.inputs.row(rows[i]), d.inputs.row(rows[i]) + d.dim(),
                      out.inputs.row(i));
            out.labels[i] = d.labels[rows[i]];
        }
    };
    take(head, head_rows);
    take(tail, tail_rows);
    return {std::move(head), std::move(tail)};
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw IoError("idx: cannot open " + images_path.string());
    const std::uint32_t imagic = read_be32(images, images_path);
    if (imagic != kIdxImagesMagic) {
        throw FormatError("idx: bad magic in images file " + images_path.string());
    }
    const std::uint32_t n = read_be32(images, images_path);
    const std::uint32_t rows = read_be32(images, images_path);
    const std::uint32_t cols = read_be32(images, images_path);

    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("idx: cannot open " + labels_path.string());
    const std::uint32_t lmagic = read_be32(labels, labels_path);
    if (lmagic != kIdxLabelsMagic) {
        throw FormatError("idx: bad magic in labels file " + labels_path.string());
    }
    const std::uint32_t ln = read_be32(labels, labels_path);
    if (ln != n) {
        throw ConsistencyError("idx: " + std::to_string(n) + " images vs " +
                               std::to_string(ln) + " labels");
    }

    Dataset d;
    d.name = images_path.filename().string();
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    d.inputs = Matrix(n, pixels);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()),
                         static_cast<std::streamsize>(pixels))) {
            throw LengthError("idx: truncated image payload in " + images_path.string());
        }
        double* out = d.inputs.row(i);
        for (std::size_t p = 0; p < pixels; ++p) out[p] = buf[p] / 255.0;
    }
    d.labels.resize(n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        unsigned char l = 0;
        if (!labels.read(reinterpret_cast<char*>(&l), 1)) {
            throw LengthError("idx: truncated label payload in " + labels_path.string());
        }
        d.labels[i] = l;
        max_label = std::max(max_label, static_cast<int>(l));
    }
    d.classes = max_label + 1;
    return d;
}

void save_idx(const Dataset& d, std::size_t rows, std::size_t cols,
              const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
    if (rows * cols != d.dim()) throw ShapeError("idx: rows*cols != feature width");
    std::ofstream images(images_path, std::ios::binary);
    if (!images) throw IoError("idx: cannot open " + images_path.string() + " for writing");
    write_be32(images, kIdxImagesMagic);
    write_be32(images, static_cast<std::uint32_t>(d.size()));
    write_be32(images, static_cast<std::uint32_t>(rows));
    write_be32(images, static_cast<std::uint32_t>(cols));
    for (std::size_t r = 0; r < d.size(); ++r) {
        const double* row = d.inputs.row(r);
        for (std::size_t p = 0; p < d.dim(); ++p) {
            const double v = row[p] * 255.0;
            if (v < -0.5 || v > 255.5) {
                throw ArgumentError("idx: inputs are not u8/255 grid values");
            }
            const unsigned char byte = static_cast<unsigned char>(std::lround(v));
            images.write(reinterpret_cast<const char*>(&byte), 1);
        }
    }

    std::ofstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("idx: cannot open " + labels_path.string() + " for writing");
    write_be32(labels, kIdxLabelsMagic);
    write_be32(labels, static_cast<std::uint32_t>(d.size()));
    for (int l : d.labels) {
        const unsigned char byte = static_cast<unsigned char>(l);
        labels.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

std::pair<Dataset, Normalizer> normalize_dataset(const Dataset& d) {
    if (d.size() < 2) throw ArgumentError("normalize: need at least 2 samples");
    Normalizer norm;
    norm.means.assign(d.dim(), 0.0);
    norm.stds.assign(d.dim(), 0.0);

    const double n = static_cast<double>(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
        const double* row = d.inputs.row(r);
        for (std::size_t c = 0; c < d.dim(); ++c) norm.means[c] += row[c];
    }
    for (double& m : norm.means) m /= n;
    for (std::size_t r = 0; r < d.size(); ++r) {
        const double* row = d.inputs.row(r);
        for (std::size_t c = 0; c < d.dim(); ++c) {
            const double dev = row[c] - norm.means[c];
            norm.stds[c] += dev * dev;
        }
    }
    for (double& s : norm.stds) s = std::sqrt(s / n);
    return {apply_normalizer(norm, d), std::move(norm)};
}

Dataset apply_normalizer(const Normalizer& norm, const Dataset& d) {
    if (norm.means.size() != d.dim()) throw DimensionError("normalize: width mismatch");
    Dataset out = d;
    for (std::size_t r = 0; r < out.size(); ++r) {
        double* row = out.inputs.row(r);
        for (std::size_t c = 0; c < out.dim(); ++c) {
            row[c] = norm.stds[c] > 0.0 ? (row[c] - norm.means[c]) / norm.stds[c] : 0.0;
        }
    }
    return out;
}

std::vector<Batch> batches(const Dataset& d, const BatchPlan& plan, long epoch) {
    if (plan.batch_size < 1) throw ArgumentError("batches: batch_size must be >= 1");
    if (plan.drop_last && plan.batch_size > d.size()) {
        throw ArgumentError("batches: batch_size exceeds dataset with drop_last");
    }

    // Permutation is a pure function of (shuffle_seed, epoch).
    RngStream rng = RngStream(plan.shuffle_seed).split(static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = d.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }

    std::vector<Batch> out;
    for (std::size_t start = 0; start < d.size(); start += plan.batch_size) {
        const std::size_t end = std::min(start + plan.batch_size, d.size());
        if (plan.drop_last && end - start < plan.batch_size) break;
        Batch b;
        b.inputs = Matrix(end - start, d.dim());
        b.labels.resize(end - start);
        for (std::size_t i = start; i < end; ++i) {
            std::copy(d.inputs.row(order[i]), d.inputs.row(order[i]) + d.dim(),
                      b.inputs.row(i - start));
            b.labels[i - start] = d.labels[order[i]];
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace sharplab
