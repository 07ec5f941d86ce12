#include "sharplab/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sharplab/errors.hpp"
#include "sharplab/mlp.hpp"
#include "sharplab/optim.hpp"

namespace sharplab {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" +
                          value + "'");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (value == "none" || value.empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(static_cast<int>(parse_long(key, trim(item))));
    }
    return out;
}

std::string join(const std::vector<int>& v) {
    if (v.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    ExperimentConfig cfg;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> keys = {
        {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = parse_u64(k, v); }},
        {"loss.label_smoothing",
         [&](const std::string& k, const std::string& v) { cfg.label_smoothing = parse_double(k, v); }},
        {"dataset.kind", [&](const std::string&, const std::string& v) { cfg.dataset.kind = v; }},
        {"dataset.classes",
         [&](const std::string& k, const std::string& v) { cfg.dataset.classes = static_cast<int>(parse_long(k, v)); }},
        {"dataset.dim",
         [&](const std::string& k, const std::string& v) { cfg.dataset.dim = static_cast<int>(parse_long(k, v)); }},
        {"dataset.train_per_class",
         [&](const std::string& k, const std::string& v) { cfg.dataset.train_per_class = static_cast<int>(parse_long(k, v)); }},
        {"dataset.test_per_class",
         [&](const std::string& k, const std::string& v) { cfg.dataset.test_per_class = static_cast<int>(parse_long(k, v)); }},
        {"dataset.sigma",
         [&](const std::string& k, const std::string& v) { cfg.dataset.sigma = parse_double(k, v); }},
        {"dataset.images", [&](const std::string&, const std::string& v) { cfg.dataset.images = v; }},
        {"dataset.labels", [&](const std::string&, const std::string& v) { cfg.dataset.labels = v; }},
        {"dataset.test_images",
         [&](const std::string&, const std::string& v) { cfg.dataset.test_images = v; }},
        {"dataset.test_labels",
         [&](const std::string&, const std::string& v) { cfg.dataset.test_labels = v; }},
        {"dataset.normalize",
         [&](const std::string& k, const std::string& v) { cfg.dataset.normalize = parse_bool(k, v); }},
        {"model.hidden",
         [&](const std::string& k, const std::string& v) { cfg.model.hidden = parse_int_list(k, v); }},
        {"model.activation",
         [&](const std::string&, const std::string& v) { cfg.model.activation = v; }},
        {"model.init_scale",
         [&](const std::string& k, const std::string& v) { cfg.model.init_scale = parse_double(k, v); }},
        {"optimizer.kind", [&](const std::string&, const std::string& v) { cfg.optimizer.kind = v; }},
        {"optimizer.lr",
         [&](const std::string& k, const std::string& v) { cfg.optimizer.lr = parse_double(k, v); }},
        {"optimizer.momentum",
         [&](const std::string& k, const std::string& v) { cfg.optimizer.momentum = parse_double(k, v); }},
        {"optimizer.weight_decay",
         [&](const std::string& k, const std::string& v) { cfg.optimizer.weight_decay = parse_double(k, v); }},
        {"optimizer.rho",
         [&](const std::string& k, const std::string& v) { cfg.optimizer.rho = parse_double(k, v); }},
        {"perturbation.kind",
         [&](const std::string&, const std::string& v) { cfg.perturbation.kind = v; }},
        {"perturbation.normalization",
         [&](const std::string&, const std::string& v) { cfg.perturbation.normalization = v; }},
        {"perturbation.mask",
         [&](const std::string&, const std::string& v) { cfg.perturbation.mask = v; }},
        {"perturbation.warmup_zero",
         [&](const std::string& k, const std::string& v) { cfg.perturbation.warmup_zero = parse_bool(k, v); }},
        {"schedule.kind", [&](const std::string&, const std::string& v) { cfg.schedule.kind = v; }},
        {"schedule.epochs",
         [&](const std::string& k, const std::string& v) { cfg.schedule.epochs = parse_long(k, v); }},
        {"schedule.warmup_epochs",
         [&](const std::string& k, const std::string& v) { cfg.schedule.warmup_epochs = parse_long(k, v); }},
        {"batch.size",
         [&](const std::string& k, const std::string& v) { cfg.batch.size = static_cast<std::size_t>(parse_long(k, v)); }},
        {"batch.drop_last",
         [&](const std::string& k, const std::string& v) { cfg.batch.drop_last = parse_bool(k, v); }},
        {"telemetry.cosine_window",
         [&](const std::string& k, const std::string& v) { cfg.telemetry.cosine_window = static_cast<int>(parse_long(k, v)); }},
        {"telemetry.probe_every",
         [&](const std::string& k, const std::string& v) { cfg.telemetry.probe_every = parse_long(k, v); }},
        {"telemetry.feature_rank",
         [&](const std::string& k, const std::string& v) { cfg.telemetry.feature_rank = parse_bool(k, v); }},
    };

    std::stringstream stream(text);
    std::string line;
    long line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) {
            throw ConfigError("config: unknown key '" + key + "' on line " +
                              std::to_string(line_no));
        }
        it->second(key, value);
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (dataset.kind != "clusters" && dataset.kind != "idx") {
        throw ConfigError("config: dataset.kind must be clusters or idx");
    }
    if (dataset.kind == "clusters") {
        if (dataset.classes < 2) throw ConfigError("config: dataset.classes must be >= 2");
        if (dataset.dim < 1) throw ConfigError("config: dataset.dim must be >= 1");
        if (dataset.train_per_class < 1 || dataset.test_per_class < 0) {
            throw ConfigError("config: dataset sizes must be positive");
        }
        if (dataset.sigma < 0.0) throw ConfigError("config: dataset.sigma must be >= 0");
    } else {
        if (dataset.images.empty() || dataset.labels.empty()) {
            throw ConfigError("config: idx dataset needs dataset.images and dataset.labels");
        }
        if (dataset.test_images.empty() != dataset.test_labels.empty()) {
            throw ConfigError("config: idx test split needs both files or neither");
        }
    }
    for (int h : model.hidden) {
        if (h < 1) throw ConfigError("config: model.hidden entries must be >= 1");
    }
    activation_from_string(model.activation);  // throws on nonsense
    if (model.init_scale <= 0.0) throw ConfigError("config: model.init_scale must be > 0");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
        throw ConfigError("config: loss.label_smoothing must be in [0,1)");
    }
    if (optimizer.kind != "sgd" && optimizer.kind != "nag" && optimizer.kind != "sam" &&
        optimizer.kind != "msam" && optimizer.kind != "msam_ref" &&
        optimizer.kind != "perturbed") {
        throw ConfigError("config: unknown optimizer.kind '" + optimizer.kind + "'");
    }
    if (!(optimizer.lr > 0.0)) throw ConfigError("config: optimizer.lr must be > 0");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) {
        throw ConfigError("config: optimizer.momentum must be in [0,1)");
    }
    if (optimizer.weight_decay < 0.0) {
        throw ConfigError("config: optimizer.weight_decay must be >= 0");
    }
    try {
        perturb_kind_from_string(perturbation.kind);
        perturb_norm_from_string(perturbation.normalization);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (perturbation.mask != "none" && perturbation.mask != "weights" &&
        perturbation.mask != "biases" && perturbation.mask != "first_layer" &&
        perturbation.mask != "last_layer") {
        throw ConfigError("config: unknown perturbation.mask '" + perturbation.mask + "'");
    }
    if (schedule.kind != "constant" && schedule.kind != "cosine" &&
        schedule.kind != "cosine_warmup") {
        throw ConfigError("config: unknown schedule.kind '" + schedule.kind + "'");
    }
    if (schedule.epochs < 1) throw ConfigError("config: schedule.epochs must be >= 1");
    if (schedule.warmup_epochs < 0 || schedule.warmup_epochs >= schedule.epochs) {
        throw ConfigError("config: schedule.warmup_epochs must be in [0, epochs)");
    }
    if (batch.size < 1) throw ConfigError("config: batch.size must be >= 1");
    if (telemetry.cosine_window < 1) {
        throw ConfigError("config: telemetry.cosine_window must be >= 1");
    }
    if (telemetry.probe_every < 1) {
        throw ConfigError("config: telemetry.probe_every must be >= 1");
    }
}

std::string ExperimentConfig::to_string() const {
    std::ostringstream out;
    out << "seed = " << seed << "\n";
    out << "loss.label_smoothing = " << label_smoothing << "\n";
    out << "dataset.kind = " << dataset.kind << "\n";
    if (dataset.kind == "clusters") {
        out << "dataset.classes = " << dataset.classes << "\n";
        out << "dataset.dim = " << dataset.dim << "\n";
        out << "dataset.train_per_class = " << dataset.train_per_class << "\n";
        out << "dataset.test_per_class = " << dataset.test_per_class << "\n";
        out << "dataset.sigma = " << dataset.sigma << "\n";
    } else {
        out << "dataset.images = " << dataset.images << "\n";
        out << "dataset.labels = " << dataset.labels << "\n";
        if (!dataset.test_images.empty()) {
            out << "dataset.test_images = " << dataset.test_images << "\n";
            out << "dataset.test_labels = " << dataset.test_labels << "\n";
        }
    }
    out << "dataset.normalize = " << (dataset.normalize ? "true" : "false") << "\n";
    out << "model.hidden = " << join(model.hidden) << "\n";
    out << "model.activation = " << model.activation << "\n";
    out << "model.init_scale = " << model.init_scale << "\n";
    out << "optimizer.kind = " << optimizer.kind << "\n";
    out << "optimizer.lr = " << optimizer.lr << "\n";
    out << "optimizer.momentum = " << optimizer.momentum << "\n";
    out << "optimizer.weight_decay = " << optimizer.weight_decay << "\n";
    out << "optimizer.rho = " << optimizer.rho << "\n";
    out << "perturbation.kind = " << perturbation.kind << "\n";
    out << "perturbation.normalization = " << perturbation.normalization << "\n";
    out << "perturbation.mask = " << perturbation.mask << "\n";
    out << "perturbation.warmup_zero = " << (perturbation.warmup_zero ? "true" : "false")
        << "\n";
    out << "schedule.kind = " << schedule.kind << "\n";
    out << "schedule.epochs = " << schedule.epochs << "\n";
    out << "schedule.warmup_epochs = " << schedule.warmup_epochs << "\n";
    out << "batch.size = " << batch.size << "\n";
    out << "batch.drop_last = " << (batch.drop_last ? "true" : "false") << "\n";
    out << "telemetry.cosine_window = " << telemetry.cosine_window << "\n";
    out << "telemetry.probe_every = " << telemetry.probe_every << "\n";
    out << "telemetry.feature_rank = " << (telemetry.feature_rank ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace sharplab
