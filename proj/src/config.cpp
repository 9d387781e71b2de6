#include "msnn/config.hpp"

#include <fstream>

#include "msnn/error.hpp"
#include "msnn/network.hpp"

namespace msnn {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not an unsigned integer");
    }
}

} // namespace

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    if (key == "dataset") dataset = value;
    else if (key == "mnist_train_images") mnist_train_images = value;
    else if (key == "mnist_train_labels") mnist_train_labels = value;
    else if (key == "mnist_test_images") mnist_test_images = value;
    else if (key == "mnist_test_labels") mnist_test_labels = value;
    else if (key == "coil20_dir") coil20_dir = value;
    else if (key == "coil_train_per_class") coil_train_per_class = to_int(key, value);
    else if (key == "train_subset_per_class") train_subset_per_class = to_int(key, value);
    else if (key == "input_side") input_side = to_int(key, value);
    else if (key == "kernel_side") kernel_side = to_int(key, value);
    else if (key == "kernel_count") kernel_count = to_int(key, value);
    else if (key == "pool_scale") pool_scale = to_int(key, value);
    else if (key == "block_count") block_count = to_int(key, value);
    else if (key == "fc_hidden") fc_hidden = to_int(key, value);
    else if (key == "assom_modules") assom_modules = to_int(key, value);
    else if (key == "assom_epochs") assom_epochs = to_int(key, value);
    else if (key == "assom_eta0") assom_eta0 = to_double(key, value);
    else if (key == "assom_decay") assom_decay = to_double(key, value);
    else if (key == "patch_stride") patch_stride = to_int(key, value);
    else if (key == "sgd_epochs") sgd_epochs = to_int(key, value);
    else if (key == "sgd_batch") sgd_batch = to_int(key, value);
    else if (key == "sgd_eta0") sgd_eta0 = to_double(key, value);
    else if (key == "sgd_decay") sgd_decay = to_double(key, value);
    else if (key == "activation") activation = value;
    else if (key == "kernel_init") kernel_init = value;
    else if (key == "seed") seed = to_u64(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
    if (dataset != "mnist" && dataset != "coil20")
        throw ConfigError("dataset must be 'mnist' or 'coil20'");
    if (dataset == "mnist") {
        if (mnist_train_images.empty() || mnist_train_labels.empty() ||
            mnist_test_images.empty() || mnist_test_labels.empty())
            throw ConfigError("mnist dataset requires the four idx file paths");
    } else if (coil20_dir.empty()) {
        throw ConfigError("coil20 dataset requires coil20_dir");
    }
    if (kernel_count < 1 || kernel_count > kernel_side * kernel_side)
        throw ConfigError("kernel_count must be within [1, kernel_side^2]");
    if (block_count < 1) throw ConfigError("block_count must be positive");
    if (modules() < block_count)
        throw ConfigError("assom_modules (" + std::to_string(modules()) +
                          ") must be at least block_count (" + std::to_string(block_count) + ")");
    if (fc_hidden < 1) throw ConfigError("fc_hidden must be positive");
    if (assom_epochs < 0 || sgd_epochs < 0) throw ConfigError("epoch counts must be >= 0");
    if (sgd_batch < 1) throw ConfigError("sgd_batch must be positive");
    if (patch_stride < 1) throw ConfigError("patch_stride must be positive");
    if (!(assom_eta0 > 0.0) || !(sgd_eta0 > 0.0))
        throw ConfigError("learning rates must be positive");
    if (!(assom_decay >= 0.0) || !(sgd_decay >= 0.0))
        throw ConfigError("decay factors must be non-negative");
    if (kernel_init != "subspace" && kernel_init != "random")
        throw ConfigError("kernel_init must be 'subspace' or 'random'");
    parse_activation(activation);
    compute_shapes(input_side, kernel_side, pool_scale); // throws on bad shape algebra
}

void ExperimentConfig::echo(std::FILE* out) const {
    std::fprintf(out, "dataset = %s\n", dataset.c_str());
    if (dataset == "mnist") {
        std::fprintf(out, "mnist_train_images = %s\n", mnist_train_images.c_str());
        std::fprintf(out, "mnist_train_labels = %s\n", mnist_train_labels.c_str());
        std::fprintf(out, "mnist_test_images = %s\n", mnist_test_images.c_str());
        std::fprintf(out, "mnist_test_labels = %s\n", mnist_test_labels.c_str());
    } else {
        std::fprintf(out, "coil20_dir = %s\n", coil20_dir.c_str());
        std::fprintf(out, "coil_train_per_class = %d\n", coil_train_per_class);
    }
    if (train_subset_per_class > 0)
        std::fprintf(out, "train_subset_per_class = %d\n", train_subset_per_class);
    std::fprintf(out, "input_side = %d\n", input_side);
    std::fprintf(out, "kernel_side = %d\n", kernel_side);
    std::fprintf(out, "kernel_count = %d\n", kernel_count);
    std::fprintf(out, "pool_scale = %d\n", pool_scale);
    std::fprintf(out, "block_count = %d\n", block_count);
    std::fprintf(out, "fc_hidden = %d\n", fc_hidden);
    std::fprintf(out, "assom_modules = %d\n", modules());
    std::fprintf(out, "assom_epochs = %d\n", assom_epochs);
    std::fprintf(out, "assom_eta0 = %.17g\n", assom_eta0);
    std::fprintf(out, "assom_decay = %.17g\n", assom_decay);
    std::fprintf(out, "patch_stride = %d\n", patch_stride);
    std::fprintf(out, "sgd_epochs = %d\n", sgd_epochs);
    std::fprintf(out, "sgd_batch = %d\n", sgd_batch);
    std::fprintf(out, "sgd_eta0 = %.17g\n", sgd_eta0);
    std::fprintf(out, "sgd_decay = %.17g\n", sgd_decay);
    std::fprintf(out, "activation = %s\n", activation.c_str());
    std::fprintf(out, "kernel_init = %s\n", kernel_init.c_str());
    std::fprintf(out, "seed = %llu\n", static_cast<unsigned long long>(seed));
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");

    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        try {
            cfg.set_key(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

} // namespace msnn
