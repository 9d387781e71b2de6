#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "msnn/activation.hpp"

namespace msnn {

/// One experiment, read from a flat key=value file ('#' starts a comment).
struct ExperimentConfig {
    std::string dataset; // "mnist" | "coil20"

    std::string mnist_train_images;
    std::string mnist_train_labels;
    std::string mnist_test_images;
    std::string mnist_test_labels;
    std::string coil20_dir;
    int coil_train_per_class = 50;
    int train_subset_per_class = 0; // 0 = use every training sample

    int input_side = 28;
    int kernel_side = 5;
    int kernel_count = 10;
    int pool_scale = 2;
    int block_count = 16;
    int fc_hidden = 280;

    int assom_modules = 0; // 0 = same as block_count
    int assom_epochs = 15;
    double assom_eta0 = 0.5;
    double assom_decay = 0.05;
    int patch_stride = 1;

    int sgd_epochs = 50;
    int sgd_batch = 50;
    double sgd_eta0 = 1.0;
    double sgd_decay = 0.005;

    std::string activation = "logistic";
    std::string kernel_init = "subspace"; // "subspace" | "random"
    std::uint64_t seed = 1;

    int modules() const { return assom_modules > 0 ? assom_modules : block_count; }
    Activation activation_kind() const { return parse_activation(activation); }

    /// Throws ConfigError when any field or the shape algebra is invalid.
    void validate() const;

    void set_key(const std::string& key, const std::string& value);
    void echo(std::FILE* out) const;
};

ExperimentConfig parse_config_file(const std::string& path);

} // namespace msnn
