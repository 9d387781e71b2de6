#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msnn/tensor.hpp"

namespace msnn {

struct Sample {
    Tensor2 image;
    int label = 0;
};

struct LabeledSet {
    std::vector<Sample> samples;
    int class_count = 0;
    std::string name;

    int size() const { return static_cast<int>(samples.size()); }
    int side() const { return samples.empty() ? 0 : samples[0].image.rows; }
};

/// IDX pair loader for the handwritten-digit dataset. Image magic must be
/// 0x00000803 and label magic 0x00000801 (big-endian header fields); byte
/// pixels are mapped to [0,1] by division by 255.
LabeledSet load_mnist_idx(const std::string& image_path, const std::string& label_path);

/// Directory of obj<K>__<A>.pgm files, K in 1..20, grayscale side 32
/// (larger images are rescaled by nearest neighbour with a warning).
/// Pixels map linearly from [0,255] to [-1,1]; labels are K-1.
LabeledSet load_coil20(const std::string& dir);

/// Per class, a seeded shuffle selects per_class training samples; the
/// remainder is the test set.
std::pair<LabeledSet, LabeledSet> split_coil(const LabeledSet& set, int per_class,
                                             std::uint64_t seed);

/// Class-balanced subset: per_class samples per class, seeded selection,
/// original sample order preserved.
LabeledSet subset_per_class(const LabeledSet& set, int per_class, std::uint64_t seed);

/// Standard basis vector e_label of length c.
Vec one_hot(int label, int c);

std::vector<int> class_counts(const LabeledSet& set);

/// Flat binary cache: "MSDS" magic, sample count, class count and side as
/// little-endian 32-bit integers, then all pixels as little-endian doubles
/// and all labels as little-endian 16-bit integers. Lossless round trip.
void save_cache(const std::string& path, const LabeledSet& set);
LabeledSet load_cache(const std::string& path);

} // namespace msnn
