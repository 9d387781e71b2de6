#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msnn/activation.hpp"
#include "msnn/assom.hpp"
#include "msnn/tensor.hpp"

namespace msnn {

/// One parallel block: frozen inner-product kernels, trainable merging
/// kernels plus bias, and the shared pooling scale.
struct Block {
    std::vector<Tensor2> ip_kernels;    // frozen after construction
    std::vector<Tensor2> merge_kernels; // trainable
    double merge_bias = 0.0;
    int pool_scale = 2;

    int kernel_count() const { return static_cast<int>(ip_kernels.size()); }
    int kernel_side() const { return ip_kernels.empty() ? 0 : ip_kernels[0].rows; }
};

struct FcStage {
    Tensor2 weights; // out x in
    Vec bias;        // out
    Activation activation = Activation::logistic;

    int in_dim() const { return weights.cols; }
    int out_dim() const { return weights.rows; }
};

/// Layer sizes implied by (input side, kernel side, pool scale); validated
/// so that every stage has a positive integer side.
struct ArchShapes {
    int input_side = 0;
    int ip_side = 0;
    int pool1_side = 0;
    int merge_side = 0;
    int pool2_side = 0;

    int block_flat() const { return pool2_side * pool2_side; }
};

ArchShapes compute_shapes(int input_side, int kernel_side, int pool_scale);

struct MsnnNetwork {
    int input_side = 0;
    Activation activation = Activation::logistic;
    std::vector<Block> blocks;
    FcStage fc_hidden;
    FcStage fc_out;
    int class_count = 0;

    int block_count() const { return static_cast<int>(blocks.size()); }
    int kernel_side() const { return blocks.empty() ? 0 : blocks[0].kernel_side(); }
    int kernel_count() const { return blocks.empty() ? 0 : blocks[0].kernel_count(); }
    int pool_scale() const { return blocks.empty() ? 0 : blocks[0].pool_scale; }
    ArchShapes shapes() const { return compute_shapes(input_side, kernel_side(), pool_scale()); }
};

/// Everything cached by one forward pass for one block.
struct BlockTrace {
    std::vector<Tensor2> ip_maps; // n maps, demeaned-window correlations
    std::vector<Tensor2> pooled1; // n maps after the first pooling
    Tensor2 merge_pre;            // pre-activation of the merging layer
    Tensor2 merge_map;            // activated merging map
    Tensor2 pooled2;              // after the second pooling
};

struct ForwardTrace {
    std::vector<BlockTrace> blocks;
    Vec concat;   // flattened block outputs, block order, row-major per block
    Vec u_hidden; // fc_hidden pre-activation
    Vec x_hidden;
    Vec u_out; // fc_out pre-activation
    Vec y;     // network output, activation of u_out
};

std::vector<Tensor2> inner_product_forward(const Tensor2& input, const Block& block);

/// Sum of flipped-kernel convolutions plus bias, then the activation.
/// Returns (pre_activation, map).
std::pair<Tensor2, Tensor2> merging_forward(const std::vector<Tensor2>& pooled, const Block& block,
                                            Activation f);

/// u = Wx + b, y = f(u).
std::pair<Vec, Vec> fc_forward(const Vec& x, const FcStage& stage);

ForwardTrace network_forward(const Tensor2& image, const MsnnNetwork& net);

int argmax_lowest(const Vec& y);

int predict(const Tensor2& image, const MsnnNetwork& net);

/// Assemble a network from a trained module bank: block b's inner-product
/// kernels are module b's basis vectors reshaped row-major to k x k, the
/// merging kernels start as copies, merge biases are uniform on [-0.1, 0.1],
/// and fully-connected weights are uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)].
MsnnNetwork build_network(const ModuleBank& bank, int input_side, int pool_scale, int fc_hidden,
                          int class_count, Activation f, std::uint64_t seed);

/// Flat binary checkpoint: "MSNN" magic, version, then input side, kernel
/// side, kernel count, pool scale, block count, hidden width and class count
/// as little-endian 32-bit integers, then every tensor in declaration order
/// as little-endian doubles. Reload is bit-exact; the activation comes from
/// the caller (it lives in the experiment config, not the checkpoint).
void save_checkpoint(const std::string& path, const MsnnNetwork& net);
MsnnNetwork load_checkpoint(const std::string& path, Activation f);

} // namespace msnn
