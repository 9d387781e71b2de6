#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "msnn/data.hpp"
#include "msnn/network.hpp"

namespace msnn {

/// Gradients of the loss with respect to every trainable parameter; the
/// inner-product kernels are frozen and have no slot here.
struct Gradients {
    Tensor2 d_fc_out_w;
    Vec d_fc_out_b;
    Tensor2 d_fc_hidden_w;
    Vec d_fc_hidden_b;
    struct BlockGrads {
        std::vector<Tensor2> d_merge_kernels;
        double d_merge_bias = 0.0;
    };
    std::vector<BlockGrads> blocks;

    static Gradients zeros_like(const MsnnNetwork& net);
    void add(const Gradients& other);
    void scale(double s);
};

struct SgdSchedule {
    int epochs = 1;
    int batch_size = 1;
    double eta0 = 1.0;
    double decay = 0.005;

    double rate_at(int epoch) const;
};

struct EpochMetrics {
    int epoch = 0;
    double eta = 0.0;
    double mean_loss = 0.0;
    double train_error_rate = 0.0;
    double wall_seconds = 0.0;
};

/// E = 1/2 sum_k (t_k - y_k)^2
double mse_loss(const Vec& y, const Vec& t);

/// Sensitivity at the output: (f(u) - t) .* f'(u).
Vec output_sensitivity(const Vec& u_out, const Vec& t, Activation f);

/// Sensitivity one fully-connected stage down: (W_above^T eps_above) .* f'(u_here).
Vec fc_backward(const Vec& eps_above, const FcStage& stage_above, const Vec& u_here, Activation f);

/// dW = eps x^T, db = eps.
std::pair<Tensor2, Vec> fc_param_grads(const Vec& eps, const Vec& x_below);

/// Pooling-layer sensitivities, one variant per layer kind above it.
/// A fully-connected layer above: its back-projected slice reshapes to the
/// map grid; pooling applies no activation, so no derivative factor.
Tensor2 pool_backward_fc(const Vec& eps_slice, int side);
/// The merging layer above: full correlation of the merging sensitivity
/// with each merge kernel, zero-padded back to the pooled-map size.
std::vector<Tensor2> pool_backward_merging(const Tensor2& eps_merge,
                                           const std::vector<Tensor2>& merge_kernels);
/// An inner-product layer above (stacked nets): summed full correlations.
Tensor2 pool_backward_inner_product(const std::vector<Tensor2>& eps_maps,
                                    const std::vector<Tensor2>& ip_kernels);

/// Merging-layer sensitivities, one variant per layer kind above it.
/// Pooling above: the average-pool derivative spreads each upstream unit
/// uniformly over its tile with gain 1/scale^2.
Tensor2 merge_backward_pool(const Tensor2& eps_pooled, int pool_scale, const Tensor2& u_merge,
                            Activation f);
Tensor2 merge_backward_fc(const Vec& eps_slice, const Tensor2& u_merge, Activation f);
Tensor2 merge_backward_inner_product(const std::vector<Tensor2>& eps_maps,
                                     const std::vector<Tensor2>& ip_kernels,
                                     const Tensor2& u_merge, Activation f);

/// Gradients of the merging layer's parameters: the bias gradient is the
/// sum over the sensitivity map; each kernel gradient at (a,b) is
/// sum_{u,v} eps(u,v) * pooled_j(u+k-1-a, v+k-1-b).
std::pair<std::vector<Tensor2>, double> merge_param_grads(const Tensor2& eps_merge,
                                                          const std::vector<Tensor2>& pooled);

/// Full backward pass for one sample given its forward trace.
Gradients backprop(const MsnnNetwork& net, const ForwardTrace& trace, const Vec& target);

/// Mean gradient over a batch, with per-sample loss and prediction
/// tallies. Samples are processed in parallel; the reduction is performed
/// in sample order so results are identical for any thread count.
struct BatchStats {
    double loss_sum = 0.0;
    int correct = 0;
};
Gradients batch_gradients(const MsnnNetwork& net, const LabeledSet& set,
                          const std::vector<std::uint32_t>& indices, std::size_t begin,
                          std::size_t end, BatchStats& stats);

/// p <- p - eta * g for every trainable parameter.
void sgd_step(MsnnNetwork& net, const Gradients& grads, double eta);

/// Mini-batch gradient descent over shuffled epochs with exponential
/// learning-rate decay. Returns one metrics row per epoch.
std::vector<EpochMetrics> train_msnn(MsnnNetwork& net, const LabeledSet& train,
                                     const SgdSchedule& sched, std::uint64_t seed);

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics);

} // namespace msnn
