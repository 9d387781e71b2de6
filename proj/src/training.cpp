#include "msnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <tuple>

#include "msnn/error.hpp"
#include "msnn/ops.hpp"
#include "msnn/rng.hpp"

namespace msnn {

double SgdSchedule::rate_at(int epoch) const {
    return eta0 * std::exp(-decay * static_cast<double>(epoch));
}

Gradients Gradients::zeros_like(const MsnnNetwork& net) {
    Gradients g;
    g.d_fc_out_w = Tensor2(net.fc_out.out_dim(), net.fc_out.in_dim());
    g.d_fc_out_b.assign(net.fc_out.out_dim(), 0.0);
    g.d_fc_hidden_w = Tensor2(net.fc_hidden.out_dim(), net.fc_hidden.in_dim());
    g.d_fc_hidden_b.assign(net.fc_hidden.out_dim(), 0.0);
    g.blocks.resize(net.block_count());
    const int k = net.kernel_side();
    for (auto& bg : g.blocks) {
        bg.d_merge_kernels.assign(net.kernel_count(), Tensor2(k, k));
        bg.d_merge_bias = 0.0;
    }
    return g;
}

void Gradients::add(const Gradients& o) {
    for (std::size_t i = 0; i < d_fc_out_w.v.size(); ++i) d_fc_out_w.v[i] += o.d_fc_out_w.v[i];
    for (std::size_t i = 0; i < d_fc_out_b.size(); ++i) d_fc_out_b[i] += o.d_fc_out_b[i];
    for (std::size_t i = 0; i < d_fc_hidden_w.v.size(); ++i)
        d_fc_hidden_w.v[i] += o.d_fc_hidden_w.v[i];
    for (std::size_t i = 0; i < d_fc_hidden_b.size(); ++i) d_fc_hidden_b[i] += o.d_fc_hidden_b[i];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t j = 0; j < blocks[b].d_merge_kernels.size(); ++j) {
            Vec& dst = blocks[b].d_merge_kernels[j].v;
            const Vec& src = o.blocks[b].d_merge_kernels[j].v;
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        blocks[b].d_merge_bias += o.blocks[b].d_merge_bias;
    }
}

void Gradients::scale(double s) {
    for (double& x : d_fc_out_w.v) x *= s;
    for (double& x : d_fc_out_b) x *= s;
    for (double& x : d_fc_hidden_w.v) x *= s;
    for (double& x : d_fc_hidden_b) x *= s;
    for (auto& bg : blocks) {
        for (Tensor2& t : bg.d_merge_kernels)
            for (double& x : t.v) x *= s;
        bg.d_merge_bias *= s;
    }
}

double mse_loss(const Vec& y, const Vec& t) {
    if (y.size() != t.size()) throw DimensionError("loss: length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double d = t[i] - y[i];
        e += d * d;
    }
    return 0.5 * e;
}

Vec output_sensitivity(const Vec& u_out, const Vec& t, Activation f) {
    if (u_out.size() != t.size()) throw DimensionError("output_sensitivity: length mismatch");
    Vec eps(u_out.size());
    for (std::size_t i = 0; i < u_out.size(); ++i)
        eps[i] = (activate(f, u_out[i]) - t[i]) * activate_deriv(f, u_out[i]);
    return eps;
}

Vec fc_backward(const Vec& eps_above, const FcStage& stage_above, const Vec& u_here,
                Activation f) {
    if (static_cast<int>(eps_above.size()) != stage_above.out_dim())
        throw DimensionError("fc_backward: sensitivity length != stage output size");
    if (static_cast<int>(u_here.size()) != stage_above.in_dim())
        throw DimensionError("fc_backward: pre-activation length != stage input size");

    Vec eps(u_here.size(), 0.0);
    const int out = stage_above.out_dim();
    const int in = stage_above.in_dim();
    for (int i = 0; i < out; ++i) {
        const double e = eps_above[i];
        const double* row = &stage_above.weights.v[static_cast<std::size_t>(i) * in];
        for (int j = 0; j < in; ++j) eps[j] += row[j] * e;
    }
    for (int j = 0; j < in; ++j) eps[j] *= activate_deriv(f, u_here[j]);
    return eps;
}

std::pair<Tensor2, Vec> fc_param_grads(const Vec& eps, const Vec& x_below) {
    Tensor2 dW(static_cast<int>(eps.size()), static_cast<int>(x_below.size()));
    for (std::size_t i = 0; i < eps.size(); ++i)
        for (std::size_t j = 0; j < x_below.size(); ++j)
            dW.v[i * x_below.size() + j] = eps[i] * x_below[j];
    return {dW, eps};
}

Tensor2 pool_backward_fc(const Vec& eps_slice, int side) {
    return reshape(eps_slice, side, side);
}

std::vector<Tensor2> pool_backward_merging(const Tensor2& eps_merge,
                                           const std::vector<Tensor2>& merge_kernels) {
    std::vector<Tensor2> out;
    out.reserve(merge_kernels.size());
    for (const Tensor2& k : merge_kernels) out.push_back(full_cross_correlate(eps_merge, k));
    return out;
}

Tensor2 pool_backward_inner_product(const std::vector<Tensor2>& eps_maps,
                                    const std::vector<Tensor2>& ip_kernels) {
    if (eps_maps.size() != ip_kernels.size())
        throw DimensionError("pool_backward_inner_product: map/kernel count mismatch");
    // the inner-product forward correlates without flipping, so its input
    // Jacobian is the flipped-kernel full correlation
    Tensor2 acc = full_cross_correlate(eps_maps[0], flip2(ip_kernels[0]));
    for (std::size_t j = 1; j < eps_maps.size(); ++j) {
        Tensor2 t = full_cross_correlate(eps_maps[j], flip2(ip_kernels[j]));
        for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += t.v[i];
    }
    return acc;
}

namespace {

Tensor2 apply_deriv(Tensor2 eps, const Tensor2& u, Activation f) {
    if (!eps.same_shape(u)) throw DimensionError("sensitivity/pre-activation shape mismatch");
    for (std::size_t i = 0; i < eps.v.size(); ++i) eps.v[i] *= activate_deriv(f, u.v[i]);
    return eps;
}

} // namespace

Tensor2 merge_backward_pool(const Tensor2& eps_pooled, int pool_scale, const Tensor2& u_merge,
                            Activation f) {
    const double gain = 1.0 / (static_cast<double>(pool_scale) * pool_scale);
    return apply_deriv(upsample_uniform(eps_pooled, pool_scale, gain), u_merge, f);
}

Tensor2 merge_backward_fc(const Vec& eps_slice, const Tensor2& u_merge, Activation f) {
    return apply_deriv(reshape(eps_slice, u_merge.rows, u_merge.cols), u_merge, f);
}

Tensor2 merge_backward_inner_product(const std::vector<Tensor2>& eps_maps,
                                     const std::vector<Tensor2>& ip_kernels,
                                     const Tensor2& u_merge, Activation f) {
    return apply_deriv(pool_backward_inner_product(eps_maps, ip_kernels), u_merge, f);
}

std::pair<std::vector<Tensor2>, double> merge_param_grads(const Tensor2& eps_merge,
                                                          const std::vector<Tensor2>& pooled) {
    if (pooled.empty()) throw DimensionError("merge_param_grads: no input maps");
    const int k = pooled[0].rows - eps_merge.rows + 1;
    if (k < 1 || pooled[0].cols - eps_merge.cols + 1 != k)
        throw DimensionError("merge_param_grads: sensitivity/input shapes inconsistent");

    double d_bias = sum(eps_merge);
    std::vector<Tensor2> d_kernels;
    d_kernels.reserve(pooled.size());
    for (const Tensor2& x : pooled) {
        Tensor2 dk(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                double acc = 0.0;
                for (int u = 0; u < eps_merge.rows; ++u)
                    for (int v = 0; v < eps_merge.cols; ++v)
                        acc += eps_merge(u, v) * x(u + k - 1 - a, v + k - 1 - b);
                dk(a, b) = acc;
            }
        d_kernels.push_back(std::move(dk));
    }
    return {d_kernels, d_bias};
}

Gradients backprop(const MsnnNetwork& net, const ForwardTrace& trace, const Vec& target) {
    Gradients g = Gradients::zeros_like(net);

    const Vec eps_out = output_sensitivity(trace.u_out, target, net.fc_out.activation);
    std::tie(g.d_fc_out_w, g.d_fc_out_b) = fc_param_grads(eps_out, trace.x_hidden);

    const Vec eps_hidden =
        fc_backward(eps_out, net.fc_out, trace.u_hidden, net.fc_hidden.activation);
    std::tie(g.d_fc_hidden_w, g.d_fc_hidden_b) = fc_param_grads(eps_hidden, trace.concat);

    // back through fc_hidden into the concatenated block outputs; pooling
    // applies no activation so the slices reshape directly
    Vec eps_concat(trace.concat.size(), 0.0);
    {
        const int out = net.fc_hidden.out_dim();
        const int in = net.fc_hidden.in_dim();
        for (int i = 0; i < out; ++i) {
            const double e = eps_hidden[i];
            const double* row = &net.fc_hidden.weights.v[static_cast<std::size_t>(i) * in];
            for (int j = 0; j < in; ++j) eps_concat[j] += row[j] * e;
        }
    }

    const ArchShapes shapes = net.shapes();
    const int bflat = shapes.block_flat();
    for (int b = 0; b < net.block_count(); ++b) {
        const Block& block = net.blocks[b];
        const BlockTrace& bt = trace.blocks[b];
        Vec slice(eps_concat.begin() + static_cast<std::ptrdiff_t>(b) * bflat,
                  eps_concat.begin() + static_cast<std::ptrdiff_t>(b + 1) * bflat);
        const Tensor2 eps_pool2 = pool_backward_fc(slice, shapes.pool2_side);
        const Tensor2 eps_merge =
            merge_backward_pool(eps_pool2, block.pool_scale, bt.merge_pre, net.activation);
        auto [dk, db] = merge_param_grads(eps_merge, bt.pooled1);
        g.blocks[b].d_merge_kernels = std::move(dk);
        g.blocks[b].d_merge_bias = db;
        // the inner-product kernels are frozen; sensitivities stop here
    }
    return g;
}

Gradients batch_gradients(const MsnnNetwork& net, const LabeledSet& set,
                          const std::vector<std::uint32_t>& indices, std::size_t begin,
                          std::size_t end, BatchStats& stats) {
    const std::size_t count = end - begin;
    std::vector<Gradients> per_sample(count);
    std::vector<double> losses(count);
    std::vector<char> correct(count);

#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < count; ++i) {
        const Sample& s = set.samples[indices[begin + i]];
        const Vec target = one_hot(s.label, net.class_count);
        const ForwardTrace trace = network_forward(s.image, net);
        per_sample[i] = backprop(net, trace, target);
        losses[i] = mse_loss(trace.y, target);
        correct[i] = argmax_lowest(trace.y) == s.label ? 1 : 0;
    }

    // reduce in sample order: identical results for any thread count
    Gradients total = std::move(per_sample[0]);
    for (std::size_t i = 1; i < count; ++i) total.add(per_sample[i]);
    total.scale(1.0 / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
        stats.loss_sum += losses[i];
        stats.correct += correct[i];
    }
    return total;
}

void sgd_step(MsnnNetwork& net, const Gradients& g, double eta) {
    for (std::size_t i = 0; i < net.fc_out.weights.v.size(); ++i)
        net.fc_out.weights.v[i] -= eta * g.d_fc_out_w.v[i];
    for (std::size_t i = 0; i < net.fc_out.bias.size(); ++i)
        net.fc_out.bias[i] -= eta * g.d_fc_out_b[i];
    for (std::size_t i = 0; i < net.fc_hidden.weights.v.size(); ++i)
        net.fc_hidden.weights.v[i] -= eta * g.d_fc_hidden_w.v[i];
    for (std::size_t i = 0; i < net.fc_hidden.bias.size(); ++i)
        net.fc_hidden.bias[i] -= eta * g.d_fc_hidden_b[i];
    for (int b = 0; b < net.block_count(); ++b) {
        Block& block = net.blocks[b];
        const auto& bg = g.blocks[b];
        for (std::size_t j = 0; j < block.merge_kernels.size(); ++j) {
            Vec& kv = block.merge_kernels[j].v;
            const Vec& gv = bg.d_merge_kernels[j].v;
            for (std::size_t i = 0; i < kv.size(); ++i) kv[i] -= eta * gv[i];
        }
        block.merge_bias -= eta * bg.d_merge_bias;
    }
}

std::vector<EpochMetrics> train_msnn(MsnnNetwork& net, const LabeledSet& train,
                                     const SgdSchedule& sched, std::uint64_t seed) {
    if (train.samples.empty()) throw ConfigError("train_msnn: empty training set");

    Rng rng(sub_seed(seed, 0x560du));
    std::vector<std::uint32_t> order(train.samples.size());
    std::iota(order.begin(), order.end(), 0u);

    std::vector<EpochMetrics> metrics;
    metrics.reserve(sched.epochs);
    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double eta = sched.rate_at(epoch);
        rng.shuffle(order);

        BatchStats stats;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(sched.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(sched.batch_size));
            Gradients g = batch_gradients(net, train, order, begin, end, stats);
            sgd_step(net, g, eta);
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = epoch;
        m.eta = eta;
        m.mean_loss = stats.loss_sum / static_cast<double>(order.size());
        m.train_error_rate =
            1.0 - static_cast<double>(stats.correct) / static_cast<double>(order.size());
        m.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        metrics.push_back(m);
    }
    return metrics;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    std::fprintf(f, "epoch,eta,mean_loss,train_error_rate,wall_seconds\n");
    for (const EpochMetrics& m : metrics)
        std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.3f\n", m.epoch, m.eta, m.mean_loss,
                     m.train_error_rate, m.wall_seconds);
    std::fclose(f);
}

} // namespace msnn
