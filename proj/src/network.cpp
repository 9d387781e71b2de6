#include "msnn/network.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "msnn/error.hpp"
#include "msnn/io.hpp"
#include "msnn/ops.hpp"
#include "msnn/rng.hpp"

namespace msnn {

ArchShapes compute_shapes(int input_side, int kernel_side, int pool_scale) {
    auto fail = [&](const std::string& what) {
        throw ConfigError("architecture " + std::to_string(input_side) + "/k" +
                          std::to_string(kernel_side) + "/p" + std::to_string(pool_scale) + ": " +
                          what);
    };
    if (input_side < 1 || kernel_side < 1 || pool_scale < 1) fail("non-positive parameter");

    ArchShapes s;
    s.input_side = input_side;
    s.ip_side = input_side - kernel_side + 1;
    if (s.ip_side < 1) fail("kernel larger than input");
    if (s.ip_side % pool_scale != 0) fail("inner-product side not divisible by pool scale");
    s.pool1_side = s.ip_side / pool_scale;
    s.merge_side = s.pool1_side - kernel_side + 1;
    if (s.merge_side < 1) fail("kernel larger than first pooled map");
    if (s.merge_side % pool_scale != 0) fail("merging side not divisible by pool scale");
    s.pool2_side = s.merge_side / pool_scale;
    return s;
}

std::vector<Tensor2> inner_product_forward(const Tensor2& input, const Block& block) {
    return valid_cross_correlate_multi(input, block.ip_kernels, true);
}

std::pair<Tensor2, Tensor2> merging_forward(const std::vector<Tensor2>& pooled, const Block& block,
                                            Activation f) {
    if (pooled.size() != block.merge_kernels.size())
        throw DimensionError("merging layer: map count " + std::to_string(pooled.size()) +
                             " != kernel count " + std::to_string(block.merge_kernels.size()));
    for (std::size_t j = 1; j < pooled.size(); ++j)
        if (!pooled[j].same_shape(pooled[0]))
            throw DimensionError("merging layer: input maps differ in shape");

    Tensor2 u = valid_convolve(pooled[0], block.merge_kernels[0]);
    for (std::size_t j = 1; j < pooled.size(); ++j) {
        Tensor2 t = valid_convolve(pooled[j], block.merge_kernels[j]);
        for (std::size_t i = 0; i < u.v.size(); ++i) u.v[i] += t.v[i];
    }
    for (double& x : u.v) x += block.merge_bias;
    return {u, activate(f, u)};
}

std::pair<Vec, Vec> fc_forward(const Vec& x, const FcStage& stage) {
    if (static_cast<int>(x.size()) != stage.in_dim())
        throw DimensionError("fully-connected layer: input size " + std::to_string(x.size()) +
                             " != " + std::to_string(stage.in_dim()));
    Vec u(stage.out_dim());
    const int in = stage.in_dim();
    for (int i = 0; i < stage.out_dim(); ++i) {
        const double* row = &stage.weights.v[static_cast<std::size_t>(i) * in];
        double acc = stage.bias[i];
        for (int j = 0; j < in; ++j) acc += row[j] * x[j];
        u[i] = acc;
    }
    return {u, activate(stage.activation, u)};
}

ForwardTrace network_forward(const Tensor2& image, const MsnnNetwork& net) {
    if (image.rows != net.input_side || image.cols != net.input_side)
        throw DimensionError("input layer: expected " + std::to_string(net.input_side) + "x" +
                             std::to_string(net.input_side) + " image, got " +
                             std::to_string(image.rows) + "x" + std::to_string(image.cols));

    const ArchShapes shapes = net.shapes();
    const int bflat = shapes.block_flat();

    ForwardTrace trace;
    trace.blocks.resize(net.block_count());
    trace.concat.resize(static_cast<std::size_t>(net.block_count()) * bflat);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < net.block_count(); ++b) {
        const Block& block = net.blocks[b];
        BlockTrace& bt = trace.blocks[b];
        bt.ip_maps = inner_product_forward(image, block);
        bt.pooled1.reserve(bt.ip_maps.size());
        for (const Tensor2& m : bt.ip_maps) bt.pooled1.push_back(avg_downsample(m, block.pool_scale));
        auto [u, x] = merging_forward(bt.pooled1, block, net.activation);
        bt.merge_pre = std::move(u);
        bt.merge_map = std::move(x);
        bt.pooled2 = avg_downsample(bt.merge_map, block.pool_scale);
        for (int i = 0; i < bflat; ++i)
            trace.concat[static_cast<std::size_t>(b) * bflat + i] = bt.pooled2.v[i];
    }

    std::tie(trace.u_hidden, trace.x_hidden) = fc_forward(trace.concat, net.fc_hidden);
    std::tie(trace.u_out, trace.y) = fc_forward(trace.x_hidden, net.fc_out);
    return trace;
}

int argmax_lowest(const Vec& y) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(y.size()); ++i)
        if (y[i] > y[best]) best = i;
    return best;
}

int predict(const Tensor2& image, const MsnnNetwork& net) {
    return argmax_lowest(network_forward(image, net).y);
}

namespace {

FcStage make_fc_stage(int out_dim, int in_dim, Activation f, Rng& rng) {
    FcStage stage;
    stage.activation = f;
    stage.weights = Tensor2(out_dim, in_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& w : stage.weights.v) w = rng.uniform(-bound, bound);
    stage.bias.assign(out_dim, 0.0);
    return stage;
}

} // namespace

MsnnNetwork build_network(const ModuleBank& bank, int input_side, int pool_scale, int fc_hidden,
                          int class_count, Activation f, std::uint64_t seed) {
    const int dim = bank.dim();
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (k * k != dim)
        throw ConfigError("module dimension " + std::to_string(dim) + " is not a square");
    const ArchShapes shapes = compute_shapes(input_side, k, pool_scale);
    if (fc_hidden < 1 || class_count < 1) throw ConfigError("non-positive layer width");

    MsnnNetwork net;
    net.input_side = input_side;
    net.activation = f;
    net.class_count = class_count;
    net.blocks.resize(bank.count());

    Rng bias_rng(sub_seed(seed, 0xb1a5u));
    for (int b = 0; b < bank.count(); ++b) {
        Block& block = net.blocks[b];
        block.pool_scale = pool_scale;
        for (const Vec& basis : bank.modules[b].basis) {
            Tensor2 kernel = reshape(basis, k, k);
            block.ip_kernels.push_back(kernel);
            block.merge_kernels.push_back(kernel);
        }
        block.merge_bias = bias_rng.uniform(-0.1, 0.1);
    }

    Rng fc_rng(sub_seed(seed, 0xfcfcu));
    net.fc_hidden = make_fc_stage(fc_hidden, bank.count() * shapes.block_flat(), f, fc_rng);
    net.fc_out = make_fc_stage(class_count, fc_hidden, f, fc_rng);
    return net;
}

void save_checkpoint(const std::string& path, const MsnnNetwork& net) {
    BinaryWriter w(path);
    w.write_bytes("MSNN", 4);
    w.write_u32(1); // version
    w.write_u32(static_cast<std::uint32_t>(net.input_side));
    w.write_u32(static_cast<std::uint32_t>(net.kernel_side()));
    w.write_u32(static_cast<std::uint32_t>(net.kernel_count()));
    w.write_u32(static_cast<std::uint32_t>(net.pool_scale()));
    w.write_u32(static_cast<std::uint32_t>(net.block_count()));
    w.write_u32(static_cast<std::uint32_t>(net.fc_hidden.out_dim()));
    w.write_u32(static_cast<std::uint32_t>(net.class_count));
    for (const Block& b : net.blocks) {
        for (const Tensor2& t : b.ip_kernels) w.write_tensor(t);
        for (const Tensor2& t : b.merge_kernels) w.write_tensor(t);
        w.write_f64(b.merge_bias);
    }
    w.write_tensor(net.fc_hidden.weights);
    w.write_f64_array(net.fc_hidden.bias);
    w.write_tensor(net.fc_out.weights);
    w.write_f64_array(net.fc_out.bias);
}

MsnnNetwork load_checkpoint(const std::string& path, Activation f) {
    BinaryReader r(path);
    r.expect_magic("MSNN");
    std::uint32_t version = r.read_u32();
    if (version != 1)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    const int input_side = static_cast<int>(r.read_u32());
    const int k = static_cast<int>(r.read_u32());
    const int n = static_cast<int>(r.read_u32());
    const int pool = static_cast<int>(r.read_u32());
    const int blocks = static_cast<int>(r.read_u32());
    const int hidden = static_cast<int>(r.read_u32());
    const int classes = static_cast<int>(r.read_u32());
    const ArchShapes shapes = compute_shapes(input_side, k, pool); // validates

    MsnnNetwork net;
    net.input_side = input_side;
    net.activation = f;
    net.class_count = classes;
    net.blocks.resize(blocks);
    for (Block& b : net.blocks) {
        b.pool_scale = pool;
        for (int j = 0; j < n; ++j) b.ip_kernels.push_back(r.read_tensor(k, k));
        for (int j = 0; j < n; ++j) b.merge_kernels.push_back(r.read_tensor(k, k));
        b.merge_bias = r.read_f64();
    }
    net.fc_hidden.activation = f;
    net.fc_hidden.weights = r.read_tensor(hidden, blocks * shapes.block_flat());
    net.fc_hidden.bias = r.read_f64_array(hidden);
    net.fc_out.activation = f;
    net.fc_out.weights = r.read_tensor(classes, hidden);
    net.fc_out.bias = r.read_f64_array(classes);
    r.expect_eof();
    return net;
}

} // namespace msnn
