#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "msnn/data.hpp"
#include "msnn/network.hpp"
#include "msnn/ops.hpp"
#include "msnn/reference.hpp"
#include "test_util.hpp"

using namespace msnn;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

MsnnNetwork small_net(int blocks, int input_side, int k, int n, int pool, int fc, int classes,
                      std::uint64_t seed) {
    ModuleBank bank = make_random_bank(blocks, k * k, n, seed);
    return build_network(bank, input_side, pool, fc, classes, Activation::logistic, seed);
}

} // namespace

TEST_CASE("shape algebra for both paper-scale architectures") {
    ArchShapes mnist = compute_shapes(28, 5, 2);
    CHECK(mnist.ip_side == 24);
    CHECK(mnist.pool1_side == 12);
    CHECK(mnist.merge_side == 8);
    CHECK(mnist.pool2_side == 4);

    ArchShapes coil = compute_shapes(32, 5, 2);
    CHECK(coil.ip_side == 28);
    CHECK(coil.pool1_side == 14);
    CHECK(coil.merge_side == 10);
    CHECK(coil.pool2_side == 5);

    CHECK_THROWS_AS(compute_shapes(28, 7, 2), ConfigError); // 22/2=11, 11-7+1=5, 5%2 != 0
    CHECK_THROWS_AS(compute_shapes(4, 5, 2), ConfigError);
}

TEST_CASE("inner_product_forward computes demeaned-window correlations") {
    Rng rng(41);

    SUBCASE("28x28 input with ten 5x5 kernels gives ten 24x24 maps") {
        MsnnNetwork net = small_net(1, 28, 5, 10, 2, 20, 10, 3);
        Tensor2 img = random_tensor(rng, 28, 28, 0.0, 1.0);
        auto maps = inner_product_forward(img, net.blocks[0]);
        REQUIRE(maps.size() == 10);
        for (const Tensor2& m : maps) {
            CHECK(m.rows == 24);
            CHECK(m.cols == 24);
        }
    }

    SUBCASE("constant input maps to zero") {
        MsnnNetwork net = small_net(1, 14, 3, 4, 2, 8, 3, 4);
        auto maps = inner_product_forward(Tensor2(14, 14, 0.73), net.blocks[0]);
        for (const Tensor2& m : maps)
            for (double x : m.v) CHECK(std::abs(x) <= 1e-12);
    }

    SUBCASE("random input matches the reference correlation") {
        ModuleBank bank = make_random_bank(1, 25, 3, 5);
        Block block;
        block.pool_scale = 1;
        for (const Vec& b : bank.modules[0].basis) {
            block.ip_kernels.push_back(reshape(b, 5, 5));
            block.merge_kernels.push_back(reshape(b, 5, 5));
        }
        Tensor2 img = random_tensor(rng, 6, 6);
        auto maps = inner_product_forward(img, block);
        REQUIRE(maps.size() == 3);
        for (int j = 0; j < 3; ++j) {
            Tensor2 want = ref::cross_correlate(img, block.ip_kernels[j], true);
            CHECK(max_abs_diff(maps[j], want) <= 1e-12);
        }
    }
}

TEST_CASE("merging_forward sums flipped-kernel convolutions plus bias") {
    Rng rng(42);

    SUBCASE("12x12 maps with 5x5 kernels merge to 8x8") {
        MsnnNetwork net = small_net(1, 28, 5, 10, 2, 20, 10, 6);
        std::vector<Tensor2> pooled(10);
        for (Tensor2& m : pooled) m = random_tensor(rng, 12, 12);
        auto [u, x] = merging_forward(pooled, net.blocks[0], Activation::logistic);
        CHECK(u.rows == 8);
        CHECK(x.rows == 8);
    }

    SUBCASE("zero inputs with identity activation give the bias everywhere") {
        MsnnNetwork net = small_net(1, 14, 3, 4, 2, 8, 3, 7);
        net.blocks[0].merge_bias = -0.37;
        std::vector<Tensor2> pooled(4, Tensor2(5, 5, 0.0));
        auto [u, x] = merging_forward(pooled, net.blocks[0], Activation::identity);
        for (double v : u.v) CHECK(v == doctest::Approx(-0.37).epsilon(1e-15));
        CHECK(max_abs_diff(u, x) == 0.0);
    }

    SUBCASE("single map equals the reference convolution") {
        MsnnNetwork net = small_net(1, 6, 2, 1, 1, 4, 2, 8);
        net.blocks[0].merge_bias = 0.0;
        Tensor2 map = random_tensor(rng, 3, 3);
        auto [u, x] = merging_forward({map}, net.blocks[0], Activation::identity);
        CHECK(max_abs_diff(u, ref::convolve(map, net.blocks[0].merge_kernels[0])) <= 1e-12);
    }

    SUBCASE("map-count/kernel-count mismatch is a dimension error") {
        MsnnNetwork net = small_net(1, 14, 3, 4, 2, 8, 3, 9);
        std::vector<Tensor2> pooled(3, Tensor2(5, 5));
        CHECK_THROWS_AS(merging_forward(pooled, net.blocks[0], Activation::identity),
                        DimensionError);
    }
}

TEST_CASE("fc_forward is an affine map plus activation") {
    SUBCASE("identity stage passes the input through") {
        FcStage stage;
        stage.weights = Tensor2(3, 3, Vec{1, 0, 0, 0, 1, 0, 0, 0, 1});
        stage.bias = Vec{0, 0, 0};
        stage.activation = Activation::identity;
        Vec x{0.3, -1.2, 2.0};
        auto [u, y] = fc_forward(x, stage);
        CHECK(max_abs_diff(y, x) == 0.0);
    }

    SUBCASE("random stage matches the reference matvec") {
        Rng rng(43);
        FcStage stage;
        stage.weights = random_tensor(rng, 2, 3);
        stage.bias = testutil::random_vec(rng, 2);
        stage.activation = Activation::identity;
        Vec x = testutil::random_vec(rng, 3);
        auto [u, y] = fc_forward(x, stage);
        CHECK(max_abs_diff(u, ref::matvec_bias(stage.weights, x, stage.bias)) <= 1e-12);
    }

    SUBCASE("length mismatch is a dimension error") {
        FcStage stage;
        stage.weights = Tensor2(2, 3);
        stage.bias = Vec{0, 0};
        CHECK_THROWS_AS(fc_forward(Vec{1, 2}, stage), DimensionError);
    }
}

TEST_CASE("network_forward runs the whole pipeline with cached shapes") {
    Rng rng(44);

    SUBCASE("28x28 walk-through: 24, 12, 8, 4, then 384-concat") {
        MsnnNetwork net = small_net(24, 28, 5, 10, 2, 280, 10, 11);
        Tensor2 img = random_tensor(rng, 28, 28, 0.0, 1.0);
        ForwardTrace t = network_forward(img, net);
        CHECK(t.blocks[0].ip_maps[0].rows == 24);
        CHECK(t.blocks[0].pooled1[0].rows == 12);
        CHECK(t.blocks[0].merge_map.rows == 8);
        CHECK(t.blocks[0].pooled2.rows == 4);
        CHECK(t.concat.size() == 384);
        CHECK(t.x_hidden.size() == 280);
        CHECK(t.y.size() == 10);
    }

    SUBCASE("32x32 walk-through: 28, 14, 10, 5, then 400-concat") {
        MsnnNetwork net = small_net(16, 32, 5, 10, 2, 250, 20, 12);
        Tensor2 img = random_tensor(rng, 32, 32);
        ForwardTrace t = network_forward(img, net);
        CHECK(t.blocks[0].ip_maps[0].rows == 28);
        CHECK(t.blocks[0].pooled1[0].rows == 14);
        CHECK(t.blocks[0].merge_map.rows == 10);
        CHECK(t.blocks[0].pooled2.rows == 5);
        CHECK(t.concat.size() == 400);
        CHECK(t.x_hidden.size() == 250);
        CHECK(t.y.size() == 20);
    }

    SUBCASE("constant input: blocks with equal bias produce equal maps") {
        MsnnNetwork net = small_net(3, 14, 3, 4, 2, 8, 3, 13);
        for (Block& b : net.blocks) b.merge_bias = 0.11;
        ForwardTrace t = network_forward(Tensor2(14, 14, 0.5), net);
        CHECK(max_abs_diff(t.blocks[0].pooled2, t.blocks[1].pooled2) <= 1e-12);
        CHECK(max_abs_diff(t.blocks[0].pooled2, t.blocks[2].pooled2) <= 1e-12);
    }

    SUBCASE("wrong input side names the failing layer") {
        MsnnNetwork net = small_net(1, 14, 3, 4, 2, 8, 3, 14);
        CHECK_THROWS_WITH_AS(network_forward(Tensor2(10, 10), net),
                             doctest::Contains("input layer"), DimensionError);
    }

    SUBCASE("permuting blocks and fc columns together leaves the output unchanged") {
        MsnnNetwork net = small_net(4, 14, 3, 4, 2, 10, 3, 15);
        Tensor2 img = random_tensor(rng, 14, 14);
        Vec y0 = network_forward(img, net).y;

        const int bflat = net.shapes().block_flat();
        const std::vector<int> perm{2, 0, 3, 1};
        MsnnNetwork permuted = net;
        for (int b = 0; b < 4; ++b) permuted.blocks[b] = net.blocks[perm[b]];
        for (int row = 0; row < permuted.fc_hidden.out_dim(); ++row)
            for (int b = 0; b < 4; ++b)
                for (int i = 0; i < bflat; ++i)
                    permuted.fc_hidden.weights(row, b * bflat + i) =
                        net.fc_hidden.weights(row, perm[b] * bflat + i);

        CHECK(max_abs_diff(network_forward(img, permuted).y, y0) <= 1e-12);
    }
}

TEST_CASE("predict takes the argmax with lowest-index ties") {
    CHECK(argmax_lowest(Vec{0.1, 0.9, 0.0}) == 1);
    CHECK(argmax_lowest(Vec{0.5, 0.5}) == 0);

    SUBCASE("invariant under strictly increasing transforms") {
        Rng rng(45);
        for (int iter = 0; iter < 50; ++iter) {
            Vec y = testutil::random_vec(rng, 6);
            Vec warped(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) warped[i] = std::exp(2.0 * y[i]) + 1.0;
            CHECK(argmax_lowest(warped) == argmax_lowest(y));
        }
    }
}

TEST_CASE("subspace kernels reconstruct the input better than random kernels") {
    if (!testutil::have_mnist()) {
        MESSAGE("skipped: no dataset under ", testutil::mnist_dir());
        return;
    }
    LabeledSet train = load_mnist_idx(testutil::mnist_dir() + "/train-images-idx3-ubyte",
                                      testutil::mnist_dir() + "/train-labels-idx1-ubyte");
    train.samples.resize(50);

    const int k = 5;
    std::vector<Vec> patches;
    for (const Sample& s : train.samples)
        for (Patch& p : extract_patches(s.image, k, 1)) {
            demean_inplace(p.values);
            patches.push_back(std::move(p.values));
        }

    ModuleBank trained = make_random_bank(1, k * k, 10, 77);
    train_assom(patches, trained, AssomSchedule{5, 0.5, 0.05});
    ModuleBank random_bank = make_random_bank(1, k * k, 10, 78);

    // one block, no pooling, identity activation, zero bias: the merged map
    // should track the demeaned input's central region
    auto merged_reconstruction = [&](const ModuleBank& bank, const Tensor2& img) {
        MsnnNetwork net = build_network(bank, 28, 1, 4, 2, Activation::identity, 1);
        net.blocks[0].merge_bias = 0.0;
        auto ip = inner_product_forward(img, net.blocks[0]);
        return merging_forward(ip, net.blocks[0], Activation::identity).first;
    };

    // each merged unit aggregates the k^2 window estimates of one input pixel:
    // target(r,c) = k^2 * img(r+k-1, c+k-1) - sum of the overlapping window means
    auto target = [&](const Tensor2& img) {
        Tensor2 t(20, 20);
        for (int r = 0; r < 20; ++r)
            for (int c = 0; c < 20; ++c) {
                double mean_sum = 0.0;
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) {
                        double m = 0.0;
                        for (int i = 0; i < k; ++i)
                            for (int j = 0; j < k; ++j) m += img(r + a + i, c + b + j);
                        mean_sum += m / (k * k);
                    }
                t(r, c) = k * k * img(r + k - 1, c + k - 1) - mean_sum;
            }
        return t;
    };

    double mae_trained = 0.0;
    double mae_random = 0.0;
    for (const Sample& s : train.samples) {
        Tensor2 t = target(s.image);
        Tensor2 rec_t = merged_reconstruction(trained, s.image);
        Tensor2 rec_r = merged_reconstruction(random_bank, s.image);
        for (int i = 0; i < t.size(); ++i) {
            mae_trained += std::abs(rec_t.v[i] - t.v[i]);
            mae_random += std::abs(rec_r.v[i] - t.v[i]);
        }
    }
    CHECK(mae_trained < mae_random);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    MsnnNetwork net = small_net(2, 14, 3, 4, 2, 8, 3, 16);
    const std::string path =
        (std::filesystem::temp_directory_path() / "msnn_test_ckpt.msnn").string();
    save_checkpoint(path, net);
    MsnnNetwork loaded = load_checkpoint(path, net.activation);

    CHECK(loaded.input_side == net.input_side);
    CHECK(loaded.class_count == net.class_count);
    REQUIRE(loaded.block_count() == net.block_count());
    for (int b = 0; b < net.block_count(); ++b) {
        for (int j = 0; j < net.kernel_count(); ++j) {
            CHECK(loaded.blocks[b].ip_kernels[j].v == net.blocks[b].ip_kernels[j].v);
            CHECK(loaded.blocks[b].merge_kernels[j].v == net.blocks[b].merge_kernels[j].v);
        }
        CHECK(loaded.blocks[b].merge_bias == net.blocks[b].merge_bias);
    }
    CHECK(loaded.fc_hidden.weights.v == net.fc_hidden.weights.v);
    CHECK(loaded.fc_hidden.bias == net.fc_hidden.bias);
    CHECK(loaded.fc_out.weights.v == net.fc_out.weights.v);
    CHECK(loaded.fc_out.bias == net.fc_out.bias);
    std::filesystem::remove(path);
}
