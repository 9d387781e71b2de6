#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "msnn/experiments.hpp"
#include "msnn/ops.hpp"
#include "msnn/pgm.hpp"
#include "test_util.hpp"

using namespace msnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Tiny two-object image directory with class-dependent structure.
void write_fixture_dataset(const fs::path& dir, int per_class = 8) {
    Rng rng(97);
    for (int obj = 1; obj <= 2; ++obj) {
        for (int a = 0; a < per_class; ++a) {
            PgmImage img;
            img.width = img.height = 32;
            img.pixels.assign(32 * 32, 0);
            for (int r = 0; r < 32; ++r)
                for (int c = 0; c < 32; ++c) {
                    double v = obj == 1 ? (r % 8 < 4 ? 200 : 40)   // horizontal stripes
                                        : (c % 8 < 4 ? 200 : 40);  // vertical stripes
                    v += rng.uniform(-20.0, 20.0);
                    img.pixels[static_cast<std::size_t>(r) * 32 + c] =
                        static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
                }
            char name[32];
            std::snprintf(name, sizeof(name), "obj%d__%d.pgm", obj, a);
            write_pgm((dir / name).string(), img);
        }
    }
}

ExperimentConfig fixture_config(const fs::path& data_dir) {
    ExperimentConfig cfg;
    cfg.dataset = "coil20";
    cfg.coil20_dir = data_dir.string();
    cfg.coil_train_per_class = 4;
    cfg.input_side = 32;
    cfg.kernel_side = 5;
    cfg.kernel_count = 4;
    cfg.pool_scale = 2;
    cfg.block_count = 2;
    cfg.fc_hidden = 16;
    cfg.assom_epochs = 2;
    cfg.assom_eta0 = 0.5;
    cfg.assom_decay = 0.05;
    cfg.patch_stride = 2;
    cfg.sgd_epochs = 2;
    cfg.sgd_batch = 4;
    cfg.sgd_eta0 = 0.5;
    cfg.sgd_decay = 0.005;
    cfg.seed = 11;
    return cfg;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// report.txt / metrics.csv with the wall-clock fields removed.
std::string strip_wall(const std::string& text) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.rfind("wall_seconds", 0) == 0) continue;
        std::size_t comma = line.rfind(',');
        if (comma != std::string::npos && line.find(',') != comma &&
            line.find("wall") == std::string::npos) {
            // metrics rows: drop the trailing wall column
            out += line.substr(0, comma);
        } else {
            out += line;
        }
        out += '\n';
    }
    return out;
}

} // namespace

TEST_CASE("config files parse, echo and validate") {
    TempDir dir("msnn_cfg_test");
    const fs::path cfg_path = dir.path / "exp.cfg";
    {
        std::ofstream out(cfg_path);
        out << "# comment line\n"
            << "dataset = mnist\n"
            << "mnist_train_images = a\nmnist_train_labels = b\n"
            << "mnist_test_images = c\nmnist_test_labels = d\n"
            << "kernel_side = 5   # trailing comment\n"
            << "block_count = 3\n"
            << "assom_modules = 4\n"
            << "seed = 42\n";
    }
    ExperimentConfig cfg = parse_config_file(cfg_path.string());
    CHECK(cfg.kernel_side == 5);
    CHECK(cfg.block_count == 3);
    CHECK(cfg.seed == 42);
    cfg.validate();

    SUBCASE("unknown keys are rejected with the line number") {
        std::ofstream out(cfg_path, std::ios::app);
        out << "no_such_key = 1\n";
        out.close();
        CHECK_THROWS_WITH_AS(parse_config_file(cfg_path.string()), doctest::Contains("no_such_key"),
                             ConfigError);
    }

    SUBCASE("shape algebra failures are config errors") {
        cfg.kernel_side = 7; // 22 -> 11 -> 5, and 5 is not divisible by 2
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }

    SUBCASE("module count below block count is rejected") {
        cfg.assom_modules = 2;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }

    SUBCASE("non-finite rates are rejected") {
        ExperimentConfig bad = cfg;
        bad.sgd_eta0 = std::nan("");
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad = cfg;
        bad.assom_decay = std::nan("");
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("kernel init trains, selects and serializes the bank") {
    TempDir data("msnn_exp_data");
    write_fixture_dataset(data.path);
    TempDir out("msnn_exp_init");
    ExperimentConfig cfg = fixture_config(data.path);
    cfg.assom_modules = 3; // more modules than blocks: selection kicks in

    ModuleBank bank = run_kernel_init(cfg, out.path.string());
    CHECK(bank.count() == 2);
    CHECK(bank.dim() == 25);
    CHECK(bank.basis_count() == 4);
    for (const SubspaceModule& m : bank.modules)
        CHECK(testutil::gram_deviation(m.basis) <= 1e-9);

    ModuleBank loaded = load_bank((out.path / "bank.asom").string());
    CHECK(loaded.modules[0].basis[0] == bank.modules[0].basis[0]);
    auto manifest = read_lines(out.path / "manifest.txt");
    CHECK(manifest == std::vector<std::string>{"bank.asom"});
}

TEST_CASE("run_train produces a consistent report and artifacts") {
    TempDir data("msnn_exp_data2");
    write_fixture_dataset(data.path);
    TempDir out("msnn_exp_train");
    ExperimentConfig cfg = fixture_config(data.path);

    RunReport report = run_full(cfg, out.path.string());

    // confusion row sums equal the per-class test counts (4 left per class)
    REQUIRE(report.confusion.size() == 2);
    for (const auto& row : report.confusion) {
        int s = 0;
        for (int x : row) s += x;
        CHECK(s == 4);
    }
    int off_diag = 0;
    for (std::size_t i = 0; i < report.confusion.size(); ++i)
        for (std::size_t j = 0; j < report.confusion.size(); ++j)
            if (i != j) off_diag += report.confusion[i][j];
    CHECK(report.test_error == doctest::Approx(off_diag / 8.0).epsilon(1e-12));
    CHECK(report.misclassified.size() == static_cast<std::size_t>(off_diag));
    REQUIRE(report.epochs.size() == 2);

    for (const char* name :
         {"bank.asom", "metrics.csv", "checkpoint.msnn", "misclassified.csv", "report.txt",
          "manifest.txt"})
        CHECK(fs::exists(out.path / name));

    // the shared manifest lists the bank from the init step plus everything
    // the training step wrote
    auto manifest = read_lines(out.path / "manifest.txt");
    CHECK(std::set<std::string>(manifest.begin(), manifest.end()) ==
          std::set<std::string>{"bank.asom", "metrics.csv", "checkpoint.msnn",
                                "misclassified.csv", "report.txt"});

    SUBCASE("same seed reproduces checkpoint and filtered report bitwise") {
        TempDir out2("msnn_exp_train2");
        run_full(cfg, out2.path.string());
        CHECK(read_file(out.path / "checkpoint.msnn") == read_file(out2.path / "checkpoint.msnn"));
        CHECK(read_file(out.path / "misclassified.csv") ==
              read_file(out2.path / "misclassified.csv"));
        CHECK(strip_wall(read_file(out.path / "report.txt")) ==
              strip_wall(read_file(out2.path / "report.txt")));
        CHECK(strip_wall(read_file(out.path / "metrics.csv")) ==
              strip_wall(read_file(out2.path / "metrics.csv")));
    }

    SUBCASE("missing bank sidecar is an error before training starts") {
        TempDir out3("msnn_exp_train3");
        CHECK_THROWS_AS(run_train(cfg, out3.path.string(), (out3.path / "bank.asom").string()),
                        IoError);
    }

    SUBCASE("random kernel init needs no sidecar") {
        TempDir out4("msnn_exp_train4");
        ExperimentConfig rand_cfg = cfg;
        rand_cfg.kernel_init = "random";
        RunReport r = run_train(rand_cfg, out4.path.string(), "");
        CHECK(r.confusion.size() == 2);
    }

    SUBCASE("zero training epochs still produce a full report") {
        TempDir out5("msnn_exp_train5");
        ExperimentConfig smoke_cfg = cfg;
        smoke_cfg.sgd_epochs = 0;
        RunReport r = run_train(smoke_cfg, out5.path.string(), (out.path / "bank.asom").string());
        CHECK(r.epochs.empty());
        CHECK(r.test_error >= 0.0);
        CHECK(r.test_error <= 1.0);
        CHECK(fs::exists(out5.path / "report.txt"));
    }
}

TEST_CASE("noise perturbs exactly ceil(level * weights) positions per kernel") {
    TempDir data("msnn_exp_data3");
    write_fixture_dataset(data.path);
    TempDir out("msnn_exp_noise");
    ExperimentConfig cfg = fixture_config(data.path);
    RunReport report = run_full(cfg, out.path.string());
    MsnnNetwork net =
        load_checkpoint((out.path / "checkpoint.msnn").string(), cfg.activation_kind());
    auto [train, test] = load_dataset(cfg);

    SUBCASE("perturbation counts") {
        MsnnNetwork copy = net;
        Rng rng(5);
        perturb_kernels(copy, 0.0, 1.0, 0.1, rng); // ceil(0.1 * 25) = 3
        for (int b = 0; b < net.block_count(); ++b)
            for (int j = 0; j < net.kernel_count(); ++j) {
                int changed_ip = 0, changed_merge = 0;
                for (int i = 0; i < 25; ++i) {
                    changed_ip += copy.blocks[b].ip_kernels[j].v[i] !=
                                  net.blocks[b].ip_kernels[j].v[i];
                    changed_merge += copy.blocks[b].merge_kernels[j].v[i] !=
                                     net.blocks[b].merge_kernels[j].v[i];
                }
                CHECK(changed_ip == 3);
                CHECK(changed_merge == 3);
            }
    }

    SUBCASE("zero stddev reproduces the clean error for every level") {
        const double clean = evaluate(net, test).error_rate;
        for (double level : {0.1, 0.2, 0.3, 1.0}) {
            NoiseSpec spec{0.0, 0.0, level, 2, 123};
            NoiseCell cell = run_noise(net, test, spec);
            CHECK(cell.mean_error == clean);
        }
    }

    SUBCASE("level zero perturbs nothing") {
        NoiseSpec spec{0.0, 5.0, 0.0, 2, 123};
        NoiseCell cell = run_noise(net, test, spec);
        CHECK(cell.mean_error == evaluate(net, test).error_rate);
    }

    SUBCASE("grid csv carries the baseline row and every cell") {
        TempDir ndir("msnn_exp_noisegrid");
        auto cells = run_noise_grid(net, test, {0.1, 0.2}, {0.5, 1.0}, 0.0, 2, 9,
                                    ndir.path.string());
        CHECK(cells.size() == 4);
        auto lines = read_lines(ndir.path / "noise.csv");
        REQUIRE(lines.size() == 6); // header + baseline + 4 cells
        CHECK(lines[0] == "level,stddev,mean_error,stddev_error,trials");
        CHECK(lines[1].rfind("0,0,", 0) == 0);
    }

    SUBCASE("out-of-range level is rejected") {
        MsnnNetwork copy = net;
        Rng rng(5);
        CHECK_THROWS_AS(perturb_kernels(copy, 0.0, 1.0, 1.5, rng), ConfigError);
    }
}

TEST_CASE("sweep records failures and continues") {
    TempDir data("msnn_exp_data4");
    write_fixture_dataset(data.path);
    TempDir out("msnn_exp_sweep");
    ExperimentConfig cfg = fixture_config(data.path);
    cfg.kernel_count = 4;

    // 7x7 kernels break the shape algebra on 32x32 (13 -> 7 -> 3.5)
    auto cells = run_sweep(cfg, "kernel_size", {5, 7}, out.path.string());
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].error.empty());
    CHECK(cells[0].test_error >= 0.0);
    CHECK(cells[0].test_error <= 1.0);
    CHECK(!cells[1].error.empty());

    // the succeeding cell's confusion matrix accounts for the whole test set
    RunReport cell_report;
    cell_report.misclassified =
        read_misclassified_csv((out.path / "kernel_size_5" / "misclassified.csv").string());
    CHECK(cell_report.misclassified.size() <= 8);

    auto lines = read_lines(out.path / "sweep.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "axis,value,test_error,status");
    CHECK(lines[2].find("failed") != std::string::npos);

    CHECK_THROWS_AS(run_sweep(cfg, "pool", {1}, out.path.string()), ConfigError);

    SUBCASE("block_count axis raises the module count along with the blocks") {
        TempDir out2("msnn_exp_sweep2");
        ExperimentConfig bc = cfg;
        bc.assom_modules = 2;
        auto block_cells = run_sweep(bc, "block_count", {1, 3}, out2.path.string());
        REQUIRE(block_cells.size() == 2);
        CHECK(block_cells[0].error.empty());
        CHECK(block_cells[1].error.empty());
    }
}

TEST_CASE("dump_visuals writes kernels, maps and their scales") {
    TempDir data("msnn_exp_data5");
    write_fixture_dataset(data.path);
    TempDir out("msnn_exp_train5");
    ExperimentConfig cfg = fixture_config(data.path);
    run_full(cfg, out.path.string());
    MsnnNetwork net =
        load_checkpoint((out.path / "checkpoint.msnn").string(), cfg.activation_kind());
    auto [train, test] = load_dataset(cfg);

    TempDir vdir("msnn_exp_visuals");
    dump_visuals(net, test.samples[0].image, 0, vdir.path.string());

    // n=4: 4 ip kernels + 4 merge kernels + 4 ip maps + 4 pooled maps + merge + pooled
    auto manifest = read_lines(vdir.path / "manifest.txt");
    int pgm_count = 0;
    for (const std::string& name : manifest) {
        CHECK(fs::exists(vdir.path / name));
        if (name.size() > 4 && name.substr(name.size() - 4) == ".pgm") ++pgm_count;
    }
    CHECK(pgm_count == 18);

    auto scale_lines = read_lines(vdir.path / "scales.txt");
    CHECK(scale_lines.size() == 18);

    SUBCASE("dumped kernels reload proportionally within quantization error") {
        for (int j = 0; j < net.kernel_count(); ++j) {
            char name[32];
            std::snprintf(name, sizeof(name), "ip_kernel_%02d.pgm", j);
            PgmImage img = read_pgm((vdir.path / name).string());
            // find this file's recorded min/max
            double lo = 0, hi = 0;
            bool found = false;
            for (const std::string& line : scale_lines) {
                char fname[64];
                double a, b;
                if (std::sscanf(line.c_str(), "%63s %lf %lf", fname, &a, &b) == 3 &&
                    std::string(fname) == name) {
                    lo = a;
                    hi = b;
                    found = true;
                }
            }
            REQUIRE(found);
            const Tensor2& orig = net.blocks[0].ip_kernels[j];
            const double range = hi - lo;
            for (int i = 0; i < orig.size(); ++i) {
                double rebuilt = lo + img.pixels[i] / 255.0 * range;
                CHECK(std::abs(rebuilt - orig.v[i]) <= range / 254.0);
            }
        }
    }
}

TEST_CASE("dump_errors names files by index and labels") {
    TempDir data("msnn_exp_data6");
    write_fixture_dataset(data.path);
    ExperimentConfig cfg = fixture_config(data.path);
    auto [train, test] = load_dataset(cfg);

    std::vector<Misclassified> mis{{3, 1, 0}, {5, 0, 1}};
    TempDir edir("msnn_exp_errors");

    SUBCASE("one-based labels for the object dataset") {
        dump_errors(mis, test, -1.0, 1.0, true, edir.path.string());
        CHECK(fs::exists(edir.path / "3_2to1.pgm"));
        CHECK(fs::exists(edir.path / "5_1to2.pgm"));
        auto manifest = read_lines(edir.path / "manifest.txt");
        CHECK(manifest.size() == mis.size());
    }

    SUBCASE("zero misclassifications leave an empty manifest") {
        dump_errors({}, test, -1.0, 1.0, true, edir.path.string());
        CHECK(read_lines(edir.path / "manifest.txt").empty());
    }

    SUBCASE("round trip recovers the [-1,1] pixels") {
        dump_errors(mis, test, -1.0, 1.0, true, edir.path.string());
        PgmImage img = read_pgm((edir.path / "3_2to1.pgm").string());
        const Tensor2& orig = test.samples[3].image;
        for (int i = 0; i < orig.size(); ++i)
            CHECK(std::abs((img.pixels[i] / 255.0 * 2.0 - 1.0) - orig.v[i]) <= 1.0 / 127.0);
    }
}
