#include "msnn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "msnn/error.hpp"
#include "msnn/ops.hpp"
#include "msnn/pgm.hpp"

namespace msnn {

namespace fs = std::filesystem;

Manifest::Manifest(std::string out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
    // successive commands sharing one out_dir extend the same manifest
    std::ifstream existing(fs::path(out_dir_) / "manifest.txt");
    std::string line;
    while (std::getline(existing, line))
        if (!line.empty()) names_.push_back(line);
}

std::string Manifest::add(const std::string& name) {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    return (fs::path(out_dir_) / name).string();
}

void Manifest::write() const {
    const std::string path = (fs::path(out_dir_) / "manifest.txt").string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const std::string& n : names_) out << n << "\n";
}

std::pair<LabeledSet, LabeledSet> load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset == "mnist") {
        LabeledSet train = load_mnist_idx(cfg.mnist_train_images, cfg.mnist_train_labels);
        LabeledSet test = load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels);
        if (cfg.train_subset_per_class > 0)
            train = subset_per_class(train, cfg.train_subset_per_class, cfg.seed);
        return {std::move(train), std::move(test)};
    }
    LabeledSet all = load_coil20(cfg.coil20_dir);
    return split_coil(all, cfg.coil_train_per_class, cfg.seed);
}

std::vector<Vec> harvest_patches(const LabeledSet& train, int field_side, int stride) {
    std::vector<std::vector<Vec>> per_image(train.samples.size());

#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < train.samples.size(); ++i) {
        std::vector<Patch> patches = extract_patches(train.samples[i].image, field_side, stride);
        per_image[i].reserve(patches.size());
        for (Patch& p : patches) {
            demean_inplace(p.values);
            per_image[i].push_back(std::move(p.values));
        }
    }

    std::vector<Vec> out;
    for (std::vector<Vec>& chunk : per_image)
        for (Vec& p : chunk) out.push_back(std::move(p));
    return out;
}

ModuleBank random_kernel_bank(const ExperimentConfig& cfg) {
    return make_random_bank(cfg.block_count, cfg.kernel_side * cfg.kernel_side, cfg.kernel_count,
                            sub_seed(cfg.seed, 0x7a4du));
}

ModuleBank run_kernel_init(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    Manifest manifest(out_dir);

    auto [train, test] = load_dataset(cfg);
    (void)test;
    std::vector<Vec> patches = harvest_patches(train, cfg.kernel_side, cfg.patch_stride);

    ModuleBank bank = make_random_bank(cfg.modules(), cfg.kernel_side * cfg.kernel_side,
                                       cfg.kernel_count, sub_seed(cfg.seed, 0xa550u));
    AssomSchedule sched{cfg.assom_epochs, cfg.assom_eta0, cfg.assom_decay};
    train_assom(patches, bank, sched);
    if (bank.count() > cfg.block_count) bank = select_modules(bank, patches, cfg.block_count);

    save_bank(manifest.add("bank.asom"), bank);
    manifest.write();
    return bank;
}

EvalResult evaluate(const MsnnNetwork& net, const LabeledSet& set) {
    EvalResult res;
    res.confusion.assign(set.class_count, std::vector<int>(set.class_count, 0));
    std::vector<int> predictions(set.size());

#pragma omp parallel for schedule(static)
    for (int i = 0; i < set.size(); ++i) predictions[i] = predict(set.samples[i].image, net);

    int wrong = 0;
    for (int i = 0; i < set.size(); ++i) {
        const int truth = set.samples[i].label;
        res.confusion[truth][predictions[i]]++;
        if (predictions[i] != truth) {
            ++wrong;
            res.misclassified.push_back({i, truth, predictions[i]});
        }
    }
    res.error_rate = static_cast<double>(wrong) / static_cast<double>(set.size());
    return res;
}

namespace {

void write_confusion(std::FILE* f, const std::vector<std::vector<int>>& confusion) {
    const int c = static_cast<int>(confusion.size());
    std::fprintf(f, "confusion matrix (rows = true, cols = predicted):\n");
    std::fprintf(f, "      ");
    for (int j = 0; j < c; ++j) std::fprintf(f, "%6d", j);
    std::fprintf(f, "\n");
    for (int i = 0; i < c; ++i) {
        std::fprintf(f, "%6d", i);
        for (int j = 0; j < c; ++j) std::fprintf(f, "%6d", confusion[i][j]);
        std::fprintf(f, "\n");
    }
}

void write_misclassified_csv(const std::string& path,
                             const std::vector<Misclassified>& misclassified) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    std::fprintf(f, "index,true,predicted\n");
    for (const Misclassified& m : misclassified)
        std::fprintf(f, "%d,%d,%d\n", m.index, m.truth, m.predicted);
    std::fclose(f);
}

} // namespace

void write_report(const RunReport& report, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    std::fprintf(f, "# configuration\n");
    report.config.echo(f);
    std::fprintf(f, "\n# results\n");
    std::fprintf(f, "train_error = %.17g\n", report.train_error);
    std::fprintf(f, "test_error = %.17g\n", report.test_error);
    std::fprintf(f, "misclassified = %zu\n", report.misclassified.size());
    std::fprintf(f, "wall_seconds = %.3f\n", report.wall_seconds);
    std::fprintf(f, "\n");
    write_confusion(f, report.confusion);
    std::fclose(f);
}

std::vector<Misclassified> read_misclassified_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<Misclassified> out;
    std::string line;
    if (!std::getline(in, line) || line != "index,true,predicted")
        throw IoError("'" + path + "': not a misclassified.csv file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Misclassified m;
        if (std::sscanf(line.c_str(), "%d,%d,%d", &m.index, &m.truth, &m.predicted) != 3)
            throw IoError("'" + path + "': malformed row '" + line + "'");
        out.push_back(m);
    }
    return out;
}

RunReport run_train(const ExperimentConfig& cfg, const std::string& out_dir,
                    const std::string& bank_path) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    Manifest manifest(out_dir);

    auto [train, test] = load_dataset(cfg);

    ModuleBank bank;
    if (cfg.kernel_init == "random") {
        bank = random_kernel_bank(cfg);
    } else {
        bank = load_bank(bank_path);
        if (bank.count() != cfg.block_count || bank.dim() != cfg.kernel_side * cfg.kernel_side ||
            bank.basis_count() != cfg.kernel_count)
            throw ConfigError("bank '" + bank_path + "' does not match the configured architecture");
    }

    MsnnNetwork net = build_network(bank, cfg.input_side, cfg.pool_scale, cfg.fc_hidden,
                                    train.class_count, cfg.activation_kind(), cfg.seed);

    SgdSchedule sched{cfg.sgd_epochs, cfg.sgd_batch, cfg.sgd_eta0, cfg.sgd_decay};
    RunReport report;
    report.config = cfg;
    report.epochs = train_msnn(net, train, sched, cfg.seed);

    report.train_error = evaluate(net, train).error_rate;
    EvalResult test_eval = evaluate(net, test);
    report.test_error = test_eval.error_rate;
    report.confusion = std::move(test_eval.confusion);
    report.misclassified = std::move(test_eval.misclassified);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_metrics_csv(manifest.add("metrics.csv"), report.epochs);
    save_checkpoint(manifest.add("checkpoint.msnn"), net);
    write_misclassified_csv(manifest.add("misclassified.csv"), report.misclassified);
    write_report(report, manifest.add("report.txt"));
    manifest.write();
    return report;
}

RunReport run_full(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::string bank_path = (fs::path(out_dir) / "bank.asom").string();
    if (cfg.kernel_init == "subspace") run_kernel_init(cfg, out_dir);
    return run_train(cfg, out_dir, bank_path);
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                 const std::vector<int>& values, const std::string& out_dir) {
    if (axis != "kernel_size" && axis != "kernel_count" && axis != "block_count")
        throw ConfigError("unknown sweep axis '" + axis + "'");
    if (values.empty()) throw ConfigError("sweep needs at least one value");

    Manifest manifest(out_dir);
    std::vector<SweepCell> cells;
    for (int value : values) {
        ExperimentConfig cell_cfg = cfg;
        if (axis == "kernel_size") cell_cfg.kernel_side = value;
        else if (axis == "kernel_count") cell_cfg.kernel_count = value;
        else cell_cfg.block_count = value;
        if (cell_cfg.assom_modules > 0 && axis == "block_count")
            cell_cfg.assom_modules = std::max(cell_cfg.assom_modules, value);

        SweepCell cell;
        cell.value = value;
        const std::string cell_dir =
            (fs::path(out_dir) / (axis + "_" + std::to_string(value))).string();
        try {
            cell.test_error = run_full(cell_cfg, cell_dir).test_error;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        cells.push_back(std::move(cell));
    }

    const std::string csv = manifest.add("sweep.csv");
    std::FILE* f = std::fopen(csv.c_str(), "w");
    if (!f) throw IoError("cannot open '" + csv + "' for writing");
    std::fprintf(f, "axis,value,test_error,status\n");
    for (const SweepCell& c : cells) {
        if (c.error.empty())
            std::fprintf(f, "%s,%d,%.17g,ok\n", axis.c_str(), c.value, c.test_error);
        else
            std::fprintf(f, "%s,%d,,failed: %s\n", axis.c_str(), c.value, c.error.c_str());
    }
    std::fclose(f);
    manifest.write();
    return cells;
}

void perturb_kernels(MsnnNetwork& net, double mean, double stddev, double level, Rng& rng) {
    if (level < 0.0 || level > 1.0) throw ConfigError("noise level must be within [0,1]");
    auto perturb = [&](Tensor2& kernel) {
        const int weights = kernel.size();
        const int hit = static_cast<int>(std::ceil(level * weights));
        if (hit == 0) return;
        for (int pos : rng.sample_without_replacement(weights, hit))
            kernel.v[pos] += rng.normal(mean, stddev);
    };
    for (Block& b : net.blocks) {
        for (Tensor2& k : b.ip_kernels) perturb(k);
        for (Tensor2& k : b.merge_kernels) perturb(k);
    }
}

NoiseCell run_noise(const MsnnNetwork& net, const LabeledSet& test, const NoiseSpec& spec) {
    NoiseCell cell;
    cell.level = spec.level;
    cell.stddev = spec.stddev;
    cell.trial_errors.resize(spec.trials);
    for (int t = 0; t < spec.trials; ++t) {
        MsnnNetwork copy = net;
        Rng rng(sub_seed(spec.seed, 0x4015e000u + static_cast<std::uint64_t>(t)));
        perturb_kernels(copy, spec.mean, spec.stddev, spec.level, rng);
        cell.trial_errors[t] = evaluate(copy, test).error_rate;
    }
    double s = 0.0;
    for (double e : cell.trial_errors) s += e;
    cell.mean_error = s / spec.trials;
    double var = 0.0;
    for (double e : cell.trial_errors) var += (e - cell.mean_error) * (e - cell.mean_error);
    cell.stddev_error = spec.trials > 1 ? std::sqrt(var / (spec.trials - 1)) : 0.0;
    return cell;
}

std::vector<NoiseCell> run_noise_grid(const MsnnNetwork& net, const LabeledSet& test,
                                      const std::vector<double>& levels,
                                      const std::vector<double>& stddevs, double mean, int trials,
                                      std::uint64_t seed, const std::string& out_dir) {
    Manifest manifest(out_dir);
    const double clean_error = evaluate(net, test).error_rate;

    std::vector<NoiseCell> cells;
    std::uint64_t cell_index = 0;
    for (double level : levels)
        for (double stddev : stddevs) {
            NoiseSpec spec{mean, stddev, level, trials, sub_seed(seed, 0xce11u + cell_index++)};
            cells.push_back(run_noise(net, test, spec));
        }

    const std::string csv = manifest.add("noise.csv");
    std::FILE* f = std::fopen(csv.c_str(), "w");
    if (!f) throw IoError("cannot open '" + csv + "' for writing");
    std::fprintf(f, "level,stddev,mean_error,stddev_error,trials\n");
    std::fprintf(f, "0,0,%.17g,0,1\n", clean_error); // unperturbed baseline
    for (const NoiseCell& c : cells)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%d\n", c.level, c.stddev, c.mean_error,
                     c.stddev_error, trials);
    std::fclose(f);
    manifest.write();
    return cells;
}

namespace {

std::string map_name(const char* prefix, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%02d.pgm", prefix, index);
    return buf;
}

} // namespace

void dump_visuals(const MsnnNetwork& net, const Tensor2& image, int block,
                  const std::string& out_dir) {
    if (block < 0 || block >= net.block_count())
        throw ConfigError("block index " + std::to_string(block) + " out of range");

    Manifest manifest(out_dir);
    const std::string scales_path = manifest.add("scales.txt");
    std::FILE* scales = std::fopen(scales_path.c_str(), "w");
    if (!scales) throw IoError("cannot open '" + scales_path + "' for writing");

    auto dump = [&](const Tensor2& map, const std::string& name) {
        RescaledMap r = rescale_to_bytes(map);
        write_pgm(manifest.add(name), r.image);
        std::fprintf(scales, "%s %.17g %.17g\n", name.c_str(), r.lo, r.hi);
    };

    const Block& blk = net.blocks[block];
    for (int j = 0; j < blk.kernel_count(); ++j) dump(blk.ip_kernels[j], map_name("ip_kernel", j));
    for (int j = 0; j < blk.kernel_count(); ++j)
        dump(blk.merge_kernels[j], map_name("merge_kernel", j));

    const ForwardTrace trace = network_forward(image, net);
    const BlockTrace& bt = trace.blocks[block];
    for (int j = 0; j < blk.kernel_count(); ++j) dump(bt.ip_maps[j], map_name("ip_map", j));
    for (int j = 0; j < blk.kernel_count(); ++j) dump(bt.pooled1[j], map_name("pool1_map", j));
    dump(bt.merge_map, "merge_map.pgm");
    dump(bt.pooled2, "pool2_map.pgm");

    std::fclose(scales);
    manifest.write();
}

void dump_errors(const std::vector<Misclassified>& misclassified, const LabeledSet& test,
                 double range_lo, double range_hi, bool one_based_labels,
                 const std::string& out_dir) {
    Manifest manifest(out_dir);
    const int offset = one_based_labels ? 1 : 0;
    const double scale = 255.0 / (range_hi - range_lo);
    for (const Misclassified& m : misclassified) {
        if (m.index < 0 || m.index >= test.size())
            throw ConfigError("misclassified index " + std::to_string(m.index) +
                              " outside the test set");
        const Tensor2& img = test.samples[m.index].image;
        PgmImage pgm;
        pgm.width = img.cols;
        pgm.height = img.rows;
        pgm.pixels.resize(img.v.size());
        for (std::size_t i = 0; i < img.v.size(); ++i) {
            double b = (img.v[i] - range_lo) * scale;
            pgm.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(b, 0.0, 255.0)));
        }
        char name[96];
        std::snprintf(name, sizeof(name), "%d_%dto%d.pgm", m.index, m.truth + offset,
                      m.predicted + offset);
        write_pgm(manifest.add(name), pgm);
    }
    manifest.write();
}

} // namespace msnn
