#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msnn/experiments.hpp"

namespace {

using namespace msnn;

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.push_back(std::stoi(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.push_back(std::stod(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

ExperimentConfig load_config(const std::string& path, std::uint64_t seed_override,
                             bool have_seed) {
    ExperimentConfig cfg = parse_config_file(path);
    if (have_seed) cfg.seed = seed_override;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-subspace neural network experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string bank_path;
    std::string checkpoint_path;
    std::string run_dir;
    std::string axis;
    std::string values_csv;
    std::string levels_csv = "0.1,0.2,0.3";
    std::string stddevs_csv = "0.5,0.75,1";
    double noise_mean = 0.0;
    int trials = 5;
    int sample_index = 0;
    int block_index = 0;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--out-dir", out_dir, "artifact directory");
        cmd->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
    };

    CLI::App* init = app.add_subcommand("init-kernels", "train the subspace module bank");
    add_common(init);

    CLI::App* train = app.add_subcommand("train", "fine-tune and evaluate a network");
    add_common(train);
    train->add_option("--bank", bank_path, "module bank sidecar (default <out-dir>/bank.asom)");

    CLI::App* sweep = app.add_subcommand("sweep", "re-run training across one parameter");
    add_common(sweep);
    sweep->add_option("--axis", axis, "kernel_size | kernel_count | block_count")->required();
    sweep->add_option("--values", values_csv, "comma-separated integers")->required();

    CLI::App* noise = app.add_subcommand("noise", "kernel-noise sensitivity grid");
    add_common(noise);
    noise->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    noise->add_option("--levels", levels_csv, "noise levels (fractions of weights)");
    noise->add_option("--stds", stddevs_csv, "noise standard deviations");
    noise->add_option("--mean", noise_mean, "noise mean");
    noise->add_option("--trials", trials, "trials per grid cell");

    CLI::App* visuals = app.add_subcommand("dump-visuals", "kernel and feature-map images");
    add_common(visuals);
    visuals->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    visuals->add_option("--sample-index", sample_index, "test-set sample to trace");
    visuals->add_option("--block", block_index, "block to dump");

    CLI::App* errors = app.add_subcommand("dump-errors", "misclassified test images");
    add_common(errors);
    errors->add_option("--run-dir", run_dir, "directory holding misclassified.csv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            run_kernel_init(cfg, out_dir);
            std::printf("wrote %s/bank.asom\n", out_dir.c_str());
        } else if (train->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            if (bank_path.empty())
                bank_path = (std::filesystem::path(out_dir) / "bank.asom").string();
            RunReport report = run_train(cfg, out_dir, bank_path);
            std::printf("train_error %.6f  test_error %.6f  wall %.1fs\n", report.train_error,
                        report.test_error, report.wall_seconds);
        } else if (sweep->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            std::vector<SweepCell> cells = run_sweep(cfg, axis, parse_int_list(values_csv), out_dir);
            for (const SweepCell& c : cells) {
                if (c.error.empty())
                    std::printf("%s=%d  test_error %.6f\n", axis.c_str(), c.value, c.test_error);
                else
                    std::printf("%s=%d  failed: %s\n", axis.c_str(), c.value, c.error.c_str());
            }
        } else if (noise->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            MsnnNetwork net = load_checkpoint(checkpoint_path, cfg.activation_kind());
            auto [train_set, test_set] = load_dataset(cfg);
            (void)train_set;
            std::vector<NoiseCell> cells =
                run_noise_grid(net, test_set, parse_double_list(levels_csv),
                               parse_double_list(stddevs_csv), noise_mean, trials, cfg.seed, out_dir);
            for (const NoiseCell& c : cells)
                std::printf("level %.2f  std %.2f  mean_error %.6f (+/- %.6f)\n", c.level, c.stddev,
                            c.mean_error, c.stddev_error);
        } else if (visuals->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            MsnnNetwork net = load_checkpoint(checkpoint_path, cfg.activation_kind());
            auto [train_set, test_set] = load_dataset(cfg);
            (void)train_set;
            if (sample_index < 0 || sample_index >= test_set.size())
                throw ConfigError("sample index out of range");
            dump_visuals(net, test_set.samples[sample_index].image, block_index, out_dir);
            std::printf("wrote visuals for test sample %d to %s\n", sample_index, out_dir.c_str());
        } else if (errors->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed_override, have_seed);
            auto [train_set, test_set] = load_dataset(cfg);
            (void)train_set;
            std::vector<Misclassified> mis = read_misclassified_csv(
                (std::filesystem::path(run_dir) / "misclassified.csv").string());
            const bool coil = cfg.dataset == "coil20";
            dump_errors(mis, test_set, coil ? -1.0 : 0.0, 1.0, coil, out_dir);
            std::printf("wrote %zu misclassified images to %s\n", mis.size(), out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
