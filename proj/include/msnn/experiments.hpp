#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msnn/assom.hpp"
#include "msnn/config.hpp"
#include "msnn/data.hpp"
#include "msnn/network.hpp"
#include "msnn/rng.hpp"
#include "msnn/training.hpp"

namespace msnn {

struct Misclassified {
    int index = 0; // position in the test set
    int truth = 0;
    int predicted = 0;
};

struct EvalResult {
    double error_rate = 0.0;
    std::vector<std::vector<int>> confusion; // [true][predicted]
    std::vector<Misclassified> misclassified;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<EpochMetrics> epochs;
    double train_error = 0.0;
    double test_error = 0.0;
    std::vector<std::vector<int>> confusion;
    std::vector<Misclassified> misclassified;
    double wall_seconds = 0.0;
};

struct NoiseSpec {
    double mean = 0.0;
    double stddev = 0.0;
    double level = 0.0; // fraction of each kernel's weights, in [0,1]
    int trials = 5;
    std::uint64_t seed = 1;
};

struct NoiseCell {
    double level = 0.0;
    double stddev = 0.0;
    double mean_error = 0.0;
    double stddev_error = 0.0;
    std::vector<double> trial_errors;
};

struct SweepCell {
    int value = 0;
    double test_error = -1.0; // negative when the cell failed
    std::string error;        // diagnostic for a failed cell
};

/// Collects artifact names and writes manifest.txt when asked.
class Manifest {
public:
    explicit Manifest(std::string out_dir);
    /// Register `name` (relative to out_dir) and return its full path.
    std::string add(const std::string& name);
    void write() const;
    const std::string& dir() const { return out_dir_; }

private:
    std::string out_dir_;
    std::vector<std::string> names_;
};

std::pair<LabeledSet, LabeledSet> load_dataset(const ExperimentConfig& cfg);

/// Demeaned receptive-field patches harvested from every training image.
std::vector<Vec> harvest_patches(const LabeledSet& train, int field_side, int stride);

/// Seeded random orthonormal kernels, one module per block (the ablation
/// contrast to subspace-trained kernels).
ModuleBank random_kernel_bank(const ExperimentConfig& cfg);

/// Train the competitive module bank on training patches, keep the
/// block_count best modules, and write the bank sidecar. Returns the bank.
ModuleBank run_kernel_init(const ExperimentConfig& cfg, const std::string& out_dir);

/// Test-set evaluation with confusion matrix and misclassification list.
EvalResult evaluate(const MsnnNetwork& net, const LabeledSet& set);

/// Full training run: build the network from the bank (or random kernels),
/// fine-tune, evaluate, and write report.txt, metrics.csv, checkpoint.msnn,
/// misclassified.csv and manifest.txt under out_dir.
RunReport run_train(const ExperimentConfig& cfg, const std::string& out_dir,
                    const std::string& bank_path);

/// Kernel init plus training in one call (what a sweep cell runs).
RunReport run_full(const ExperimentConfig& cfg, const std::string& out_dir);

/// One run per value of the swept parameter; failed cells carry their
/// diagnostic and the sweep continues. Writes sweep.csv.
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                 const std::vector<int>& values, const std::string& out_dir);

/// Perturb every kernel (inner-product and merging): ceil(level * K)
/// distinct positions per kernel get independent Gaussian noise added.
void perturb_kernels(MsnnNetwork& net, double mean, double stddev, double level, Rng& rng);

/// Mean test error over `spec.trials` independently perturbed copies.
NoiseCell run_noise(const MsnnNetwork& net, const LabeledSet& test, const NoiseSpec& spec);

/// The full noise grid; writes noise.csv (with a clean-error baseline row).
std::vector<NoiseCell> run_noise_grid(const MsnnNetwork& net, const LabeledSet& test,
                                      const std::vector<double>& levels,
                                      const std::vector<double>& stddevs, double mean, int trials,
                                      std::uint64_t seed, const std::string& out_dir);

/// PGM dumps of one block's kernels and the feature maps of one sample's
/// forward pass, each rescaled to [0,255] with the min/max recorded in
/// scales.txt.
void dump_visuals(const MsnnNetwork& net, const Tensor2& image, int block,
                  const std::string& out_dir);

/// PGM dumps of every misclassified test image, named
/// <index>_<true>to<pred>.pgm (1-based class labels for coil20). Pixels map
/// linearly from the dataset's declared [range_lo, range_hi] to [0,255].
void dump_errors(const std::vector<Misclassified>& misclassified, const LabeledSet& test,
                 double range_lo, double range_hi, bool one_based_labels,
                 const std::string& out_dir);

void write_report(const RunReport& report, const std::string& path);
std::vector<Misclassified> read_misclassified_csv(const std::string& path);

} // namespace msnn
