#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msnn/tensor.hpp"

namespace msnn {

/// One competing unit: H orthonormal basis vectors spanning a subspace of
/// patch space R^D.
struct SubspaceModule {
    int dim = 0;
    std::vector<Vec> basis;

    int basis_count() const { return static_cast<int>(basis.size()); }
};

/// The bank of competing modules; all share D and H.
struct ModuleBank {
    std::vector<SubspaceModule> modules;
    std::uint64_t rng_seed = 0;

    int count() const { return static_cast<int>(modules.size()); }
    int dim() const { return modules.empty() ? 0 : modules[0].dim; }
    int basis_count() const { return modules.empty() ? 0 : modules[0].basis_count(); }
};

struct AssomSchedule {
    int epochs = 1;
    double eta0 = 0.5;
    double decay = 0.05;

    double rate_at(int epoch) const;
};

/// Projection lengths o_h = b_h . x.
Vec project(const SubspaceModule& m, const Vec& x);

/// sum_h (b_h . x) b_h — the module's estimate of x.
Vec reconstruct(const SubspaceModule& m, const Vec& x);

/// Squared norm of the reconstruction; equals sum_h (b_h . x)^2 for an
/// orthonormal basis.
double projection_energy(const SubspaceModule& m, const Vec& x);

/// Index of the module with the greatest projection energy; ties go to the
/// lowest index.
int winner(const ModuleBank& bank, const Vec& x);

/// Rotate every basis vector toward x:
///   b_h <- (I + rate * x x^T / (|x_hat| |x|)) b_h
/// followed by re-orthonormalization. Degenerate inputs (|x| or |x_hat|
/// below 1e-10) skip the step.
void rotate_update(SubspaceModule& m, const Vec& x, double rate);

/// N modules of H basis vectors each: unit-normalized seeded Gaussian
/// draws, orthonormalized.
ModuleBank make_random_bank(int n_modules, int dim, int basis_count, std::uint64_t seed);

/// Competitive training: for each epoch, visit the patches in a freshly
/// shuffled order and rotate the winner with the epoch's learning rate.
/// Patches are expected to be demeaned already.
void train_assom(const std::vector<Vec>& patches, ModuleBank& bank, const AssomSchedule& sched);

/// Mean of |x - reconstruct(winner, x)|^2 over the patches.
double mean_reconstruction_error(const ModuleBank& bank, const std::vector<Vec>& patches);

/// Mean of |x - reconstruct(m, x)|^2 over the patches for one module.
double module_reconstruction_error(const SubspaceModule& m, const std::vector<Vec>& patches);

/// Keep the `keep` modules with the lowest mean reconstruction error over
/// the patches, preserving their relative order.
ModuleBank select_modules(const ModuleBank& bank, const std::vector<Vec>& patches, int keep);

/// Flat binary sidecar: "ASOM" magic, version, N, D, H as little-endian
/// 32-bit integers, then N*H*D little-endian doubles. Reload is bit-exact.
void save_bank(const std::string& path, const ModuleBank& bank);
ModuleBank load_bank(const std::string& path);

} // namespace msnn
