#include "msnn/assom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msnn/error.hpp"
#include "msnn/io.hpp"
#include "msnn/ops.hpp"
#include "msnn/rng.hpp"

namespace msnn {

double AssomSchedule::rate_at(int epoch) const {
    return eta0 * std::exp(-decay * static_cast<double>(epoch));
}

namespace {

void check_dim(const SubspaceModule& m, const Vec& x, const char* who) {
    if (static_cast<int>(x.size()) != m.dim)
        throw DimensionError(std::string(who) + ": input dim " + std::to_string(x.size()) +
                             " != module dim " + std::to_string(m.dim));
}

} // namespace

Vec project(const SubspaceModule& m, const Vec& x) {
    check_dim(m, x, "project");
    Vec o(m.basis.size());
    for (std::size_t h = 0; h < m.basis.size(); ++h) o[h] = dot(m.basis[h], x);
    return o;
}

Vec reconstruct(const SubspaceModule& m, const Vec& x) {
    check_dim(m, x, "reconstruct");
    Vec xhat(x.size(), 0.0);
    for (const Vec& b : m.basis) axpy(dot(b, x), b, xhat);
    return xhat;
}

double projection_energy(const SubspaceModule& m, const Vec& x) {
    check_dim(m, x, "projection_energy");
    double e = 0.0;
    for (const Vec& b : m.basis) {
        double o = dot(b, x);
        e += o * o;
    }
    return e;
}

int winner(const ModuleBank& bank, const Vec& x) {
    int best = 0;
    double best_energy = -1.0;
    for (int i = 0; i < bank.count(); ++i) {
        double e = projection_energy(bank.modules[i], x);
        if (e > best_energy) {
            best_energy = e;
            best = i;
        }
    }
    return best;
}

void rotate_update(SubspaceModule& m, const Vec& x, double rate) {
    check_dim(m, x, "rotate_update");
    const double xn = norm(x);
    if (xn <= 1e-10) return;
    const double rn = norm(reconstruct(m, x));
    if (rn <= 1e-10) return;

    // (I + rate * x x^T / (|x_hat||x|)) b  ==  b + scale * (x . b) * x
    const double scale = rate / (rn * xn);
    for (Vec& b : m.basis) axpy(scale * dot(x, b), x, b);
    gram_schmidt_inplace(m.basis);
}

ModuleBank make_random_bank(int n_modules, int dim, int basis_count, std::uint64_t seed) {
    if (n_modules < 1) throw ConfigError("module bank needs at least one module");
    if (basis_count < 1 || basis_count > dim)
        throw ConfigError("basis count must be within [1, dim]");

    Rng rng(seed);
    ModuleBank bank;
    bank.rng_seed = seed;
    bank.modules.resize(n_modules);
    for (SubspaceModule& m : bank.modules) {
        m.dim = dim;
        m.basis.resize(basis_count);
        for (Vec& b : m.basis) {
            b.resize(dim);
            for (double& v : b) v = rng.normal();
            double inv = 1.0 / norm(b);
            for (double& v : b) v *= inv;
        }
        gram_schmidt_inplace(m.basis);
    }
    return bank;
}

void train_assom(const std::vector<Vec>& patches, ModuleBank& bank, const AssomSchedule& sched) {
    if (patches.empty()) throw ConfigError("train_assom: empty patch list");
    if (static_cast<int>(patches[0].size()) != bank.dim())
        throw DimensionError("train_assom: patch dim != bank dim");

    Rng rng(sub_seed(bank.rng_seed, 0x55u));
    std::vector<std::uint32_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0u);

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        const double rate = sched.rate_at(epoch);
        rng.shuffle(order);
        for (std::uint32_t idx : order) {
            const Vec& x = patches[idx];
            rotate_update(bank.modules[winner(bank, x)], x, rate);
        }
    }
}

double module_reconstruction_error(const SubspaceModule& m, const std::vector<Vec>& patches) {
    double total = 0.0;
    for (const Vec& x : patches) {
        Vec xhat = reconstruct(m, x);
        double r = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - xhat[i];
            r += d * d;
        }
        total += r;
    }
    return total / static_cast<double>(patches.size());
}

double mean_reconstruction_error(const ModuleBank& bank, const std::vector<Vec>& patches) {
    if (patches.empty()) throw ConfigError("mean_reconstruction_error: empty patch list");
    double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Vec& x = patches[i];
        Vec xhat = reconstruct(bank.modules[winner(bank, x)], x);
        double r = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double d = x[j] - xhat[j];
            r += d * d;
        }
        total += r;
    }
    return total / static_cast<double>(patches.size());
}

ModuleBank select_modules(const ModuleBank& bank, const std::vector<Vec>& patches, int keep) {
    if (keep > bank.count())
        throw ConfigError("select_modules: cannot keep more modules than trained");
    if (keep == bank.count()) return bank;

    std::vector<std::pair<double, int>> scored(bank.count());
    for (int i = 0; i < bank.count(); ++i)
        scored[i] = {module_reconstruction_error(bank.modules[i], patches), i};
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    scored.resize(keep);
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    ModuleBank out;
    out.rng_seed = bank.rng_seed;
    for (const auto& [err, idx] : scored) out.modules.push_back(bank.modules[idx]);
    return out;
}

void save_bank(const std::string& path, const ModuleBank& bank) {
    BinaryWriter w(path);
    w.write_bytes("ASOM", 4);
    w.write_u32(1); // version
    w.write_u32(static_cast<std::uint32_t>(bank.count()));
    w.write_u32(static_cast<std::uint32_t>(bank.dim()));
    w.write_u32(static_cast<std::uint32_t>(bank.basis_count()));
    for (const SubspaceModule& m : bank.modules)
        for (const Vec& b : m.basis) w.write_f64_array(b);
}

ModuleBank load_bank(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("ASOM");
    std::uint32_t version = r.read_u32();
    if (version != 1)
        throw IoError(path + ": unsupported subspace bank version " + std::to_string(version));
    const int n = static_cast<int>(r.read_u32());
    const int dim = static_cast<int>(r.read_u32());
    const int basis_count = static_cast<int>(r.read_u32());
    if (n < 1 || dim < 1 || basis_count < 1 || basis_count > dim)
        throw IoError(path + ": corrupt subspace bank header");

    ModuleBank bank;
    bank.modules.resize(n);
    for (SubspaceModule& m : bank.modules) {
        m.dim = dim;
        m.basis.resize(basis_count);
        for (Vec& b : m.basis) b = r.read_f64_array(dim);
    }
    r.expect_eof();
    return bank;
}

} // namespace msnn
