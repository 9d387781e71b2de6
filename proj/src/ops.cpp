#include "msnn/ops.hpp"

#include <algorithm>
#include <string>

// These primitives run on small maps (side <= 64) where a per-call OpenMP
// region costs more than the arithmetic; they are tight serial loops and the
// parallelism lives in the callers (per-sample, per-block, per-image loops).

namespace msnn {

namespace {

void check_window_fits(const Tensor2& map, int side, const char* who) {
    if (side <= 0)
        throw DimensionError(std::string(who) + ": non-positive window side");
    if (side > map.rows || side > map.cols)
        throw DimensionError(std::string(who) + ": " + std::to_string(side) + "x" +
                             std::to_string(side) + " window exceeds " +
                             std::to_string(map.rows) + "x" + std::to_string(map.cols) + " map");
}

} // namespace

std::vector<Patch> extract_patches(const Tensor2& map, int field_side, int stride) {
    check_window_fits(map, field_side, "extract_patches");
    if (stride < 1) throw DimensionError("extract_patches: stride must be >= 1");

    const int out_rows = (map.rows - field_side) / stride + 1;
    const int out_cols = (map.cols - field_side) / stride + 1;
    std::vector<Patch> patches(static_cast<std::size_t>(out_rows) * out_cols);

    for (int pr = 0; pr < out_rows; ++pr) {
        for (int pc = 0; pc < out_cols; ++pc) {
            Patch& p = patches[static_cast<std::size_t>(pr) * out_cols + pc];
            p.row = pr * stride;
            p.col = pc * stride;
            p.values.resize(static_cast<std::size_t>(field_side) * field_side);
            for (int a = 0; a < field_side; ++a) {
                const double* src = &map.v[static_cast<std::size_t>(p.row + a) * map.cols + p.col];
                double* dst = &p.values[static_cast<std::size_t>(a) * field_side];
                for (int b = 0; b < field_side; ++b) dst[b] = src[b];
            }
        }
    }
    return patches;
}

Vec demean(const Vec& p) {
    Vec out = p;
    demean_inplace(out);
    return out;
}

void demean_inplace(Vec& p) {
    if (p.empty()) return;
    double m = sum(p) / static_cast<double>(p.size());
    for (double& x : p) x -= m;
}

Tensor2 valid_cross_correlate(const Tensor2& map, const Tensor2& kernel, bool demean_windows) {
    if (kernel.rows != kernel.cols)
        throw DimensionError("valid_cross_correlate: kernel must be square");
    const int k = kernel.rows;
    check_window_fits(map, k, "valid_cross_correlate");

    const int out_rows = map.rows - k + 1;
    const int out_cols = map.cols - k + 1;
    Tensor2 out(out_rows, out_cols);

    const double kernel_sum = sum(kernel);
    const double inv_area = 1.0 / (static_cast<double>(k) * k);

    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            double acc = 0.0;
            double win_sum = 0.0;
            for (int a = 0; a < k; ++a) {
                const double* mrow = &map.v[static_cast<std::size_t>(r + a) * map.cols + c];
                const double* krow = &kernel.v[static_cast<std::size_t>(a) * k];
                for (int b = 0; b < k; ++b) {
                    acc += mrow[b] * krow[b];
                    win_sum += mrow[b];
                }
            }
            if (demean_windows) acc -= win_sum * inv_area * kernel_sum;
            out(r, c) = acc;
        }
    }
    return out;
}

std::vector<Tensor2> valid_cross_correlate_multi(const Tensor2& map,
                                                 const std::vector<Tensor2>& kernels,
                                                 bool demean_windows) {
    if (kernels.empty()) return {};
    const int k = kernels[0].rows;
    for (const Tensor2& kk : kernels)
        if (kk.rows != k || kk.cols != k)
            throw DimensionError("valid_cross_correlate_multi: kernels must share one square side");
    check_window_fits(map, k, "valid_cross_correlate_multi");

    const int n = static_cast<int>(kernels.size());
    const int out_rows = map.rows - k + 1;
    const int out_cols = map.cols - k + 1;
    std::vector<Tensor2> out(n, Tensor2(out_rows, out_cols));

    Vec kernel_sums(n);
    for (int j = 0; j < n; ++j) kernel_sums[j] = sum(kernels[j]);
    const double inv_area = 1.0 / (static_cast<double>(k) * k);

    // one window read feeds every kernel
    Vec window(static_cast<std::size_t>(k) * k);
    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            double win_sum = 0.0;
            for (int a = 0; a < k; ++a) {
                const double* mrow = &map.v[static_cast<std::size_t>(r + a) * map.cols + c];
                double* wrow = &window[static_cast<std::size_t>(a) * k];
                for (int b = 0; b < k; ++b) {
                    wrow[b] = mrow[b];
                    win_sum += mrow[b];
                }
            }
            const double dc = demean_windows ? win_sum * inv_area : 0.0;
            for (int j = 0; j < n; ++j) {
                const double* kv = kernels[j].v.data();
                double acc = 0.0;
                for (int i = 0; i < k * k; ++i) acc += window[i] * kv[i];
                out[j](r, c) = acc - dc * kernel_sums[j];
            }
        }
    }
    return out;
}

Tensor2 valid_convolve(const Tensor2& map, const Tensor2& kernel) {
    return valid_cross_correlate(map, flip2(kernel), false);
}

Tensor2 full_cross_correlate(const Tensor2& map, const Tensor2& kernel) {
    if (kernel.rows != kernel.cols)
        throw DimensionError("full_cross_correlate: kernel must be square");
    const int k = kernel.rows;
    const int out_rows = map.rows + k - 1;
    const int out_cols = map.cols + k - 1;
    Tensor2 out(out_rows, out_cols);

    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            // out(r,c) = sum_{a,b} map(r-k+1+a, c-k+1+b) * kernel(a,b), zeros outside
            double acc = 0.0;
            const int a_lo = std::max(0, k - 1 - r);
            const int a_hi = std::min(k - 1, map.rows - 1 - (r - k + 1));
            const int b_lo = std::max(0, k - 1 - c);
            const int b_hi = std::min(k - 1, map.cols - 1 - (c - k + 1));
            for (int a = a_lo; a <= a_hi; ++a) {
                const double* mrow = &map.v[static_cast<std::size_t>(r - k + 1 + a) * map.cols];
                const double* krow = &kernel.v[static_cast<std::size_t>(a) * k];
                for (int b = b_lo; b <= b_hi; ++b) acc += mrow[c - k + 1 + b] * krow[b];
            }
            out(r, c) = acc;
        }
    }
    return out;
}

Tensor2 avg_downsample(const Tensor2& map, int scale) {
    if (scale < 1) throw DimensionError("avg_downsample: scale must be >= 1");
    if (map.rows % scale != 0 || map.cols % scale != 0)
        throw DimensionError("avg_downsample: " + std::to_string(map.rows) + "x" +
                             std::to_string(map.cols) + " not divisible by scale " +
                             std::to_string(scale));

    const int out_rows = map.rows / scale;
    const int out_cols = map.cols / scale;
    Tensor2 out(out_rows, out_cols);
    const double inv = 1.0 / (static_cast<double>(scale) * scale);

    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            double acc = 0.0;
            for (int a = 0; a < scale; ++a)
                for (int b = 0; b < scale; ++b)
                    acc += map(r * scale + a, c * scale + b);
            out(r, c) = acc * inv;
        }
    }
    return out;
}

Tensor2 upsample_uniform(const Tensor2& map, int scale, double gain) {
    if (scale < 1) throw DimensionError("upsample_uniform: scale must be >= 1");
    Tensor2 out(map.rows * scale, map.cols * scale);

    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            const double v = map(r, c) * gain;
            for (int a = 0; a < scale; ++a)
                for (int b = 0; b < scale; ++b)
                    out(r * scale + a, c * scale + b) = v;
        }
    }
    return out;
}

std::vector<Vec> gram_schmidt(const std::vector<Vec>& vectors) {
    std::vector<Vec> out = vectors;
    gram_schmidt_inplace(out);
    return out;
}

void gram_schmidt_inplace(std::vector<Vec>& vectors) {
    constexpr double kDegenerate = 1e-10;
    const std::size_t n = vectors.size();
    if (n == 0) return;
    const std::size_t dim = vectors[0].size();
    if (n > dim)
        throw DimensionError("gram_schmidt: more vectors than dimensions");
    for (std::size_t i = 1; i < n; ++i)
        if (vectors[i].size() != dim)
            throw DimensionError("gram_schmidt: vectors of unequal dimension");

    // modified Gram-Schmidt
    for (std::size_t i = 0; i < n; ++i) {
        Vec& vi = vectors[i];
        for (std::size_t j = 0; j < i; ++j) axpy(-dot(vectors[j], vi), vectors[j], vi);
        double nrm = norm(vi);
        if (nrm < kDegenerate)
            throw DegeneracyError(static_cast<int>(i),
                                  "gram_schmidt: vector " + std::to_string(i) +
                                      " is degenerate after removing prior components");
        double inv = 1.0 / nrm;
        for (double& x : vi) x *= inv;
    }
}

} // namespace msnn
