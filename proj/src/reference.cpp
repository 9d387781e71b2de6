#include "msnn/reference.hpp"

namespace msnn::ref {

std::vector<RefPatch> extract_patches(const Tensor2& map, int field_side, int stride) {
    std::vector<RefPatch> out;
    for (int r = 0; r + field_side <= map.rows; r += stride) {
        for (int c = 0; c + field_side <= map.cols; c += stride) {
            RefPatch p;
            p.row = r;
            p.col = c;
            for (int a = 0; a < field_side; ++a)
                for (int b = 0; b < field_side; ++b)
                    p.values.push_back(map(r + a, c + b));
            out.push_back(p);
        }
    }
    return out;
}

Vec demean(const Vec& p) {
    double m = 0.0;
    for (double x : p) m += x;
    m /= static_cast<double>(p.size());
    Vec out;
    for (double x : p) out.push_back(x - m);
    return out;
}

Tensor2 cross_correlate(const Tensor2& map, const Tensor2& kernel, bool demean_windows) {
    const int k = kernel.rows;
    Tensor2 out(map.rows - k + 1, map.cols - k + 1);
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            Vec window;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    window.push_back(map(r + a, c + b));
            if (demean_windows) window = demean(window);
            double acc = 0.0;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    acc += window[static_cast<std::size_t>(a) * k + b] * kernel(a, b);
            out(r, c) = acc;
        }
    }
    return out;
}

Tensor2 convolve(const Tensor2& map, const Tensor2& kernel) {
    // out(r,c) = sum_{a,b} map(r+a, c+b) * kernel(k-1-a, k-1-b)
    const int k = kernel.rows;
    Tensor2 out(map.rows - k + 1, map.cols - k + 1);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double acc = 0.0;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    acc += map(r + a, c + b) * kernel(k - 1 - a, k - 1 - b);
            out(r, c) = acc;
        }
    return out;
}

Tensor2 full_cross_correlate(const Tensor2& map, const Tensor2& kernel) {
    const int k = kernel.rows;
    // pad by k-1 zeros on every side, then slide the unflipped kernel
    Tensor2 padded(map.rows + 2 * (k - 1), map.cols + 2 * (k - 1), 0.0);
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c)
            padded(r + k - 1, c + k - 1) = map(r, c);

    Tensor2 out(padded.rows - k + 1, padded.cols - k + 1);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double acc = 0.0;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    acc += padded(r + a, c + b) * kernel(a, b);
            out(r, c) = acc;
        }
    return out;
}

Tensor2 avg_downsample(const Tensor2& map, int scale) {
    Tensor2 out(map.rows / scale, map.cols / scale);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double acc = 0.0;
            for (int a = 0; a < scale; ++a)
                for (int b = 0; b < scale; ++b)
                    acc += map(r * scale + a, c * scale + b);
            out(r, c) = acc / (scale * scale);
        }
    return out;
}

Tensor2 upsample_uniform(const Tensor2& map, int scale, double gain) {
    Tensor2 out(map.rows * scale, map.cols * scale);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out(r, c) = map(r / scale, c / scale) * gain;
    return out;
}

Vec matvec_bias(const Tensor2& weights, const Vec& x, const Vec& bias) {
    Vec out(weights.rows, 0.0);
    for (int i = 0; i < weights.rows; ++i) {
        double acc = bias[i];
        for (int j = 0; j < weights.cols; ++j) acc += weights(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

Vec project_matrix(const std::vector<Vec>& basis, const Vec& x) {
    const std::size_t d = x.size();
    std::vector<Vec> projector(d, Vec(d, 0.0));
    for (const Vec& b : basis)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                projector[i][j] += b[i] * b[j];
    Vec out(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i] += projector[i][j] * x[j];
    return out;
}

} // namespace msnn::ref
