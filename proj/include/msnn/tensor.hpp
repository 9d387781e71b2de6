#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "msnn/error.hpp"

namespace msnn {

using Vec = std::vector<double>;

/// Dense row-major 2-D array of doubles.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    Vec v; // rows*cols, row-major

    Tensor2() = default;

    Tensor2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {
        if (r <= 0 || c <= 0)
            throw DimensionError("Tensor2: non-positive shape");
    }

    Tensor2(int r, int c, Vec values) : rows(r), cols(c), v(std::move(values)) {
        if (r <= 0 || c <= 0 || v.size() != static_cast<std::size_t>(r) * c)
            throw DimensionError("Tensor2: values length does not match shape");
    }

    double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    int size() const { return rows * cols; }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

inline Tensor2 flip2(const Tensor2& t) {
    Tensor2 out(t.rows, t.cols);
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < t.cols; ++c)
            out(r, c) = t(t.rows - 1 - r, t.cols - 1 - c);
    return out;
}

inline Tensor2 reshape(const Vec& x, int rows, int cols) {
    if (x.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("reshape: length does not match target shape");
    return Tensor2(rows, cols, x);
}

inline bool all_finite(const Vec& x) {
    for (double a : x)
        if (!std::isfinite(a)) return false;
    return true;
}

inline bool all_finite(const Tensor2& t) { return all_finite(t.v); }

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double sum(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s;
}

inline double sum(const Tensor2& t) { return sum(t.v); }

} // namespace msnn
