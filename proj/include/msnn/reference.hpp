#pragma once

#include <vector>

#include "msnn/tensor.hpp"

// Serial reference implementations, written as the plainest possible
// nested loops straight from the definitions. They share no code with the
// kernels in ops.cpp and exist as the ground truth for tests and as the
// baseline for the kernel benchmarks. Do not optimize.
namespace msnn::ref {

struct RefPatch {
    int row;
    int col;
    Vec values;
};

std::vector<RefPatch> extract_patches(const Tensor2& map, int field_side, int stride);

Vec demean(const Vec& p);

Tensor2 cross_correlate(const Tensor2& map, const Tensor2& kernel, bool demean_windows);

Tensor2 convolve(const Tensor2& map, const Tensor2& kernel);

Tensor2 full_cross_correlate(const Tensor2& map, const Tensor2& kernel);

Tensor2 avg_downsample(const Tensor2& map, int scale);

Tensor2 upsample_uniform(const Tensor2& map, int scale, double gain);

/// W(out x in) * x + b, one explicit loop nest.
Vec matvec_bias(const Tensor2& weights, const Vec& x, const Vec& bias);

/// Projection of x onto span(basis) via the explicit projector matrix
/// P = sum_h b_h b_h^T; an independent route to the subspace reconstruction.
Vec project_matrix(const std::vector<Vec>& basis, const Vec& x);

} // namespace msnn::ref
