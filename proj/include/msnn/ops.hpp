#pragma once

#include <vector>

#include "msnn/tensor.hpp"

namespace msnn {

/// One receptive-field window copied out of a map.
struct Patch {
    int row = 0; // top-left corner
    int col = 0;
    Vec values; // field_side * field_side, row-major
};

/// All field_side x field_side windows of `map` at the given stride,
/// enumerated in row-major order of their top-left corner.
std::vector<Patch> extract_patches(const Tensor2& map, int field_side, int stride);

/// Subtract the arithmetic mean from every element.
Vec demean(const Vec& p);
void demean_inplace(Vec& p);

/// Sliding inner product of each (optionally demeaned) window with the
/// kernel; the kernel is not flipped. Output is (rows-k+1) x (cols-k+1).
Tensor2 valid_cross_correlate(const Tensor2& map, const Tensor2& kernel, bool demean_windows);

/// Correlation of one map against a whole kernel bank; each window is read
/// and demeaned once. Element-for-element equal to calling
/// valid_cross_correlate per kernel.
std::vector<Tensor2> valid_cross_correlate_multi(const Tensor2& map,
                                                 const std::vector<Tensor2>& kernels,
                                                 bool demean_windows);

/// Correlation with the kernel flipped in both axes.
Tensor2 valid_convolve(const Tensor2& map, const Tensor2& kernel);

/// Cross-correlation with the map zero-padded by k-1 on every side, so the
/// kernel slides over every overlap position. Output is (rows+k-1) x (cols+k-1).
Tensor2 full_cross_correlate(const Tensor2& map, const Tensor2& kernel);

/// Mean over non-overlapping scale x scale windows. Dimensions must divide.
Tensor2 avg_downsample(const Tensor2& map, int scale);

/// Replicate each unit into a scale x scale tile, multiplied by gain.
Tensor2 upsample_uniform(const Tensor2& map, int scale, double gain);

/// Orthonormalize in order; spans the same space. Throws DegeneracyError
/// (with the offending index) when a vector's residual norm falls below 1e-10.
std::vector<Vec> gram_schmidt(const std::vector<Vec>& vectors);
void gram_schmidt_inplace(std::vector<Vec>& vectors);

} // namespace msnn
