#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msnn/tensor.hpp"

namespace msnn {

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major
};

/// Binary (P5) reader; maxval up to 255.
PgmImage read_pgm(const std::string& path);

void write_pgm(const std::string& path, const PgmImage& img);

/// Linear rescale of a map to [0,255] using its own min/max. A constant
/// map renders as mid-gray (128). Returns the image plus the (min, max)
/// used, for the sidecar scale record.
struct RescaledMap {
    PgmImage image;
    double lo = 0.0;
    double hi = 0.0;
};
RescaledMap rescale_to_bytes(const Tensor2& map);

} // namespace msnn
