#pragma once

#include <string>

#include "rgsvae/tensor.hpp"

namespace rgsvae {

/// Binary PGM (P5, maxval 255). Entries must be in [0, 1]; quantization is
/// round half up: byte = floor(v * 255 + 0.5).
void write_pgm(const Tensor& image, const std::string& path);

/// Arranges n column-images (each img_rows x img_cols, stored as columns of
/// probs) into a near-square grid, row-major, unused cells black.
Tensor tile_sheet(const Tensor& probs, int64_t img_rows, int64_t img_cols);

/// One column of probs reshaped to img_rows x img_cols (row-major).
Tensor column_image(const Tensor& probs, int64_t col, int64_t img_rows,
                    int64_t img_cols);

}  // namespace rgsvae
