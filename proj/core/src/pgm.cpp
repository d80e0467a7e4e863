#include "rgsvae/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rgsvae {

void write_pgm(const Tensor& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write PGM file: " + path);
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (int64_t i = 0; i < image.rows(); ++i) {
    for (int64_t j = 0; j < image.cols(); ++j) {
      const double v = image(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error("write_pgm: entry " + std::to_string(v) +
                                " outside [0, 1]");
      }
      const auto byte = static_cast<uint8_t>(std::floor(v * 255.0 + 0.5));
      out.put(static_cast<char>(byte));
    }
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

Tensor column_image(const Tensor& probs, int64_t col, int64_t img_rows,
                    int64_t img_cols) {
  if (img_rows * img_cols != probs.rows()) {
    throw shape_error("column_image: geometry does not match column length");
  }
  Tensor img = Tensor::matrix(img_rows, img_cols);
  for (int64_t r = 0; r < img_rows; ++r) {
    for (int64_t c = 0; c < img_cols; ++c) {
      img(r, c) = probs(r * img_cols + c, col);
    }
  }
  return img;
}

Tensor tile_sheet(const Tensor& probs, int64_t img_rows, int64_t img_cols) {
  const int64_t n = probs.cols();
  const auto grid_cols = static_cast<int64_t>(
      std::ceil(std::sqrt(static_cast<double>(n))));
  const int64_t grid_rows = (n + grid_cols - 1) / grid_cols;
  Tensor sheet = Tensor::matrix(grid_rows * img_rows, grid_cols * img_cols);
  for (int64_t k = 0; k < n; ++k) {
    const int64_t gr = k / grid_cols;
    const int64_t gc = k % grid_cols;
    const Tensor img = column_image(probs, k, img_rows, img_cols);
    for (int64_t r = 0; r < img_rows; ++r) {
      for (int64_t c = 0; c < img_cols; ++c) {
        sheet(gr * img_rows + r, gc * img_cols + c) = img(r, c);
      }
    }
  }
  return sheet;
}

}  // namespace rgsvae
