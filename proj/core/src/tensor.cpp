#include "rgsvae/tensor.hpp"

#include <cmath>

namespace rgsvae {

Tensor::Tensor(int rank, int64_t rows, int64_t cols, double fill)
    : rank_(rank), rows_(rows), cols_(cols),
      data_(static_cast<size_t>(rows * cols), fill) {
  if (rows < 1 || cols < 1) {
    throw shape_error("tensor dimensions must be >= 1, got " + shape_str());
  }
}

Tensor Tensor::scalar(double v) { return Tensor(0, 1, 1, v); }

Tensor Tensor::vector(int64_t d, double fill) { return Tensor(1, d, 1, fill); }

Tensor Tensor::matrix(int64_t rows, int64_t cols, double fill) {
  return Tensor(2, rows, cols, fill);
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) +
         " rank " + std::to_string(rank_) + "]";
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

void Tensor::add_inplace(const Tensor& o) {
  if (!same_shape(o)) {
    throw shape_error("add_inplace shape mismatch: " + shape_str() + " vs " +
                      o.shape_str());
  }
  for (int64_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Tensor Tensor::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw shape_error("matmul inner dimension mismatch: " + a.shape_str() +
                      " * " + b.shape_str());
  }
  Tensor c = (b.cols() == 1 && b.rank() <= 1) ? Tensor::vector(a.rows())
                                              : Tensor::matrix(a.rows(), b.cols());
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      for (int64_t j = 0; j < n; ++j) c(i, j) += aip * b(p, j);
    }
  }
  return c;
}

Tensor Tensor::matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw shape_error("matmul_tn dimension mismatch: " + a.shape_str() +
                      "^T * " + b.shape_str());
  }
  Tensor c = Tensor::matrix(a.cols(), b.cols());
  const int64_t m = a.cols(), k = a.rows(), n = b.cols();
  for (int64_t p = 0; p < k; ++p) {
    for (int64_t i = 0; i < m; ++i) {
      const double api = a(p, i);
      for (int64_t j = 0; j < n; ++j) c(i, j) += api * b(p, j);
    }
  }
  return c;
}

Tensor Tensor::matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw shape_error("matmul_nt dimension mismatch: " + a.shape_str() +
                      " * " + b.shape_str() + "^T");
  }
  Tensor c = Tensor::matrix(a.rows(), b.rows());
  const int64_t m = a.rows(), k = a.cols(), n = b.rows();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      for (int64_t j = 0; j < n; ++j) c(i, j) += aip * b(j, p);
    }
  }
  return c;
}

}  // namespace rgsvae
