#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgsvae {

/// Dense row-major array of doubles, rank 0 (scalar), 1 (column vector)
/// or 2 (matrix). A rank-1 tensor of length d behaves as a d x 1 matrix.
class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(double v);
  static Tensor vector(int64_t d, double fill = 0.0);
  static Tensor matrix(int64_t rows, int64_t cols, double fill = 0.0);

  int rank() const { return rank_; }
  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }

  double& operator()(int64_t r, int64_t c) { return data_[r * cols_ + c]; }
  double operator()(int64_t r, int64_t c) const { return data_[r * cols_ + c]; }
  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  std::string shape_str() const;

  void fill(double v);
  void add_inplace(const Tensor& o);  // this += o, shapes must match
  bool all_finite() const;

  /// C = A * B. Inner dimensions must agree; fails fast otherwise.
  static Tensor matmul(const Tensor& a, const Tensor& b);
  /// C = A^T * B.
  static Tensor matmul_tn(const Tensor& a, const Tensor& b);
  /// C = A * B^T.
  static Tensor matmul_nt(const Tensor& a, const Tensor& b);

 private:
  Tensor(int rank, int64_t rows, int64_t cols, double fill);

  int rank_ = 0;
  int64_t rows_ = 1;
  int64_t cols_ = 1;
  std::vector<double> data_ = {0.0};
};

/// Thrown on shape or domain contract violations in tensor/graph code.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace rgsvae
