#pragma once

#include <functional>
#include <vector>

#include "rgsvae/tensor.hpp"

namespace rgsvae {

class Graph;

/// Handle to one node of a computation graph: a value tensor plus the
/// gradient accumulated for it by backward sweeps.
struct DiffValue {
  Graph* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr; }
  const Tensor& value() const;
  const Tensor& grad() const;
};

/// Define-by-run reverse-mode tape over rank <= 2 tensors. Creation order is
/// a topological order, so a backward sweep is a single reverse walk that
/// visits every node exactly once. All gradient accumulation happens in a
/// fixed operand order; sweeps are bit-reproducible.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Gradient-tracked leaf (parameters).
  DiffValue leaf(Tensor v);
  /// Untracked input (data, noise). Gradients are still propagated through
  /// it but callers have no reason to read them.
  DiffValue constant(Tensor v);

  // Linear algebra.
  DiffValue matmul(DiffValue a, DiffValue b);
  /// X + b broadcast across columns; b is m x 1.
  DiffValue add_cols(DiffValue x, DiffValue b);
  /// v repeated as n identical columns; v is m x 1.
  DiffValue tile_cols(DiffValue v, int64_t n);

  // Same-shape elementwise binaries.
  DiffValue add(DiffValue a, DiffValue b);
  DiffValue sub(DiffValue a, DiffValue b);
  DiffValue mul(DiffValue a, DiffValue b);
  DiffValue div(DiffValue a, DiffValue b);

  // Elementwise unaries.
  DiffValue neg(DiffValue x);
  DiffValue exp(DiffValue x);
  DiffValue log(DiffValue x);  // domain error on nonpositive entries
  DiffValue sqrt(DiffValue x);
  DiffValue square(DiffValue x);
  DiffValue reciprocal(DiffValue x);
  DiffValue sigmoid(DiffValue x);
  DiffValue softplus(DiffValue x);
  /// max(x, 0); derivative at the kink is 0, matching the sampler.
  DiffValue max0(DiffValue x);
  DiffValue clamp(DiffValue x, double lo, double hi);
  DiffValue scale(DiffValue x, double c);
  DiffValue add_scalar(DiffValue x, double c);
  DiffValue normal_cdf(DiffValue x);
  DiffValue normal_log_cdf(DiffValue x);
  DiffValue normal_pdf(DiffValue x);
  /// Hazard lambda(x) = phi(x) / (1 - Phi(x)).
  DiffValue inv_mills(DiffValue x);
  /// Snaps values in (-1e-12, 0) to exactly 0; derivative is 1.
  DiffValue snap_nonneg(DiffValue x);

  /// Full reduction to a 1x1 scalar.
  DiffValue sum(DiffValue x);

  /// Batch normalization over columns (train mode): per-row batch mean and
  /// biased variance, then gain/shift. Requires >= 2 columns. The batch
  /// statistics used are written to *batch_mean / *batch_var.
  DiffValue batchnorm_train(DiffValue x, DiffValue gain, DiffValue shift,
                            double eps, Tensor* batch_mean, Tensor* batch_var);
  /// Batch normalization with fixed (running) statistics; differentiable in
  /// x, gain and shift.
  DiffValue batchnorm_eval(DiffValue x, DiffValue gain, DiffValue shift,
                           const Tensor& mean, const Tensor& var, double eps);

  /// Reverse sweep from a scalar root. Buffers one adjoint per node, then
  /// adds the sweep's result into each node's persistent grad, so repeated
  /// calls accumulate.
  void backward(DiffValue root);
  void zero_grad();

  size_t size() const { return nodes_.size(); }
  const Tensor& value_of(int id) const { return nodes_[id].val; }
  const Tensor& grad_of(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Graph&)> back;  // empty for leaves/constants
  };

  friend struct DiffValue;

  DiffValue push(Tensor val, std::function<void(Graph&)> back);
  Tensor& adj(int id) { return adjoints_[id]; }
  static void check_same_shape(const Tensor& a, const Tensor& b,
                               const char* op);

  std::vector<Node> nodes_;
  std::vector<Tensor> adjoints_;  // live only during backward
  int sweep_id_ = -1;             // node whose back() is currently running
};

}  // namespace rgsvae
