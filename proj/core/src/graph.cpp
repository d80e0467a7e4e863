#include "rgsvae/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "rgsvae/special_math.hpp"

namespace rgsvae {

const Tensor& DiffValue::value() const { return g->value_of(id); }
const Tensor& DiffValue::grad() const { return g->grad_of(id); }

void Graph::check_same_shape(const Tensor& a, const Tensor& b,
                             const char* op) {
  if (!a.same_shape(b)) {
    throw shape_error(std::string(op) + ": shape mismatch " + a.shape_str() +
                      " vs " + b.shape_str());
  }
}

DiffValue Graph::push(Tensor val, std::function<void(Graph&)> back) {
  Node n;
  n.grad = val;
  n.grad.fill(0.0);
  n.val = std::move(val);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return DiffValue{this, static_cast<int>(nodes_.size() - 1)};
}

DiffValue Graph::leaf(Tensor v) { return push(std::move(v), nullptr); }
DiffValue Graph::constant(Tensor v) { return push(std::move(v), nullptr); }

DiffValue Graph::matmul(DiffValue a, DiffValue b) {
  Tensor out = Tensor::matmul(a.value(), b.value());
  const int ia = a.id, ib = b.id;
  return push(std::move(out), [ia, ib](Graph& g) {
    const int self = g.sweep_id_;
    const Tensor& gout = g.adj(self);
    g.adj(ia).add_inplace(Tensor::matmul_nt(gout, g.nodes_[ib].val));
    g.adj(ib).add_inplace(Tensor::matmul_tn(g.nodes_[ia].val, gout));
  });
}

DiffValue Graph::add_cols(DiffValue x, DiffValue b) {
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (bv.cols() != 1 || bv.rows() != xv.rows()) {
    throw shape_error("add_cols: bias " + bv.shape_str() +
                      " does not match " + xv.shape_str());
  }
  Tensor out = xv;
  for (int64_t i = 0; i < out.rows(); ++i) {
    for (int64_t j = 0; j < out.cols(); ++j) out(i, j) += bv[i];
  }
  const int ix = x.id, ib = b.id;
  return push(std::move(out), [ix, ib](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    g.adj(ix).add_inplace(gout);
    Tensor& gb = g.adj(ib);
    for (int64_t i = 0; i < gout.rows(); ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < gout.cols(); ++j) s += gout(i, j);
      gb[i] += s;
    }
  });
}

DiffValue Graph::tile_cols(DiffValue v, int64_t n) {
  const Tensor& vv = v.value();
  if (vv.cols() != 1) {
    throw shape_error("tile_cols: expected column vector, got " +
                      vv.shape_str());
  }
  Tensor out = Tensor::matrix(vv.rows(), n);
  for (int64_t i = 0; i < vv.rows(); ++i) {
    for (int64_t j = 0; j < n; ++j) out(i, j) = vv[i];
  }
  const int iv = v.id;
  return push(std::move(out), [iv](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    Tensor& gv = g.adj(iv);
    for (int64_t i = 0; i < gout.rows(); ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < gout.cols(); ++j) s += gout(i, j);
      gv[i] += s;
    }
  });
}

namespace {

// Stable scalar kernels shared by forward and backward lambdas.
inline double sigmoid_kernel(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_kernel(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

#define RGSVAE_BINARY_OP(NAME, FWD_EXPR, BACK_BODY)                          \
  DiffValue Graph::NAME(DiffValue a, DiffValue b) {                          \
    check_same_shape(a.value(), b.value(), #NAME);                           \
    const Tensor& av = a.value();                                            \
    const Tensor& bv = b.value();                                            \
    Tensor out = av;                                                         \
    for (int64_t i = 0; i < out.size(); ++i) {                               \
      const double x = av[i], y = bv[i];                                     \
      out[i] = (FWD_EXPR);                                                   \
    }                                                                        \
    const int ia = a.id, ib = b.id;                                          \
    return push(std::move(out), [ia, ib](Graph& g) {                         \
      const int self = g.sweep_id_;                                          \
      const Tensor& gout = g.adj(self);                                      \
      const Tensor& av_ = g.nodes_[ia].val;                                  \
      const Tensor& bv_ = g.nodes_[ib].val;                                  \
      Tensor& ga = g.adj(ia);                                                \
      Tensor& gb = g.adj(ib);                                                \
      for (int64_t i = 0; i < gout.size(); ++i) {                            \
        const double go = gout[i], x = av_[i], y = bv_[i];                   \
        (void)x;                                                             \
        (void)y;                                                             \
        BACK_BODY                                                            \
      }                                                                      \
    });                                                                      \
  }

RGSVAE_BINARY_OP(add, x + y, {
  ga[i] += go;
  gb[i] += go;
})
RGSVAE_BINARY_OP(sub, x - y, {
  ga[i] += go;
  gb[i] -= go;
})
RGSVAE_BINARY_OP(mul, x * y, {
  ga[i] += go * y;
  gb[i] += go * x;
})
RGSVAE_BINARY_OP(div, x / y, {
  ga[i] += go / y;
  gb[i] -= go * x / (y * y);
})

#undef RGSVAE_BINARY_OP

// Unary elementwise op: FWD_EXPR computes out from x; BACK_EXPR computes the
// local derivative from x (input) and v (output).
#define RGSVAE_UNARY_OP(NAME, FWD_EXPR, BACK_EXPR)                           \
  DiffValue Graph::NAME(DiffValue a) {                                       \
    const Tensor& av = a.value();                                            \
    Tensor out = av;                                                         \
    for (int64_t i = 0; i < out.size(); ++i) {                               \
      const double x = av[i];                                                \
      out[i] = (FWD_EXPR);                                                   \
    }                                                                        \
    const int ia = a.id;                                                     \
    return push(std::move(out), [ia](Graph& g) {                             \
      const int self = g.sweep_id_;                                          \
      const Tensor& gout = g.adj(self);                                      \
      const Tensor& av_ = g.nodes_[ia].val;                                  \
      const Tensor& ov_ = g.nodes_[self].val;                                \
      Tensor& ga = g.adj(ia);                                                \
      for (int64_t i = 0; i < gout.size(); ++i) {                            \
        const double x = av_[i], v = ov_[i];                                 \
        (void)x;                                                             \
        (void)v;                                                             \
        ga[i] += gout[i] * (BACK_EXPR);                                      \
      }                                                                      \
    });                                                                      \
  }

RGSVAE_UNARY_OP(neg, -x, -1.0)
RGSVAE_UNARY_OP(exp, std::exp(x), v)
RGSVAE_UNARY_OP(sqrt, std::sqrt(x), 0.5 / v)
RGSVAE_UNARY_OP(square, x * x, 2.0 * x)
RGSVAE_UNARY_OP(reciprocal, 1.0 / x, -v * v)
RGSVAE_UNARY_OP(sigmoid, sigmoid_kernel(x), v * (1.0 - v))
RGSVAE_UNARY_OP(softplus, softplus_kernel(x), sigmoid_kernel(x))
RGSVAE_UNARY_OP(max0, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0)
RGSVAE_UNARY_OP(normal_cdf, std_normal_cdf(x), std_normal_pdf(x))
RGSVAE_UNARY_OP(normal_log_cdf, std_normal_log_cdf(x),
                std::exp(std_normal_log_pdf(x) - v))
RGSVAE_UNARY_OP(normal_pdf, std_normal_pdf(x), -x * v)
RGSVAE_UNARY_OP(inv_mills, rgsvae::inv_mills(x), v * (v - x))
RGSVAE_UNARY_OP(snap_nonneg, (x < 0.0 && x > -1e-12) ? 0.0 : x, 1.0)

#undef RGSVAE_UNARY_OP

DiffValue Graph::log(DiffValue a) {
  const Tensor& av = a.value();
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) {
    if (!(av[i] > 0.0)) {
      throw std::domain_error("log: nonpositive entry " +
                              std::to_string(av[i]));
    }
    out[i] = std::log(av[i]);
  }
  const int ia = a.id;
  return push(std::move(out), [ia](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    const Tensor& av_ = g.nodes_[ia].val;
    Tensor& ga = g.adj(ia);
    for (int64_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] / av_[i];
  });
}

DiffValue Graph::clamp(DiffValue a, double lo, double hi) {
  const Tensor& av = a.value();
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(std::max(av[i], lo), hi);
  }
  const int ia = a.id;
  return push(std::move(out), [ia, lo, hi](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    const Tensor& av_ = g.nodes_[ia].val;
    Tensor& ga = g.adj(ia);
    for (int64_t i = 0; i < gout.size(); ++i) {
      if (av_[i] > lo && av_[i] < hi) ga[i] += gout[i];
    }
  });
}

DiffValue Graph::scale(DiffValue a, double c) {
  const Tensor& av = a.value();
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  const int ia = a.id;
  return push(std::move(out), [ia, c](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    Tensor& ga = g.adj(ia);
    for (int64_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] * c;
  });
}

DiffValue Graph::add_scalar(DiffValue a, double c) {
  const Tensor& av = a.value();
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  const int ia = a.id;
  return push(std::move(out), [ia](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    g.adj(ia).add_inplace(gout);
  });
}

DiffValue Graph::sum(DiffValue a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (int64_t i = 0; i < av.size(); ++i) s += av[i];
  const int ia = a.id;
  return push(Tensor::scalar(s), [ia](Graph& g) {
    const double go = g.adj(g.sweep_id_)[0];
    Tensor& ga = g.adj(ia);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += go;
  });
}

DiffValue Graph::batchnorm_train(DiffValue x, DiffValue gain, DiffValue shift,
                                 double eps, Tensor* batch_mean,
                                 Tensor* batch_var) {
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& sv = shift.value();
  const int64_t m = xv.rows(), n = xv.cols();
  if (n < 2) {
    throw std::invalid_argument(
        "batchnorm_train: needs a batch of >= 2, got " + std::to_string(n));
  }
  if (gv.rows() != m || sv.rows() != m || gv.cols() != 1 || sv.cols() != 1) {
    throw shape_error("batchnorm_train: gain/shift must be " +
                      std::to_string(m) + "x1");
  }

  Tensor mean = Tensor::vector(m);
  Tensor var = Tensor::vector(m);
  Tensor inv_std = Tensor::vector(m);
  Tensor xhat = Tensor::matrix(m, n);
  Tensor out = Tensor::matrix(m, n);
  for (int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) s += xv(i, j);
    mean[i] = s / static_cast<double>(n);
    double v = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      const double d = xv(i, j) - mean[i];
      v += d * d;
    }
    var[i] = v / static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var[i] + eps);
    for (int64_t j = 0; j < n; ++j) {
      xhat(i, j) = (xv(i, j) - mean[i]) * inv_std[i];
      out(i, j) = gv[i] * xhat(i, j) + sv[i];
    }
  }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;

  const int ix = x.id, ig = gain.id, is = shift.id;
  return push(std::move(out),
              [ix, ig, is, xhat, inv_std](Graph& g) {
                const Tensor& gout = g.adj(g.sweep_id_);
                const Tensor& gainv = g.nodes_[ig].val;
                Tensor& gx = g.adj(ix);
                Tensor& gg = g.adj(ig);
                Tensor& gs = g.adj(is);
                const int64_t m = gout.rows(), n = gout.cols();
                const double dn = static_cast<double>(n);
                for (int64_t i = 0; i < m; ++i) {
                  double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                  double dgain = 0.0, dshift = 0.0;
                  for (int64_t j = 0; j < n; ++j) {
                    const double dxhat = gout(i, j) * gainv[i];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat(i, j);
                    dgain += gout(i, j) * xhat(i, j);
                    dshift += gout(i, j);
                  }
                  for (int64_t j = 0; j < n; ++j) {
                    const double dxhat = gout(i, j) * gainv[i];
                    gx(i, j) += inv_std[i] / dn *
                                (dn * dxhat - sum_dxhat -
                                 xhat(i, j) * sum_dxhat_xhat);
                  }
                  gg[i] += dgain;
                  gs[i] += dshift;
                }
              });
}

DiffValue Graph::batchnorm_eval(DiffValue x, DiffValue gain, DiffValue shift,
                                const Tensor& mean, const Tensor& var,
                                double eps) {
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& sv = shift.value();
  const int64_t m = xv.rows(), n = xv.cols();
  if (gv.rows() != m || sv.rows() != m || mean.rows() != m || var.rows() != m) {
    throw shape_error("batchnorm_eval: parameter/stat shape mismatch");
  }
  Tensor inv_std = Tensor::vector(m);
  for (int64_t i = 0; i < m; ++i) inv_std[i] = 1.0 / std::sqrt(var[i] + eps);
  Tensor xhat = Tensor::matrix(m, n);
  Tensor out = Tensor::matrix(m, n);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      xhat(i, j) = (xv(i, j) - mean[i]) * inv_std[i];
      out(i, j) = gv[i] * xhat(i, j) + sv[i];
    }
  }
  const int ix = x.id, ig = gain.id, is = shift.id;
  return push(std::move(out), [ix, ig, is, xhat, inv_std](Graph& g) {
    const Tensor& gout = g.adj(g.sweep_id_);
    const Tensor& gainv = g.nodes_[ig].val;
    Tensor& gx = g.adj(ix);
    Tensor& gg = g.adj(ig);
    Tensor& gs = g.adj(is);
    for (int64_t i = 0; i < gout.rows(); ++i) {
      double dgain = 0.0, dshift = 0.0;
      for (int64_t j = 0; j < gout.cols(); ++j) {
        gx(i, j) += gout(i, j) * gainv[i] * inv_std[i];
        dgain += gout(i, j) * xhat(i, j);
        dshift += gout(i, j);
      }
      gg[i] += dgain;
      gs[i] += dshift;
    }
  });
}

void Graph::backward(DiffValue root) {
  if (root.g != this) {
    throw std::logic_error("backward: root belongs to another graph");
  }
  if (root.value().size() != 1) {
    throw std::logic_error("backward: root must be scalar, got " +
                           root.value().shape_str());
  }
  adjoints_.clear();
  adjoints_.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    Tensor z = n.val;
    z.fill(0.0);
    adjoints_.push_back(std::move(z));
  }
  adjoints_[root.id][0] = 1.0;
  for (int i = root.id; i >= 0; --i) {
    if (nodes_[i].back) {
      sweep_id_ = i;
      nodes_[i].back(*this);
    }
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].grad.add_inplace(adjoints_[i]);
  }
  adjoints_.clear();
}

void Graph::zero_grad() {
  for (Node& n : nodes_) n.grad.fill(0.0);
}

}  // namespace rgsvae
