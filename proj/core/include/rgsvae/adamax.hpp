#pragma once

#include <cstdint>

#include "rgsvae/params.hpp"

namespace rgsvae {

struct AdamaxConfig {
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// First moment m, infinity-norm moment u and step counter of the Adamax
/// update. One moment tensor per parameter, keyed like the parameter store.
struct AdamaxState {
  TensorMap m;
  TensorMap u;
  int64_t t = 0;

  static AdamaxState zeros_like(const TensorMap& params);
};

/// One Adamax step over every parameter:
///   m <- b1 m + (1 - b1) g,  u <- max(b2 u, |g|),
///   theta <- theta - alpha / (1 - b1^t) * m / u   (0 where u == 0).
/// grads must cover every parameter with matching shapes.
void adamax_step(TensorMap& params, const TensorMap& grads, AdamaxState& state,
                 const AdamaxConfig& cfg);

}  // namespace rgsvae
