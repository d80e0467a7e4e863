#include "rgsvae/adamax.hpp"

#include <cmath>
#include <stdexcept>

namespace rgsvae {

AdamaxState AdamaxState::zeros_like(const TensorMap& params) {
  AdamaxState s;
  for (const auto& [name, t] : params) {
    Tensor z = t;
    z.fill(0.0);
    s.m.insert(name, z);
    s.u.insert(name, std::move(z));
  }
  return s;
}

void adamax_step(TensorMap& params, const TensorMap& grads, AdamaxState& state,
                 const AdamaxConfig& cfg) {
  state.t += 1;
  const double step = cfg.alpha / (1.0 - std::pow(cfg.beta1, state.t));
  for (auto& [name, theta] : params) {
    const Tensor& g = grads.at(name);
    if (!g.same_shape(theta)) {
      throw shape_error("adamax_step: gradient for '" + name +
                        "' has shape " + g.shape_str() + ", parameter is " +
                        theta.shape_str());
    }
    Tensor& m = state.m.at(name);
    Tensor& u = state.u.at(name);
    for (int64_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      u[i] = std::max(cfg.beta2 * u[i], std::abs(g[i]));
      if (u[i] != 0.0) theta[i] -= step * (m[i] / u[i]);
    }
  }
}

}  // namespace rgsvae
