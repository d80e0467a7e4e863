#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgsvae/graph.hpp"
#include "rgsvae/params.hpp"
#include "rgsvae/rng.hpp"

namespace rgsvae {

/// Architecture of the hierarchy: layer widths listed top to bottom
/// (d0 ... dL), observation dimensionality and the init seed.
struct ModelSpec {
  std::vector<int64_t> layer_widths;
  int64_t data_dim = 0;
  uint64_t seed = 0;

  /// Number of recursive levels L; layer_widths has L + 1 entries.
  int levels() const { return static_cast<int>(layer_widths.size()) - 1; }
  int64_t width(int j) const { return layer_widths[static_cast<size_t>(j)]; }
  /// Width of the level feeding level j from below in the upward pass
  /// (data_dim at the bottom).
  int64_t width_below(int j) const {
    return j == levels() ? data_dim : layer_widths[static_cast<size_t>(j) + 1];
  }
  void validate() const;
};

/// Log-sigma pre-activations are clamped to this band before exp.
inline constexpr double kLogSigmaClamp = 5.0;

// Parameter / batch-norm site naming. Generative layers run j = 1..L,
// encoder layers j = 0..L.
namespace names {
std::string gen_w_mu(int j);
std::string gen_b_mu(int j);
std::string gen_w_sigma(int j);
std::string gen_b_sigma(int j);
std::string enc_w_mu(int j);
std::string enc_b_mu(int j);
std::string enc_w_sigma(int j);
std::string enc_b_sigma(int j);
inline const char* top_mu = "gen.mu0";
inline const char* dec_w = "dec.w";
inline const char* dec_b = "dec.b";
/// Batch-norm site identifiers; parameters are site + ".gain"/".shift",
/// running statistics are site + ".mean"/".var".
std::string bn_gen(int j, bool sigma_side);
std::string bn_enc(int j, bool sigma_side);
}  // namespace names

/// Freshly initialized parameters: weights N(0, 1/fan_in), biases zero,
/// top-level mean zero, batch-norm gain 1 / shift 0.
TensorMap init_params(const ModelSpec& spec);
/// Batch-norm running statistics, mean 0 / var 1 per site.
TensorMap init_bn_stats(const ModelSpec& spec);

enum class PassMode {
  kTrain,  // batch statistics, running averages updated
  kEval,   // running statistics
  kOff,    // batch normalization bypassed (raw recursion)
};

/// Everything a forward builder needs: the graph, bound parameters, the
/// batch-norm statistics (updated in place in train mode) and the mode.
struct PassContext {
  Graph* g = nullptr;
  const Binding* params = nullptr;
  TensorMap* bn_stats = nullptr;
  PassMode mode = PassMode::kEval;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;
};

/// Batch normalization at a named site. Train mode normalizes by batch
/// statistics and folds them into the running averages; eval mode uses the
/// running statistics.
DiffValue bn_site(PassContext& ctx, const std::string& site, DiffValue pre);

/// Conditional prior parameters of level j >= 1 given the sampled features
/// of the level above: mu = BN(b + W z), sigma = exp(clamp(BN(b' + W' z))).
std::pair<DiffValue, DiffValue> prior_params(PassContext& ctx, int j,
                                             DiffValue z_prev);

/// Bernoulli logits of the decoder; no batch normalization at this site.
DiffValue decode_logits(PassContext& ctx, DiffValue z_bottom);

/// Per-pixel Bernoulli log-likelihood terms, computed as
/// -softplus((1 - 2x) * logit). x must be binary.
DiffValue bernoulli_loglik_elems(Graph& g, const Tensor& x, DiffValue logits);

/// Ancestral draws from the generative model, n per call (columns).
/// Batch-norm sites use running statistics.
struct AncestralSample {
  std::vector<Tensor> z;              // one [d_j x n] tensor per layer
  Tensor x_probs;                     // [data_dim x n] pixel probabilities
  std::vector<double> expected_zero;  // mean analytic P(z=0) per layer
};
AncestralSample ancestral_sample(const ModelSpec& spec, const TensorMap& params,
                                 const TensorMap& bn_stats, double bn_eps,
                                 int64_t n, CounterRng& rng);

}  // namespace rgsvae
