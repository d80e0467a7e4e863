#include "rgsvae/model.hpp"

#include <cmath>
#include <stdexcept>

#include "rgsvae/special_math.hpp"

namespace rgsvae {

void ModelSpec::validate() const {
  if (layer_widths.empty()) {
    throw std::invalid_argument("ModelSpec: needs at least one layer");
  }
  for (int64_t w : layer_widths) {
    if (w < 1) throw std::invalid_argument("ModelSpec: widths must be >= 1");
  }
  if (data_dim < 1) {
    throw std::invalid_argument("ModelSpec: data_dim must be >= 1");
  }
}

namespace names {
namespace {
std::string layered(const char* stem, int j, const char* leafname) {
  return std::string(stem) + std::to_string(j) + leafname;
}
}  // namespace

std::string gen_w_mu(int j) { return layered("gen.l", j, ".w_mu"); }
std::string gen_b_mu(int j) { return layered("gen.l", j, ".b_mu"); }
std::string gen_w_sigma(int j) { return layered("gen.l", j, ".w_sigma"); }
std::string gen_b_sigma(int j) { return layered("gen.l", j, ".b_sigma"); }
std::string enc_w_mu(int j) { return layered("enc.l", j, ".w_mu"); }
std::string enc_b_mu(int j) { return layered("enc.l", j, ".b_mu"); }
std::string enc_w_sigma(int j) { return layered("enc.l", j, ".w_sigma"); }
std::string enc_b_sigma(int j) { return layered("enc.l", j, ".b_sigma"); }

std::string bn_gen(int j, bool sigma_side) {
  return layered("bn.gen.l", j, sigma_side ? ".sigma" : ".mu");
}
std::string bn_enc(int j, bool sigma_side) {
  return layered("bn.enc.l", j, sigma_side ? ".sigma" : ".mu");
}
}  // namespace names

namespace {

Tensor gaussian_matrix(int64_t rows, int64_t cols, double sd, CounterRng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = sd * rng.next_normal();
  return t;
}

void add_bn_site(TensorMap& params, const std::string& site, int64_t d) {
  params.insert(site + ".gain", Tensor::vector(d, 1.0));
  params.insert(site + ".shift", Tensor::vector(d, 0.0));
}

void add_bn_stats(TensorMap& stats, const std::string& site, int64_t d) {
  stats.insert(site + ".mean", Tensor::vector(d, 0.0));
  stats.insert(site + ".var", Tensor::vector(d, 1.0));
}

}  // namespace

TensorMap init_params(const ModelSpec& spec) {
  spec.validate();
  CounterRng rng(derive_seed(spec.seed, "init"));
  const int L = spec.levels();
  TensorMap p;

  p.insert(names::top_mu, Tensor::vector(spec.width(0), 0.0));
  for (int j = 1; j <= L; ++j) {
    const int64_t dj = spec.width(j), dprev = spec.width(j - 1);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dprev));
    p.insert(names::gen_w_mu(j), gaussian_matrix(dj, dprev, sd, rng));
    p.insert(names::gen_b_mu(j), Tensor::vector(dj, 0.0));
    p.insert(names::gen_w_sigma(j), gaussian_matrix(dj, dprev, sd, rng));
    p.insert(names::gen_b_sigma(j), Tensor::vector(dj, 0.0));
    add_bn_site(p, names::bn_gen(j, false), dj);
    add_bn_site(p, names::bn_gen(j, true), dj);
  }
  {
    const int64_t dl = spec.width(L);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dl));
    p.insert(names::dec_w, gaussian_matrix(spec.data_dim, dl, sd, rng));
    p.insert(names::dec_b, Tensor::vector(spec.data_dim, 0.0));
  }
  for (int j = L; j >= 0; --j) {
    const int64_t dj = spec.width(j), dbelow = spec.width_below(j);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dbelow));
    p.insert(names::enc_w_mu(j), gaussian_matrix(dj, dbelow, sd, rng));
    p.insert(names::enc_b_mu(j), Tensor::vector(dj, 0.0));
    p.insert(names::enc_w_sigma(j), gaussian_matrix(dj, dbelow, sd, rng));
    p.insert(names::enc_b_sigma(j), Tensor::vector(dj, 0.0));
    add_bn_site(p, names::bn_enc(j, false), dj);
    add_bn_site(p, names::bn_enc(j, true), dj);
  }
  return p;
}

TensorMap init_bn_stats(const ModelSpec& spec) {
  spec.validate();
  const int L = spec.levels();
  TensorMap s;
  for (int j = 1; j <= L; ++j) {
    add_bn_stats(s, names::bn_gen(j, false), spec.width(j));
    add_bn_stats(s, names::bn_gen(j, true), spec.width(j));
  }
  for (int j = 0; j <= L; ++j) {
    add_bn_stats(s, names::bn_enc(j, false), spec.width(j));
    add_bn_stats(s, names::bn_enc(j, true), spec.width(j));
  }
  return s;
}

DiffValue bn_site(PassContext& ctx, const std::string& site, DiffValue pre) {
  if (ctx.mode == PassMode::kOff) return pre;
  Graph& g = *ctx.g;
  DiffValue gain = ctx.params->at(site + ".gain");
  DiffValue shift = ctx.params->at(site + ".shift");
  Tensor& mean = ctx.bn_stats->at(site + ".mean");
  Tensor& var = ctx.bn_stats->at(site + ".var");
  if (ctx.mode == PassMode::kEval) {
    return g.batchnorm_eval(pre, gain, shift, mean, var, ctx.bn_eps);
  }
  Tensor batch_mean, batch_var;
  DiffValue out =
      g.batchnorm_train(pre, gain, shift, ctx.bn_eps, &batch_mean, &batch_var);
  const double rho = ctx.bn_momentum;
  for (int64_t i = 0; i < mean.size(); ++i) {
    mean[i] = rho * mean[i] + (1.0 - rho) * batch_mean[i];
    var[i] = rho * var[i] + (1.0 - rho) * batch_var[i];
  }
  return out;
}

std::pair<DiffValue, DiffValue> prior_params(PassContext& ctx, int j,
                                             DiffValue z_prev) {
  Graph& g = *ctx.g;
  const Binding& b = *ctx.params;
  DiffValue pre_mu = g.add_cols(g.matmul(b.at(names::gen_w_mu(j)), z_prev),
                                b.at(names::gen_b_mu(j)));
  DiffValue mu = bn_site(ctx, names::bn_gen(j, false), pre_mu);
  DiffValue pre_ls = g.add_cols(g.matmul(b.at(names::gen_w_sigma(j)), z_prev),
                                b.at(names::gen_b_sigma(j)));
  DiffValue ls = bn_site(ctx, names::bn_gen(j, true), pre_ls);
  DiffValue sigma = g.exp(g.clamp(ls, -kLogSigmaClamp, kLogSigmaClamp));
  return {mu, sigma};
}

DiffValue decode_logits(PassContext& ctx, DiffValue z_bottom) {
  Graph& g = *ctx.g;
  return g.add_cols(g.matmul(ctx.params->at(names::dec_w), z_bottom),
                    ctx.params->at(names::dec_b));
}

DiffValue bernoulli_loglik_elems(Graph& g, const Tensor& x, DiffValue logits) {
  if (!x.same_shape(logits.value())) {
    throw shape_error("bernoulli_loglik: data " + x.shape_str() +
                      " vs logits " + logits.value().shape_str());
  }
  Tensor sign = x;
  for (int64_t i = 0; i < sign.size(); ++i) {
    if (x[i] != 0.0 && x[i] != 1.0) {
      throw std::domain_error("bernoulli_loglik: non-binary data entry " +
                              std::to_string(x[i]));
    }
    sign[i] = 1.0 - 2.0 * x[i];
  }
  return g.neg(g.softplus(g.mul(g.constant(std::move(sign)), logits)));
}

AncestralSample ancestral_sample(const ModelSpec& spec, const TensorMap& params,
                                 const TensorMap& bn_stats, double bn_eps,
                                 int64_t n, CounterRng& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("ancestral_sample: n must be >= 1");
  const int L = spec.levels();

  Graph g;
  Binding bound = bind_params(g, params);
  TensorMap stats = bn_stats;  // eval mode never mutates them
  PassContext ctx{&g, &bound, &stats, PassMode::kEval, bn_eps, 0.0};

  AncestralSample out;
  out.expected_zero.resize(static_cast<size_t>(L) + 1, 0.0);

  DiffValue mu = g.tile_cols(bound.at(names::top_mu), n);
  DiffValue sigma = g.constant(Tensor::matrix(spec.width(0), n, 1.0));
  DiffValue z;
  for (int j = 0; j <= L; ++j) {
    if (j > 0) {
      auto [mu_j, sigma_j] = prior_params(ctx, j, z);
      mu = mu_j;
      sigma = sigma_j;
    }
    Tensor eps = Tensor::matrix(spec.width(j), n);
    rng.fill_normal(eps);
    z = g.max0(g.add(mu, g.mul(sigma, g.constant(std::move(eps)))));
    out.z.push_back(z.value());

    const Tensor& mv = mu.value();
    const Tensor& sv = sigma.value();
    double mass = 0.0;
    for (int64_t i = 0; i < mv.size(); ++i) {
      mass += std_normal_cdf(-(mv[i] / sv[i]));
    }
    out.expected_zero[static_cast<size_t>(j)] =
        mass / static_cast<double>(mv.size());
  }
  out.x_probs = g.sigmoid(decode_logits(ctx, z)).value();
  return out;
}

}  // namespace rgsvae
