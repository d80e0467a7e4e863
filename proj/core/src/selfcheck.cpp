#include "rgsvae/selfcheck.hpp"

#include <cmath>
#include <cstdio>

#include "rgsvae/inference.hpp"
#include "rgsvae/model.hpp"

namespace rgsvae {

double sample_truncated_std_normal(double alpha, CounterRng& rng) {
  if (alpha <= 0.3) {
    for (;;) {
      const double y = rng.next_normal();
      if (y > alpha) return y;
    }
  }
  // Exponential-proposal rejection (Robert 1995); acceptance >= 0.66 for
  // any alpha.
  const double lam = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double e = -std::log(rng.next_uniform()) / lam;
    const double z = alpha + e;
    const double d = z - lam;
    if (rng.next_uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

McMoments mc_truncated_moments(double mu, double sigma, int64_t n,
                               CounterRng& rng) {
  const double alpha = -mu / sigma;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double z = mu + sigma * sample_truncated_std_normal(alpha, rng);
    const double z2 = z * z;
    s1 += z;
    s2 += z2;
    s4 += z2 * z2;
  }
  const auto dn = static_cast<double>(n);
  McMoments out;
  out.m1 = s1 / dn;
  out.m2 = s2 / dn;
  const double var1 = std::max(s2 / dn - out.m1 * out.m1, 0.0);
  const double var2 = std::max(s4 / dn - out.m2 * out.m2, 0.0);
  out.se1 = std::sqrt(var1 / dn);
  out.se2 = std::sqrt(var2 / dn);
  return out;
}

// Stratified over the mixture: the point mass is handled exactly through
// the log Q/P ratio, the truncated branch by sampling z from q | z > 0.
// A plain mixture sampler would leave the rare branch unsampled whenever
// (1 - Q) n is O(1), biasing the mean far beyond its apparent SE.
McEstimate mc_rg_kl(const UnitGaussianParams& q, const UnitGaussianParams& p,
                    int64_t n, CounterRng& rng) {
  const double aq = -q.mu / q.sigma;
  const double ap = -p.mu / p.sigma;
  const double mass_q0 = std_normal_cdf(aq);
  const double pos_mass = std_normal_cdf(-aq);
  const double discrete =
      mass_q0 * (std_normal_log_cdf(aq) - std_normal_log_cdf(ap));

  double s = 0.0, ss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double z = q.mu + q.sigma * sample_truncated_std_normal(aq, rng);
    const double w = rg_log_density(q, z) - rg_log_density(p, z);
    s += w;
    ss += w * w;
  }
  const auto dn = static_cast<double>(n);
  const double cond_mean = s / dn;
  const double cond_var = std::max(ss / dn - cond_mean * cond_mean, 0.0);
  McEstimate out;
  out.mean = discrete + pos_mass * cond_mean;
  out.se = pos_mass * std::sqrt(cond_var / dn);
  return out;
}

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

CheckResult check_truncated_moments(uint64_t seed, int pairs,
                                    int64_t samples) {
  CheckResult res;
  res.name = "truncated-moments-vs-mc";
  CounterRng param_rng(derive_seed(seed, "moments-params"));
  CounterRng mc_rng(derive_seed(seed, "moments-mc"));

  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    double mu, sigma;
    // Deep-tail cases pinned first, the rest drawn at random.
    switch (k) {
      case 0: mu = -20.0; sigma = 1.0; break;
      case 1: mu = 20.0; sigma = 1.0; break;
      case 2: mu = -20.0; sigma = 3.0; break;
      case 3: mu = 20.0; sigma = 0.5; break;
      default:
        mu = -10.0 + 20.0 * param_rng.next_uniform();
        sigma = std::exp(-1.5 + 3.0 * param_rng.next_uniform());
    }
    const auto [m1, m2] = truncated_moments(mu, sigma);
    if (!std::isfinite(m1) || !std::isfinite(m2)) {
      res.pass = false;
      res.detail = fmt("non-finite moments at mu=%g sigma=%g", mu, sigma);
      return res;
    }
    const McMoments mc = mc_truncated_moments(mu, sigma, samples, mc_rng);
    const double z1 = std::abs(m1 - mc.m1) / std::max(mc.se1, 1e-300);
    const double z2 = std::abs(m2 - mc.m2) / std::max(mc.se2, 1e-300);
    const double z = std::max(z1, z2);
    if (z > worst) {
      worst = z;
      res.detail = fmt("worst %.2f SE at mu=%.4g sigma=%.4g", z, mu, sigma);
    }
  }
  res.worst = worst;
  res.pass = worst <= 4.0;
  return res;
}

CheckResult check_kl_vs_mc(uint64_t seed, int pairs, int64_t samples) {
  CheckResult res;
  res.name = "rg-kl-vs-mc";
  CounterRng param_rng(derive_seed(seed, "kl-params"));
  CounterRng mc_rng(derive_seed(seed, "kl-mc"));

  const auto draw = [&param_rng]() {
    const double mu = -5.0 + 10.0 * param_rng.next_uniform();
    const double sigma = std::exp(-2.0 + 4.0 * param_rng.next_uniform());
    return UnitGaussianParams{mu, sigma};
  };

  double worst = 0.0;
  double worst_zero = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const UnitGaussianParams q = draw();
    // Every eighth pair is q == p; analytic KL must then vanish.
    const UnitGaussianParams p = (k % 8 == 0) ? q : draw();
    const double analytic = rg_kl(q, p);
    if (k % 8 == 0) {
      worst_zero = std::max(worst_zero, std::abs(analytic));
      if (std::abs(analytic) > 1e-10) {
        res.pass = false;
        res.detail = fmt("identical pair reported KL=%g", analytic);
        return res;
      }
      continue;
    }
    const McEstimate mc = mc_rg_kl(q, p, samples, mc_rng);
    // Deep-tail pairs can put every draw on the point mass, collapsing the
    // sample SE to zero while the analytic value still differs by roundoff;
    // a quarter-nano-nat floor keeps the z-statistic meaningful there.
    const double z =
        std::abs(analytic - mc.mean) / std::max(mc.se, 2.5e-10);
    if (z > worst) {
      worst = z;
      res.detail = fmt("worst %.2f SE (analytic %.6g, mc %.6g)", z, analytic,
                       mc.mean);
    }
  }
  res.worst = worst;
  res.pass = worst <= 4.0;
  res.detail += fmt("; identical pairs max |KL| = %.2g", worst_zero);
  return res;
}

namespace {

struct TinyInstance {
  ModelSpec spec;
  TensorMap params;
  TensorMap bn_stats;
  Tensor x;
  std::vector<Tensor> noise;
  PassMode mode;
  double bn_eps = 1e-5;
};

double eval_bound(const TinyInstance& inst) {
  Graph g;
  Binding bound = bind_params(g, inst.params);
  TensorMap stats = inst.bn_stats;  // train-mode updates must not leak out
  PassContext ctx{&g,        &bound,       &stats,
                  inst.mode, inst.bn_eps, 0.9};
  PosteriorPass pass =
      posterior_downward_pass(ctx, inst.spec, inst.x, nullptr, &inst.noise);
  return pass.bound_mean.value()[0];
}

// Rectifier and clamp inputs must sit away from their kinks for finite
// differences to be meaningful.
bool kink_adjacent(const TinyInstance& inst, double margin) {
  Graph g;
  Binding bound = bind_params(g, inst.params);
  TensorMap stats = inst.bn_stats;
  PassContext ctx{&g,        &bound,       &stats,
                  inst.mode, inst.bn_eps, 0.9};
  PosteriorPass pass =
      posterior_downward_pass(ctx, inst.spec, inst.x, nullptr, &inst.noise);

  std::vector<ApproxLikelihood> lik = likelihood_pass(ctx, inst.spec, inst.x);
  for (const auto& l : lik) {
    const Tensor& mu = l.mu_tilde.value();
    for (int64_t i = 0; i < mu.size(); ++i) {
      if (std::abs(mu[i]) <= margin) return true;
    }
  }
  for (const auto& st : pass.layers) {
    const Tensor& mh = st.mu_hat.value();
    const Tensor& sh = st.sigma_hat.value();
    for (int64_t i = 0; i < mh.size(); ++i) {
      if (std::abs(mh[i] + sh[i] * st.eps[i]) <= margin) return true;
    }
  }
  return false;
}

double grad_check_worst(TinyInstance& inst) {
  Graph g;
  Binding bound = bind_params(g, inst.params);
  TensorMap stats = inst.bn_stats;
  PassContext ctx{&g,        &bound,       &stats,
                  inst.mode, inst.bn_eps, 0.9};
  PosteriorPass pass =
      posterior_downward_pass(ctx, inst.spec, inst.x, nullptr, &inst.noise);
  g.backward(pass.bound_mean);
  const TensorMap grads = collect_grads(bound);

  const double h = 1e-5;
  double worst = 0.0;
  for (auto& [name, theta] : inst.params) {
    const Tensor& g_an = grads.at(name);
    for (int64_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double up = eval_bound(inst);
      theta[i] = keep - h;
      const double dn = eval_bound(inst);
      theta[i] = keep;
      const double g_fd = (up - dn) / (2.0 * h);
      const double rel = std::abs(g_an[i] - g_fd) /
                         std::max(std::abs(g_an[i]) + std::abs(g_fd), 1e-3);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

CheckResult check_elbo_gradients(uint64_t seed) {
  CheckResult res;
  res.name = "elbo-gradients-vs-fd";

  double worst = 0.0;
  for (PassMode mode : {PassMode::kTrain, PassMode::kEval}) {
    TinyInstance inst;
    inst.spec = ModelSpec{{2, 3}, 4, 0};
    inst.mode = mode;
    const int64_t batch = mode == PassMode::kTrain ? 5 : 3;

    // Retry seeds until the instance sits clear of every kink.
    for (uint64_t attempt = 0;; ++attempt) {
      inst.spec.seed = derive_seed(seed, "gradcheck-init", attempt);
      inst.params = init_params(inst.spec);
      inst.bn_stats = init_bn_stats(inst.spec);
      CounterRng rng(derive_seed(seed, "gradcheck-data", attempt));
      inst.x = Tensor::matrix(inst.spec.data_dim, batch);
      for (int64_t i = 0; i < inst.x.size(); ++i) {
        inst.x[i] = rng.next_uniform() < 0.35 ? 1.0 : 0.0;
      }
      inst.noise.clear();
      for (int j = 0; j <= inst.spec.levels(); ++j) {
        Tensor eps = Tensor::matrix(inst.spec.width(j), batch);
        rng.fill_normal(eps);
        inst.noise.push_back(std::move(eps));
      }
      if (!kink_adjacent(inst, 1e-3)) break;
      if (attempt > 64) {
        res.detail = "could not find a kink-free instance";
        return res;
      }
    }
    worst = std::max(worst, grad_check_worst(inst));
  }
  res.worst = worst;
  res.pass = worst <= 1e-4;
  res.detail = fmt("worst relative error %.3g (train+eval modes)", worst);
  return res;
}

}  // namespace rgsvae
