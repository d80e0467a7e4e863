#include "rgsvae/train.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace rgsvae {

void TrainConfig::validate() const {
  if (batch_size < 2) {
    throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  }
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs < 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("TrainConfig: alpha < 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
  }
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig: bn_momentum must be in (0, 1)");
  }
  if (!(bn_eps > 0.0)) throw std::invalid_argument("TrainConfig: bn_eps <= 0");
  if (eval_is_samples < 0) {
    throw std::invalid_argument("TrainConfig: eval_is_samples < 0");
  }
}

TrainState init_train_state(const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.spec = spec;
  st.params = init_params(spec);
  st.bn_stats = init_bn_stats(spec);
  st.opt = AdamaxState::zeros_like(st.params);
  st.noise_seed = derive_seed(cfg.seed, "train-noise");
  st.noise_counter = 0;
  st.epoch = 0;
  st.bn_eps = cfg.bn_eps;
  st.bn_momentum = cfg.bn_momentum;
  return st;
}

namespace {

void shuffle_indices(std::vector<int64_t>& idx, CounterRng& rng) {
  for (int64_t i = static_cast<int64_t>(idx.size()) - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(rng.next_below(
        static_cast<uint64_t>(i + 1)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
}

void check_grads_finite(const TensorMap& grads, int64_t epoch, int64_t step) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw std::runtime_error(
          "train_epoch: non-finite gradient for '" + name + "' at epoch " +
          std::to_string(epoch) + ", step " + std::to_string(step));
    }
  }
}

}  // namespace

EpochMetrics train_epoch(const BinaryDataset& dataset, TrainState& state,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.n == 0) {
    throw std::invalid_argument("train_epoch: empty dataset");
  }
  if (dataset.d != state.spec.data_dim) {
    throw shape_error("train_epoch: dataset width " +
                      std::to_string(dataset.d) + " != data_dim " +
                      std::to_string(state.spec.data_dim));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int levels = state.spec.levels();

  std::vector<int64_t> order(static_cast<size_t>(dataset.n));
  std::iota(order.begin(), order.end(), 0);
  CounterRng shuffle_rng(derive_seed(cfg.seed, "shuffle",
                                     static_cast<uint64_t>(state.epoch)));
  shuffle_indices(order, shuffle_rng);

  CounterRng noise(state.noise_seed, state.noise_counter);
  const AdamaxConfig opt_cfg = cfg.adamax();

  EpochMetrics m;
  m.epoch = state.epoch;
  m.split = "train";
  m.kl_layer.assign(static_cast<size_t>(levels) + 1, 0.0);
  int64_t seen = 0;
  int64_t step = 0;

  for (int64_t start = 0; start < dataset.n; start += cfg.batch_size) {
    const int64_t bsz = std::min(cfg.batch_size, dataset.n - start);
    if (bsz < 2) break;  // batch norm cannot see a singleton remainder
    const std::vector<int64_t> batch_idx(
        order.begin() + start, order.begin() + start + bsz);
    const Tensor x = make_batch(dataset, batch_idx);

    Graph g;
    Binding bound = bind_params(g, state.params);
    PassContext ctx{&g,       &bound,        &state.bn_stats,
                    PassMode::kTrain, state.bn_eps, state.bn_momentum};
    ElboParts parts;
    PosteriorPass pass;
    try {
      parts = elbo(ctx, state.spec, x, &noise, nullptr, &pass);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("train_epoch aborted at epoch " +
                               std::to_string(state.epoch) + ", step " +
                               std::to_string(step) + ": " + e.what());
    }
    DiffValue loss = g.neg(pass.bound_mean);
    g.backward(loss);
    TensorMap grads = collect_grads(bound);
    check_grads_finite(grads, state.epoch, step);
    adamax_step(state.params, grads, state.opt, opt_cfg);

    const auto w = static_cast<double>(bsz);
    m.elbo += w * parts.bound;
    m.recon += w * parts.recon;
    for (size_t j = 0; j < parts.kl_layer.size(); ++j) {
      m.kl_layer[j] += w * parts.kl_layer[j];
    }
    seen += bsz;
    ++step;
  }

  if (seen == 0) {
    throw std::invalid_argument(
        "train_epoch: dataset too small for any batch of >= 2");
  }
  m.elbo /= static_cast<double>(seen);
  m.recon /= static_cast<double>(seen);
  for (double& v : m.kl_layer) v /= static_cast<double>(seen);
  m.kl_total = std::accumulate(m.kl_layer.begin(), m.kl_layer.end(), 0.0);

  state.noise_counter = noise.counter();
  state.epoch += 1;
  m.wall_secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return m;
}

EpochMetrics evaluate_split(const BinaryDataset& dataset,
                            const TrainState& state, int64_t batch_size,
                            uint64_t eval_seed, int64_t is_samples) {
  if (dataset.n == 0) {
    throw std::invalid_argument("evaluate_split: empty dataset");
  }
  if (dataset.d != state.spec.data_dim) {
    throw shape_error("evaluate_split: dataset width " +
                      std::to_string(dataset.d) + " != checkpoint data_dim " +
                      std::to_string(state.spec.data_dim));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int levels = state.spec.levels();

  CounterRng noise(derive_seed(eval_seed, "eval-noise"));
  // Eval mode only reads the running statistics; the copy keeps the API
  // honest about not mutating the training state.
  TensorMap stats = state.bn_stats;

  EpochMetrics m;
  m.epoch = state.epoch;
  m.split = dataset.split.empty() ? "test" : dataset.split;
  m.kl_layer.assign(static_cast<size_t>(levels) + 1, 0.0);

  for (int64_t start = 0; start < dataset.n; start += batch_size) {
    const int64_t bsz = std::min(batch_size, dataset.n - start);
    std::vector<int64_t> idx(static_cast<size_t>(bsz));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor x = make_batch(dataset, idx);

    Graph g;
    Binding bound = bind_params(g, state.params);
    PassContext ctx{&g,      &bound,       &stats,
                    PassMode::kEval, state.bn_eps, state.bn_momentum};
    ElboParts parts = elbo(ctx, state.spec, x, &noise);
    const auto w = static_cast<double>(bsz);
    m.elbo += w * parts.bound;
    m.recon += w * parts.recon;
    for (size_t j = 0; j < parts.kl_layer.size(); ++j) {
      m.kl_layer[j] += w * parts.kl_layer[j];
    }
  }
  m.elbo /= static_cast<double>(dataset.n);
  m.recon /= static_cast<double>(dataset.n);
  for (double& v : m.kl_layer) v /= static_cast<double>(dataset.n);
  m.kl_total = std::accumulate(m.kl_layer.begin(), m.kl_layer.end(), 0.0);

  if (is_samples > 0) {
    CounterRng is_rng(derive_seed(eval_seed, "eval-is"));
    double acc = 0.0;
    for (int64_t r = 0; r < dataset.n; ++r) {
      acc += is_loglik_estimate(state.spec, state.params, state.bn_stats,
                                state.bn_eps, make_column(dataset, r),
                                is_samples, is_rng);
    }
    m.is_loglik = acc / static_cast<double>(dataset.n);
  }
  m.wall_secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return m;
}

std::string metrics_csv_header(int levels) {
  std::string h = "epoch,split,elbo_nats,recon_nats,kl_total";
  for (int j = 0; j <= levels; ++j) {
    h += ",kl_layer_" + std::to_string(j);
  }
  h += ",wall_secs";
  return h;
}

namespace {
// Shortest decimal form that round-trips to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
}  // namespace

std::string metrics_csv_row(const EpochMetrics& m) {
  std::string row = std::to_string(m.epoch) + "," + m.split + "," +
                    fmt(m.elbo) + "," + fmt(m.recon) + "," + fmt(m.kl_total);
  for (double v : m.kl_layer) row += "," + fmt(v);
  row += "," + fmt(m.wall_secs);
  return row;
}

}  // namespace rgsvae
