#pragma once

#include <string>
#include <vector>

#include "rgsvae/adamax.hpp"
#include "rgsvae/idx.hpp"
#include "rgsvae/inference.hpp"
#include "rgsvae/model.hpp"

namespace rgsvae {

struct TrainConfig {
  int64_t batch_size = 150;
  int64_t epochs = 500;
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  uint64_t seed = 1;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  int64_t eval_is_samples = 0;

  void validate() const;
  AdamaxConfig adamax() const { return {alpha, beta1, beta2}; }
};

/// Everything needed to resume training bit-exactly: parameters, batch-norm
/// running statistics, optimizer moments, the noise stream position and the
/// epoch counter. Batch-norm constants ride along so that evaluation from a
/// checkpoint needs no config file.
struct TrainState {
  ModelSpec spec;
  TensorMap params;
  TensorMap bn_stats;
  AdamaxState opt;
  uint64_t noise_seed = 0;
  uint64_t noise_counter = 0;
  int64_t epoch = 0;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;
};

TrainState init_train_state(const ModelSpec& spec, const TrainConfig& cfg);

struct EpochMetrics {
  int64_t epoch = 0;
  std::string split;
  double elbo = 0.0;
  double recon = 0.0;
  double kl_total = 0.0;
  std::vector<double> kl_layer;
  double wall_secs = 0.0;
  double is_loglik = 0.0;  // populated only when eval runs with K > 0
};

/// One shuffled pass over the dataset: per minibatch an upward pass, a
/// downward pass, the mean ELBO, a backward sweep and one Adamax step over
/// every learnable tensor. Aborts with a diagnostic on non-finite loss or
/// gradients. A trailing remainder of fewer than 2 rows is skipped (batch
/// normalization needs a batch).
EpochMetrics train_epoch(const BinaryDataset& dataset, TrainState& state,
                         const TrainConfig& cfg);

/// Deterministic eval-mode pass over a split: single-sample ELBO per image
/// with noise from `eval_seed`, batch norm on running statistics. Mutates
/// nothing. When is_samples > 0, also reports the mean importance-sampled
/// log-likelihood estimate over the split.
EpochMetrics evaluate_split(const BinaryDataset& dataset,
                            const TrainState& state, int64_t batch_size,
                            uint64_t eval_seed, int64_t is_samples = 0);

std::string metrics_csv_header(int levels);
std::string metrics_csv_row(const EpochMetrics& m);

}  // namespace rgsvae
