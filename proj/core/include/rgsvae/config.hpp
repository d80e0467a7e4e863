#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgsvae/idx.hpp"
#include "rgsvae/model.hpp"
#include "rgsvae/train.hpp"

namespace rgsvae {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration ('#' starts a comment). Unknown keys are
/// rejected; every key below is required.
struct RunConfig {
  std::vector<int64_t> layer_widths;  // top to bottom, comma separated
  int64_t data_dim = 784;
  uint64_t seed = 1;
  uint64_t eval_seed = 1;
  int64_t batch_size = 150;
  int64_t epochs = 500;
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  int64_t eval_is_samples = 0;
  std::string binarize_mode = "static";
  double binarize_threshold = 0.5;
  std::string train_images;
  std::string test_images;
  std::string out_dir;
  int64_t max_train_images = 0;  // 0 = all
  int64_t max_test_images = 0;
  int64_t checkpoint_every = 0;  // 0 = only at completion

  ModelSpec model_spec() const;
  TrainConfig train_config() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace rgsvae
