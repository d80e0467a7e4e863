// Command-line front end: train / eval / sample / check.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rgsvae/checkpoint.hpp"
#include "rgsvae/config.hpp"
#include "rgsvae/idx.hpp"
#include "rgsvae/inference.hpp"
#include "rgsvae/pgm.hpp"
#include "rgsvae/selfcheck.hpp"
#include "rgsvae/train.hpp"

namespace fs = std::filesystem;
using namespace rgsvae;

namespace {

std::string resolve_images_path(const std::string& data) {
  if (fs::is_directory(data)) {
    for (const char* name :
         {"t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte",
          "train-images-idx3-ubyte", "train-images.idx3-ubyte"}) {
      const fs::path p = fs::path(data) / name;
      if (fs::exists(p)) return p.string();
    }
    throw std::runtime_error("no IDX image file found under directory " +
                             data);
  }
  return data;
}

BinaryDataset load_binarized(const std::string& path, BinarizeMode mode,
                             double threshold, uint64_t seed, uint64_t epoch,
                             const std::string& split) {
  const IdxArray images = parse_idx_file(path);
  CounterRng rng(derive_seed(seed, "binarize", epoch));
  return binarize(images, mode, threshold, rng, split);
}

void append_metrics(std::ofstream& csv, const EpochMetrics& m) {
  csv << metrics_csv_row(m) << "\n";
  csv.flush();
}

void print_metrics(const EpochMetrics& m) {
  std::printf("epoch %5" PRId64 " %-5s elbo %10.4f  recon %10.4f  kl %8.4f",
              m.epoch, m.split.c_str(), m.elbo, m.recon, m.kl_total);
  if (m.is_loglik != 0.0) std::printf("  is_loglik %10.4f", m.is_loglik);
  std::printf("  (%.1fs)\n", m.wall_secs);
  std::fflush(stdout);
}

int cmd_train(const std::string& config_path,
              const std::optional<std::string>& resume_ckpt,
              const std::optional<uint64_t>& seed_override,
              const std::optional<std::string>& out_override,
              const std::optional<int64_t>& epochs_override) {
  RunConfig cfg = load_run_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (out_override) cfg.out_dir = *out_override;
  if (epochs_override) cfg.epochs = *epochs_override;
  cfg.validate();

  const BinarizeMode mode = parse_binarize_mode(cfg.binarize_mode);
  const TrainConfig tcfg = cfg.train_config();
  const ModelSpec spec = cfg.model_spec();

  if (!fs::exists(cfg.train_images)) {
    throw std::runtime_error("training data file not found: " +
                             cfg.train_images);
  }
  if (!fs::exists(cfg.test_images)) {
    throw std::runtime_error("test data file not found: " + cfg.test_images);
  }
  fs::create_directories(cfg.out_dir);

  TrainState state = resume_ckpt ? load_checkpoint(*resume_ckpt)
                                 : init_train_state(spec, tcfg);
  if (resume_ckpt && state.spec.layer_widths != spec.layer_widths) {
    throw std::runtime_error(
        "resume checkpoint architecture does not match the config");
  }

  BinaryDataset test = take(load_binarized(cfg.test_images, mode,
                                           cfg.binarize_threshold, cfg.seed,
                                           ~0ull, "test"),
                            cfg.max_test_images);
  BinaryDataset train;
  if (mode == BinarizeMode::kStaticThreshold) {
    train = take(load_binarized(cfg.train_images, mode,
                                cfg.binarize_threshold, cfg.seed, 0, "train"),
                 cfg.max_train_images);
  }

  const fs::path csv_path = fs::path(cfg.out_dir) / "metrics.csv";
  const bool fresh_csv = !fs::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::app);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  if (fresh_csv) {
    csv << "# binarize_mode=" << cfg.binarize_mode
        << " threshold=" << cfg.binarize_threshold << "\n";
    csv << metrics_csv_header(spec.levels()) << "\n";
    csv.flush();
  }

  const auto ckpt_path = [&cfg](const std::string& tag) {
    return (fs::path(cfg.out_dir) / ("ckpt-" + tag + ".rgsvae")).string();
  };

  while (state.epoch < cfg.epochs) {
    if (mode == BinarizeMode::kStochastic) {
      train = take(load_binarized(cfg.train_images, mode,
                                  cfg.binarize_threshold, cfg.seed,
                                  static_cast<uint64_t>(state.epoch), "train"),
                   cfg.max_train_images);
    }
    EpochMetrics tm = train_epoch(train, state, tcfg);
    append_metrics(csv, tm);
    print_metrics(tm);
    EpochMetrics em = evaluate_split(test, state, cfg.batch_size,
                                     cfg.eval_seed, cfg.eval_is_samples);
    append_metrics(csv, em);
    print_metrics(em);
    if (cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0 &&
        state.epoch < cfg.epochs) {
      save_checkpoint(state, ckpt_path(std::to_string(state.epoch)));
    }
  }
  save_checkpoint(state, ckpt_path("final"));
  std::printf("done: %s\n", ckpt_path("final").c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data,
             int64_t is_samples, uint64_t eval_seed,
             const std::string& binarize_mode, double threshold,
             int64_t batch) {
  const TrainState state = load_checkpoint(ckpt);
  const BinaryDataset ds =
      load_binarized(resolve_images_path(data),
                     parse_binarize_mode(binarize_mode), threshold, eval_seed,
                     0, "test");
  const EpochMetrics m =
      evaluate_split(ds, state, batch, eval_seed, is_samples);
  std::printf("images        %" PRId64 "\n", ds.n);
  std::printf("elbo_nats     %.6f\n", m.elbo);
  std::printf("recon_nats    %.6f\n", m.recon);
  std::printf("kl_total      %.6f\n", m.kl_total);
  for (size_t j = 0; j < m.kl_layer.size(); ++j) {
    std::printf("kl_layer_%zu    %.6f\n", j, m.kl_layer[j]);
  }
  if (is_samples > 0) {
    std::printf("is_loglik[K=%" PRId64 "] %.6f\n", is_samples, m.is_loglik);
  }
  return 0;
}

int cmd_sample(const std::string& ckpt, int64_t n, const std::string& out_dir,
               uint64_t seed) {
  if (n < 1) {
    std::fprintf(stderr, "sample: need n >= 1 images\n");
    return 2;
  }
  const TrainState state = load_checkpoint(ckpt);
  fs::create_directories(out_dir);

  CounterRng rng(derive_seed(seed, "sample"));
  const AncestralSample s = ancestral_sample(
      state.spec, state.params, state.bn_stats, state.bn_eps, n, rng);

  int64_t img_rows = 1, img_cols = state.spec.data_dim;
  const auto side = static_cast<int64_t>(
      std::lround(std::sqrt(static_cast<double>(state.spec.data_dim))));
  if (side * side == state.spec.data_dim) {
    img_rows = img_cols = side;
  }
  write_pgm(tile_sheet(s.x_probs, img_rows, img_cols),
            (fs::path(out_dir) / "sheet.pgm").string());
  for (int64_t k = 0; k < n; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04" PRId64 ".pgm", k);
    write_pgm(column_image(s.x_probs, k, img_rows, img_cols),
              (fs::path(out_dir) / name).string());
  }
  for (size_t j = 0; j < s.z.size(); ++j) {
    const Tensor& z = s.z[j];
    int64_t zeros = 0;
    for (int64_t i = 0; i < z.size(); ++i) zeros += z[i] == 0.0 ? 1 : 0;
    std::printf("layer %zu zero-fraction %.6f expected %.6f\n", j,
                static_cast<double>(zeros) / static_cast<double>(z.size()),
                s.expected_zero[j]);
  }
  std::printf("wrote %" PRId64 " samples to %s\n", n, out_dir.c_str());
  return 0;
}

int cmd_check(bool grad, bool kl, bool moments, uint64_t seed, int pairs_kl,
              int pairs_moments, int64_t samples_kl, int64_t samples_moments) {
  if (!grad && !kl && !moments) grad = kl = moments = true;
  bool all_pass = true;
  const auto report = [&all_pass](const CheckResult& r) {
    std::printf("%-24s %s  worst %.4g  %s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.worst, r.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
  };
  if (moments) {
    report(check_truncated_moments(seed, pairs_moments, samples_moments));
  }
  if (kl) report(check_kl_vs_mc(seed, pairs_kl, samples_kl));
  if (grad) report(check_elbo_gradients(seed));
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical rectified-Gaussian variational auto-encoder"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model from a config");
  std::string config_path;
  std::optional<std::string> resume_ckpt, out_override;
  std::optional<uint64_t> seed_override;
  std::optional<int64_t> epochs_override;
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--checkpoint", resume_ckpt, "resume from checkpoint");
  train->add_option("--seed", seed_override, "override config seed");
  train->add_option("--out", out_override, "override output directory");
  train->add_option("--epochs-override", epochs_override,
                    "override the epoch count");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string eval_ckpt, eval_data, eval_binmode = "static";
  int64_t eval_is = 0, eval_batch = 150;
  uint64_t eval_seed = 1;
  double eval_threshold = 0.5;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "IDX image file or directory")
      ->required();
  eval->add_option("--is-samples", eval_is,
                   "importance samples per image (0 = ELBO only)");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--binarize-mode", eval_binmode, "static|stochastic");
  eval->add_option("--threshold", eval_threshold, "static threshold");
  eval->add_option("--batch", eval_batch, "evaluation batch size");

  // sample
  auto* sample = app.add_subcommand("sample", "ancestral samples as PGMs");
  std::string sample_ckpt, sample_out = "samples";
  int64_t sample_n = 0;
  uint64_t sample_seed = 1;
  sample->add_option("--checkpoint", sample_ckpt, "checkpoint file")
      ->required();
  sample->add_option("-n,--num", sample_n, "number of images")->required();
  sample->add_option("--out", sample_out, "output directory");
  sample->add_option("--seed", sample_seed, "sampling seed");

  // check
  auto* check = app.add_subcommand("check", "run the verification suites");
  bool chk_grad = false, chk_kl = false, chk_moments = false;
  uint64_t chk_seed = 20240901;
  int chk_pairs_kl = 200, chk_pairs_moments = 100;
  int64_t chk_samples_kl = 1'000'000, chk_samples_moments = 10'000'000;
  check->add_flag("--grad", chk_grad, "finite-difference gradient check");
  check->add_flag("--kl", chk_kl, "analytic KL vs Monte Carlo");
  check->add_flag("--moments", chk_moments, "truncated moments vs rejection sampling");
  check->add_option("--seed", chk_seed, "check seed");
  check->add_option("--kl-pairs", chk_pairs_kl, "parameter pairs for --kl");
  check->add_option("--kl-samples", chk_samples_kl, "MC samples for --kl");
  check->add_option("--moments-pairs", chk_pairs_moments,
                    "parameter pairs for --moments");
  check->add_option("--moments-samples", chk_samples_moments,
                    "MC samples for --moments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      return cmd_train(config_path, resume_ckpt, seed_override, out_override,
                       epochs_override);
    }
    if (*eval) {
      return cmd_eval(eval_ckpt, eval_data, eval_is, eval_seed, eval_binmode,
                      eval_threshold, eval_batch);
    }
    if (*sample) {
      return cmd_sample(sample_ckpt, sample_n, sample_out, sample_seed);
    }
    if (*check) {
      return cmd_check(chk_grad, chk_kl, chk_moments, chk_seed, chk_pairs_kl,
                       chk_pairs_moments, chk_samples_kl, chk_samples_moments);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
