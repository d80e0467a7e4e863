#include "rgsvae/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rgsvae {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

int64_t to_i64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': not an integer: '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': not an unsigned integer: '" +
                       v + "'");
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::vector<int64_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(to_i64(key, trim(item)));
  }
  if (out.empty()) {
    throw config_error("config key '" + key + "': empty width list");
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ModelSpec RunConfig::model_spec() const {
  return ModelSpec{layer_widths, data_dim, seed};
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.alpha = alpha;
  t.beta1 = beta1;
  t.beta2 = beta2;
  t.seed = seed;
  t.bn_momentum = bn_momentum;
  t.bn_eps = bn_eps;
  t.eval_is_samples = eval_is_samples;
  return t;
}

void RunConfig::validate() const {
  model_spec().validate();
  train_config().validate();
  if (binarize_mode != "static" && binarize_mode != "stochastic") {
    throw config_error("binarize_mode must be static|stochastic, got '" +
                       binarize_mode + "'");
  }
  if (!(binarize_threshold >= 0.0 && binarize_threshold <= 1.0)) {
    throw config_error("binarize_threshold must lie in [0, 1]");
  }
  if (train_images.empty()) throw config_error("train_images is required");
  if (test_images.empty()) throw config_error("test_images is required");
  if (out_dir.empty()) throw config_error("out_dir is required");
  if (max_train_images < 0 || max_test_images < 0 || checkpoint_every < 0) {
    throw config_error("max_*_images / checkpoint_every must be >= 0");
  }
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!kv.emplace(key, val).second) {
      throw config_error("duplicate config key '" + key + "'");
    }
  }

  RunConfig c;
  std::set<std::string> seen;
  const auto get = [&kv, &seen](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw config_error("missing config key '" + key + "'");
    }
    seen.insert(key);
    return it->second;
  };

  c.layer_widths = to_widths("layer_widths", get("layer_widths"));
  c.data_dim = to_i64("data_dim", get("data_dim"));
  c.seed = to_u64("seed", get("seed"));
  c.eval_seed = to_u64("eval_seed", get("eval_seed"));
  c.batch_size = to_i64("batch_size", get("batch_size"));
  c.epochs = to_i64("epochs", get("epochs"));
  c.alpha = to_f64("alpha", get("alpha"));
  c.beta1 = to_f64("beta1", get("beta1"));
  c.beta2 = to_f64("beta2", get("beta2"));
  c.bn_momentum = to_f64("bn_momentum", get("bn_momentum"));
  c.bn_eps = to_f64("bn_eps", get("bn_eps"));
  c.eval_is_samples = to_i64("eval_is_samples", get("eval_is_samples"));
  c.binarize_mode = get("binarize_mode");
  c.binarize_threshold = to_f64("binarize_threshold",
                                get("binarize_threshold"));
  c.train_images = get("train_images");
  c.test_images = get("test_images");
  c.out_dir = get("out_dir");
  c.max_train_images = to_i64("max_train_images", get("max_train_images"));
  c.max_test_images = to_i64("max_test_images", get("max_test_images"));
  c.checkpoint_every = to_i64("checkpoint_every", get("checkpoint_every"));

  for (const auto& [key, val] : kv) {
    if (!seen.count(key)) {
      throw config_error("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
  std::string widths;
  for (size_t i = 0; i < c.layer_widths.size(); ++i) {
    if (i) widths += ",";
    widths += std::to_string(c.layer_widths[i]);
  }
  std::string out;
  out += "layer_widths = " + widths + "\n";
  out += "data_dim = " + std::to_string(c.data_dim) + "\n";
  out += "seed = " + std::to_string(c.seed) + "\n";
  out += "eval_seed = " + std::to_string(c.eval_seed) + "\n";
  out += "batch_size = " + std::to_string(c.batch_size) + "\n";
  out += "epochs = " + std::to_string(c.epochs) + "\n";
  out += "alpha = " + fmt_double(c.alpha) + "\n";
  out += "beta1 = " + fmt_double(c.beta1) + "\n";
  out += "beta2 = " + fmt_double(c.beta2) + "\n";
  out += "bn_momentum = " + fmt_double(c.bn_momentum) + "\n";
  out += "bn_eps = " + fmt_double(c.bn_eps) + "\n";
  out += "eval_is_samples = " + std::to_string(c.eval_is_samples) + "\n";
  out += "binarize_mode = " + c.binarize_mode + "\n";
  out += "binarize_threshold = " + fmt_double(c.binarize_threshold) + "\n";
  out += "train_images = " + c.train_images + "\n";
  out += "test_images = " + c.test_images + "\n";
  out += "out_dir = " + c.out_dir + "\n";
  out += "max_train_images = " + std::to_string(c.max_train_images) + "\n";
  out += "max_test_images = " + std::to_string(c.max_test_images) + "\n";
  out += "checkpoint_every = " + std::to_string(c.checkpoint_every) + "\n";
  return out;
}

}  // namespace rgsvae
