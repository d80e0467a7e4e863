#include "rgsvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace rgsvae {

namespace {

constexpr char kMagic[6] = {'R', 'G', 'S', 'V', 'A', 'E'};

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<uint64_t>(d);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : b_(bytes), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(b_[off_ + i])) << (8 * i);
    }
    off_ += 4;
    return v;
  }

  double f64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(b_[off_ + i])) << (8 * i);
    }
    off_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string str(size_t len) {
    need(len);
    std::string s = b_.substr(off_, len);
    off_ += len;
    return s;
  }

  void raw(char* dst, size_t len) {
    need(len);
    std::memcpy(dst, b_.data() + off_, len);
    off_ += len;
  }

  bool at_end() const { return off_ == b_.size(); }
  size_t offset() const { return off_; }

 private:
  void need(size_t len) {
    if (off_ + len > b_.size()) {
      throw checkpoint_error("truncated checkpoint '" + path_ +
                             "' at byte " + std::to_string(off_));
    }
  }
  const std::string& b_;
  std::string path_;
  size_t off_ = 0;
};

// The whole state flattens into one sorted name -> tensor map.
std::map<std::string, Tensor> flatten(const TrainState& st) {
  std::map<std::string, Tensor> rec;
  const auto scalar_rec = [&rec](const std::string& name, double v) {
    rec.emplace(name, Tensor::scalar(v));
  };

  Tensor widths = Tensor::vector(
      static_cast<int64_t>(st.spec.layer_widths.size()));
  for (size_t i = 0; i < st.spec.layer_widths.size(); ++i) {
    widths[static_cast<int64_t>(i)] =
        static_cast<double>(st.spec.layer_widths[i]);
  }
  rec.emplace("meta.layer_widths", std::move(widths));
  scalar_rec("meta.data_dim", static_cast<double>(st.spec.data_dim));
  scalar_rec("meta.model_seed.lo", static_cast<double>(st.spec.seed & 0xffffffffull));
  scalar_rec("meta.model_seed.hi", static_cast<double>(st.spec.seed >> 32));
  scalar_rec("meta.epoch", static_cast<double>(st.epoch));
  scalar_rec("meta.bn_eps", st.bn_eps);
  scalar_rec("meta.bn_momentum", st.bn_momentum);
  scalar_rec("opt.t", static_cast<double>(st.opt.t));
  scalar_rec("rng.seed.lo", static_cast<double>(st.noise_seed & 0xffffffffull));
  scalar_rec("rng.seed.hi", static_cast<double>(st.noise_seed >> 32));
  scalar_rec("rng.counter.lo",
             static_cast<double>(st.noise_counter & 0xffffffffull));
  scalar_rec("rng.counter.hi", static_cast<double>(st.noise_counter >> 32));

  for (const auto& [name, t] : st.params) rec.emplace("param." + name, t);
  for (const auto& [name, t] : st.bn_stats) rec.emplace("stat." + name, t);
  for (const auto& [name, t] : st.opt.m) rec.emplace("opt.m." + name, t);
  for (const auto& [name, t] : st.opt.u) rec.emplace("opt.u." + name, t);
  return rec;
}

double take_scalar(std::map<std::string, Tensor>& rec,
                   const std::string& name) {
  auto it = rec.find(name);
  if (it == rec.end()) {
    throw checkpoint_error("checkpoint is missing record '" + name + "'");
  }
  if (it->second.size() != 1) {
    throw checkpoint_error("record '" + name + "' is not a scalar");
  }
  const double v = it->second[0];
  rec.erase(it);
  return v;
}

uint64_t take_u64(std::map<std::string, Tensor>& rec,
                  const std::string& stem) {
  const auto lo = static_cast<uint64_t>(take_scalar(rec, stem + ".lo"));
  const auto hi = static_cast<uint64_t>(take_scalar(rec, stem + ".hi"));
  return (hi << 32) | lo;
}

void move_prefixed(std::map<std::string, Tensor>& rec,
                   const std::string& prefix, TensorMap& out) {
  for (auto it = rec.begin(); it != rec.end();) {
    if (it->first.rfind(prefix, 0) == 0) {
      out.insert(it->first.substr(prefix.size()), std::move(it->second));
      it = rec.erase(it);
    } else {
      ++it;
    }
  }
}

void check_shapes(const TensorMap& got, const TensorMap& expected,
                  const char* what) {
  for (const auto& [name, t] : expected) {
    if (!got.contains(name)) {
      throw checkpoint_error(std::string("checkpoint is missing ") + what +
                             " '" + name + "'");
    }
    if (!got.at(name).same_shape(t)) {
      throw checkpoint_error(std::string("checkpoint ") + what + " '" + name +
                             "' has shape " + got.at(name).shape_str() +
                             ", model spec wants " + t.shape_str());
    }
  }
  if (got.size() != expected.size()) {
    throw checkpoint_error(std::string("checkpoint carries unknown ") + what +
                           " records");
  }
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
  const std::map<std::string, Tensor> rec = flatten(state);

  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(rec.size()));
  for (const auto& [name, t] : rec) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<uint32_t>(t.rank()));
    if (t.rank() == 1) {
      put_u32(out, static_cast<uint32_t>(t.rows()));
    } else if (t.rank() == 2) {
      put_u32(out, static_cast<uint32_t>(t.rows()));
      put_u32(out, static_cast<uint32_t>(t.cols()));
    }
    for (int64_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw checkpoint_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  Reader r(bytes, path);

  char magic[6];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw checkpoint_error("bad magic in '" + path + "'");
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw checkpoint_error("unsupported checkpoint version " +
                           std::to_string(version));
  }
  const uint32_t count = r.u32();
  std::map<std::string, Tensor> rec;
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const uint32_t rank = r.u32();
    if (rank > 2) {
      throw checkpoint_error("record '" + name + "' has rank " +
                             std::to_string(rank));
    }
    Tensor t;
    if (rank == 0) {
      t = Tensor::scalar(0.0);
    } else if (rank == 1) {
      t = Tensor::vector(r.u32());
    } else {
      const uint32_t rows = r.u32();
      const uint32_t cols = r.u32();
      t = Tensor::matrix(rows, cols);
    }
    for (int64_t i = 0; i < t.size(); ++i) t[i] = r.f64();
    if (!rec.emplace(name, std::move(t)).second) {
      throw checkpoint_error("duplicate record '" + name + "'");
    }
  }
  if (!r.at_end()) {
    throw checkpoint_error("trailing bytes in '" + path + "' at byte " +
                           std::to_string(r.offset()));
  }

  TrainState st;
  auto wit = rec.find("meta.layer_widths");
  if (wit == rec.end()) {
    throw checkpoint_error("checkpoint is missing record 'meta.layer_widths'");
  }
  for (int64_t i = 0; i < wit->second.size(); ++i) {
    st.spec.layer_widths.push_back(static_cast<int64_t>(wit->second[i]));
  }
  rec.erase(wit);
  st.spec.data_dim = static_cast<int64_t>(take_scalar(rec, "meta.data_dim"));
  st.spec.seed = take_u64(rec, "meta.model_seed");
  st.spec.validate();
  st.epoch = static_cast<int64_t>(take_scalar(rec, "meta.epoch"));
  st.bn_eps = take_scalar(rec, "meta.bn_eps");
  st.bn_momentum = take_scalar(rec, "meta.bn_momentum");
  st.opt.t = static_cast<int64_t>(take_scalar(rec, "opt.t"));
  st.noise_seed = take_u64(rec, "rng.seed");
  st.noise_counter = take_u64(rec, "rng.counter");

  move_prefixed(rec, "param.", st.params);
  move_prefixed(rec, "stat.", st.bn_stats);
  move_prefixed(rec, "opt.m.", st.opt.m);
  move_prefixed(rec, "opt.u.", st.opt.u);
  if (!rec.empty()) {
    throw checkpoint_error("unknown record '" + rec.begin()->first + "'");
  }

  check_shapes(st.params, init_params(st.spec), "parameter");
  check_shapes(st.bn_stats, init_bn_stats(st.spec), "statistic");
  check_shapes(st.opt.m, st.params, "optimizer moment");
  check_shapes(st.opt.u, st.params, "optimizer moment");
  return st;
}

}  // namespace rgsvae
