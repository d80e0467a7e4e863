#include "rgsvae/idx.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rgsvae/model.hpp"

namespace rgsvae {

namespace {

uint32_t read_u32_be(const std::vector<uint8_t>& b, size_t off) {
  if (off + 4 > b.size()) {
    throw idx_parse_error("truncated stream while reading u32", off);
  }
  return (static_cast<uint32_t>(b[off]) << 24) |
         (static_cast<uint32_t>(b[off + 1]) << 16) |
         (static_cast<uint32_t>(b[off + 2]) << 8) |
         static_cast<uint32_t>(b[off + 3]);
}

void push_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

}  // namespace

IdxArray parse_idx(const std::vector<uint8_t>& bytes) {
  IdxArray a;
  a.magic = read_u32_be(bytes, 0);
  size_t ndims;
  if (a.magic == 0x00000803u) {
    ndims = 3;
  } else if (a.magic == 0x00000801u) {
    ndims = 1;
  } else {
    throw idx_parse_error("unsupported IDX magic 0x" + [m = a.magic] {
                            char buf[16];
                            std::snprintf(buf, sizeof buf, "%08x", m);
                            return std::string(buf);
                          }(),
                          0);
  }
  size_t off = 4;
  uint64_t count = 1;
  for (size_t i = 0; i < ndims; ++i) {
    const uint32_t d = read_u32_be(bytes, off);
    a.dims.push_back(d);
    count *= d;
    off += 4;
  }
  if (bytes.size() - off != count) {
    throw idx_parse_error("payload size " + std::to_string(bytes.size() - off) +
                              " does not match dims product " +
                              std::to_string(count),
                          off);
  }
  a.payload.assign(bytes.begin() + static_cast<ptrdiff_t>(off), bytes.end());
  return a;
}

IdxArray parse_idx_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IDX file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

std::vector<uint8_t> serialize_idx(const IdxArray& a) {
  std::vector<uint8_t> out;
  push_u32_be(out, a.magic);
  uint64_t count = 1;
  for (uint32_t d : a.dims) {
    push_u32_be(out, d);
    count *= d;
  }
  if (a.payload.size() != count) {
    throw std::invalid_argument("serialize_idx: payload/dims mismatch");
  }
  out.insert(out.end(), a.payload.begin(), a.payload.end());
  return out;
}

void write_idx_file(const IdxArray& a, const std::string& path) {
  const std::vector<uint8_t> bytes = serialize_idx(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write IDX file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

BinarizeMode parse_binarize_mode(const std::string& s) {
  if (s == "static") return BinarizeMode::kStaticThreshold;
  if (s == "stochastic") return BinarizeMode::kStochastic;
  throw std::invalid_argument("unknown binarize mode '" + s +
                              "' (expected static|stochastic)");
}

std::string to_string(BinarizeMode m) {
  return m == BinarizeMode::kStaticThreshold ? "static" : "stochastic";
}

BinaryDataset binarize(const IdxArray& images, BinarizeMode mode,
                       double threshold, CounterRng& rng,
                       const std::string& split) {
  if (images.magic != 0x00000803u || images.dims.size() != 3) {
    throw std::invalid_argument("binarize: expected a 3-D image IDX array");
  }
  BinaryDataset ds;
  ds.n = images.dims[0];
  ds.img_rows = images.dims[1];
  ds.img_cols = images.dims[2];
  ds.d = ds.img_rows * ds.img_cols;
  ds.split = split;
  ds.rows.resize(static_cast<size_t>(ds.n * ds.d));
  for (int64_t i = 0; i < ds.n * ds.d; ++i) {
    const double p = images.payload[static_cast<size_t>(i)] / 255.0;
    if (mode == BinarizeMode::kStaticThreshold) {
      ds.rows[static_cast<size_t>(i)] = p > threshold ? 1 : 0;
    } else {
      ds.rows[static_cast<size_t>(i)] = rng.next_uniform() < p ? 1 : 0;
    }
  }
  return ds;
}

BinaryDataset take(const BinaryDataset& ds, int64_t m) {
  if (m <= 0 || m >= ds.n) return ds;
  BinaryDataset out = ds;
  out.n = m;
  out.rows.assign(ds.rows.begin(), ds.rows.begin() + m * ds.d);
  return out;
}

Tensor make_batch(const BinaryDataset& ds,
                  const std::vector<int64_t>& indices) {
  Tensor x = Tensor::matrix(ds.d, static_cast<int64_t>(indices.size()));
  for (size_t c = 0; c < indices.size(); ++c) {
    const int64_t row = indices[c];
    for (int64_t i = 0; i < ds.d; ++i) {
      x(i, static_cast<int64_t>(c)) = static_cast<double>(ds.at(row, i));
    }
  }
  return x;
}

Tensor make_column(const BinaryDataset& ds, int64_t row) {
  Tensor x = Tensor::matrix(ds.d, 1);
  for (int64_t i = 0; i < ds.d; ++i) {
    x(i, 0) = static_cast<double>(ds.at(row, i));
  }
  return x;
}

IdxArray dataset_to_idx(const BinaryDataset& ds) {
  IdxArray a;
  a.magic = 0x00000803u;
  a.dims = {static_cast<uint32_t>(ds.n), static_cast<uint32_t>(ds.img_rows),
            static_cast<uint32_t>(ds.img_cols)};
  a.payload.resize(ds.rows.size());
  for (size_t i = 0; i < ds.rows.size(); ++i) {
    a.payload[i] = ds.rows[i] ? 255 : 0;
  }
  return a;
}

BinaryDataset synth_generate(const ModelSpec& spec, const TensorMap& params,
                             const TensorMap& bn_stats, double bn_eps,
                             int64_t n, uint64_t seed) {
  BinaryDataset ds;
  // Square image geometry when possible, single row otherwise.
  const auto side = static_cast<int64_t>(std::lround(std::sqrt(
      static_cast<double>(spec.data_dim))));
  if (side * side == spec.data_dim) {
    ds.img_rows = side;
    ds.img_cols = side;
  } else {
    ds.img_rows = 1;
    ds.img_cols = spec.data_dim;
  }
  ds.n = n;
  ds.d = spec.data_dim;
  ds.split = "synthetic";
  ds.rows.resize(static_cast<size_t>(n * spec.data_dim));
  if (n == 0) return ds;

  CounterRng latent_rng(derive_seed(seed, "synth-latent"));
  CounterRng pixel_rng(derive_seed(seed, "synth-pixel"));
  constexpr int64_t kChunk = 1024;
  for (int64_t done = 0; done < n; done += kChunk) {
    const int64_t b = std::min(kChunk, n - done);
    AncestralSample s =
        ancestral_sample(spec, params, bn_stats, bn_eps, b, latent_rng);
    for (int64_t c = 0; c < b; ++c) {
      for (int64_t i = 0; i < spec.data_dim; ++i) {
        const double u = pixel_rng.next_uniform();
        ds.rows[static_cast<size_t>((done + c) * spec.data_dim + i)] =
            u < s.x_probs(i, c) ? 1 : 0;
      }
    }
  }
  return ds;
}

}  // namespace rgsvae
