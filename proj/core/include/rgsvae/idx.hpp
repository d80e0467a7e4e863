#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgsvae/rng.hpp"
#include "rgsvae/tensor.hpp"

namespace rgsvae {

struct ModelSpec;
class TensorMap;

/// Structured failure while decoding an IDX stream; carries the byte offset
/// where decoding stopped.
struct idx_parse_error : std::runtime_error {
  idx_parse_error(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  size_t byte_offset;
};

/// Raw IDX container: big-endian magic and dims, unsigned byte payload.
/// Supported magics: 0x00000803 (3-D images) and 0x00000801 (1-D labels).
struct IdxArray {
  uint32_t magic = 0;
  std::vector<uint32_t> dims;
  std::vector<uint8_t> payload;
};

IdxArray parse_idx(const std::vector<uint8_t>& bytes);
IdxArray parse_idx_file(const std::string& path);
std::vector<uint8_t> serialize_idx(const IdxArray& a);
void write_idx_file(const IdxArray& a, const std::string& path);

/// Flattened binary dataset: n rows of d entries in {0, 1}, row k of the
/// dataset always corresponding to image k of the source file.
struct BinaryDataset {
  int64_t n = 0;
  int64_t d = 0;
  int64_t img_rows = 0;
  int64_t img_cols = 0;
  std::string split;  // "train" or "test"
  std::vector<uint8_t> rows;

  uint8_t at(int64_t row, int64_t col) const { return rows[row * d + col]; }
};

enum class BinarizeMode { kStaticThreshold, kStochastic };

BinarizeMode parse_binarize_mode(const std::string& s);
std::string to_string(BinarizeMode m);

/// Static mode: pixel/255 > threshold. Stochastic mode: 1 with probability
/// pixel/255, using the supplied seeded generator (re-invoked by the caller
/// at epoch boundaries).
BinaryDataset binarize(const IdxArray& images, BinarizeMode mode,
                       double threshold, CounterRng& rng,
                       const std::string& split);

/// First m rows (all rows if m <= 0 or m >= n).
BinaryDataset take(const BinaryDataset& ds, int64_t m);

/// Columns batch [d x |indices|] of the selected rows, as doubles in {0, 1}.
Tensor make_batch(const BinaryDataset& ds, const std::vector<int64_t>& indices);
Tensor make_column(const BinaryDataset& ds, int64_t row);

/// Re-encodes a binary dataset as a 3-D IDX array with pixels {0, 255}, so
/// that static re-binarization is idempotent.
IdxArray dataset_to_idx(const BinaryDataset& ds);

/// n ancestral draws from the model with Bernoulli-sampled pixels.
BinaryDataset synth_generate(const ModelSpec& spec, const TensorMap& params,
                             const TensorMap& bn_stats, double bn_eps,
                             int64_t n, uint64_t seed);

}  // namespace rgsvae
