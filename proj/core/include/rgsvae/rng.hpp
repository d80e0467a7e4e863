#pragma once

#include <cstdint>
#include <string_view>

#include "rgsvae/tensor.hpp"

namespace rgsvae {

/// Counter-indexed pseudo-random generator. Every output is a pure function
/// of (seed, counter), so a stream can be checkpointed by storing the two
/// integers and resumed bit-exactly.
class CounterRng {
 public:
  CounterRng() : CounterRng(0) {}
  explicit CounterRng(uint64_t seed, uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

  uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double next_uniform();
  /// Standard normal draw via Box-Muller (consumes two counter slots).
  double next_normal();
  /// Uniform integer in [0, n), n >= 1.
  uint64_t next_below(uint64_t n);

  /// Fills a tensor with standard normals in row-major order.
  void fill_normal(Tensor& t);

 private:
  uint64_t seed_;
  uint64_t counter_;
};

/// Derives an independent stream seed from a base seed and a label, so the
/// shuffle / init / noise / eval streams never collide.
uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index = 0);

}  // namespace rgsvae
