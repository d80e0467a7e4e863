#include "rgsvae/rng.hpp"

#include <cmath>

namespace rgsvae {

namespace {

// splitmix64 finalizer; statelessly mixes a 64-bit index into a word.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

uint64_t CounterRng::next_u64() { return mix64(seed_ ^ mix64(counter_++)); }

double CounterRng::next_uniform() {
  // 53-bit mantissa, offset to stay inside the open interval.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

uint64_t CounterRng::next_below(uint64_t n) {
  // Rejection-free multiply-shift; bias is negligible for n << 2^64 and the
  // mapping stays a pure function of the counter.
  const uint64_t r = next_u64();
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(r) * n) >> 64);
}

void CounterRng::fill_normal(Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] = next_normal();
}

uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index) {
  uint64_t h = mix64(base);
  for (char c : label) h = mix64(h ^ static_cast<unsigned char>(c));
  return mix64(h ^ mix64(index));
}

}  // namespace rgsvae
