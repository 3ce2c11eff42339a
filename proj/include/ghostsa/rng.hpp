#pragma once

#include <cstdint>
#include <limits>

namespace ghostsa {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent key and a counter.
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(key) ^ mix64(counter ^ 0xd1b54a32d192ed03ULL));
}

/// Counter-based random stream. Output k of a stream is a pure function of
/// (key, k), so any position can be reproduced without replaying the stream.
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return derive_seed(key_, counter_++); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (stateless: consumes two outputs per call).
  double normal();

  /// A child stream keyed by the next output of this one.
  Rng split() { return Rng((*this)()); }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ghostsa
