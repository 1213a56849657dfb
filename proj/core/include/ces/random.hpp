#pragma once

// Counter-based random streams (Philox4x32-10). A stream is addressed by
// (seed, stream id); draws are a pure function of (seed, stream id, position),
// so work split into batches reproduces bit-for-bit regardless of how the
// batches are scheduled.

#include <array>
#include <cstdint>
#include <limits>

namespace ces {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Mixes a tag into a seed (splitmix64 finalizer); used to derive
/// independent seeds for sub-tasks such as bases or bootstrap resamples.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// true with probability p.
  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t stream_id_;
  std::uint64_t position_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
};

}  // namespace ces
