#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rhoest {

/// Counter-based generator (Philox4x32-10). A stream is addressed by
/// (seed, stream id); draws within a stream are addressed by a 64-bit
/// position counter. Streams derived from distinct ids are independent
/// and the draw sequence does not depend on thread count or call site.
class Rng {
public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform draw in the open interval (0,1), 53-bit resolution.
  double uniform01();

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via the inverse-CDF method (Wichura's PPND16).
  double normal();

  /// Exponential with rate theta > 0.
  double exponential(double theta);

  /// Index draw from an unnormalized weight vector.
  std::size_t discrete(std::span<const double> weights);

  bool bernoulli(double p);

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_;
  int cursor_;
};

/// Stream-id composition used across the library so that every
/// (replicate, role, slot) triple maps to a distinct Philox stream.
enum class StreamRole : std::uint64_t {
  data = 1,
  data_holdout = 2,
  contamination_mask = 3,
  contamination_draw = 4,
  model_setup = 5,
};

constexpr std::uint64_t stream_id(StreamRole role, std::uint64_t replicate,
                                  std::uint64_t slot = 0) {
  return (static_cast<std::uint64_t>(role) << 56) | (slot << 32) | replicate;
}

/// Inverse of the standard normal CDF (PPND16, accurate to ~1e-15).
double inverse_normal_cdf(double p);

}  // namespace rhoest
