#pragma once

// Counter-based random streams.
//
// Generator: SplitMix64. Each stream is keyed by (seed, stream id); draw i of
// a stream is mix64(key + (i + 1) * 0x9E3779B97F4A7C15) where mix64 is the
// SplitMix64 finalizer and key = mix64(seed ^ mix64(stream + 0xD1B54A32D192ED03)).
// Only integer arithmetic is involved, so identical (seed, stream, draw index)
// gives identical 64-bit values on every platform.
//
// Per-trial streams are derived with trial_stream(role, trial_id). Workers can
// process any subset of trials in any order and still reproduce the
// single-worker output.

#include <cstdint>

namespace bell {

/// Roles of the independent random streams used by a simulated trial.
enum class StreamRole : std::uint64_t {
  Source = 1,
  AliceSetting = 2,
  BobSetting = 3,
  AliceResponse = 4,
  BobResponse = 5,
  AliceStation = 6,
  BobStation = 7,
  Optimizer = 8,
  Generator = 9,
};

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  /// Stream for one role of one trial.
  static RngStream trial_stream(std::uint64_t seed, StreamRole role, std::uint64_t trial_id) noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
  [[nodiscard]] std::uint64_t draw_index() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Standard normal (Box-Muller, one value per two uniforms).
  double normal() noexcept;
  /// Poisson(mean) by multiplication of uniforms; intended for small means.
  std::uint64_t poisson(double mean) noexcept;

  /// Independent child stream.
  [[nodiscard]] RngStream derive(std::uint64_t substream) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bell
