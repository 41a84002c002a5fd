#include "bell/rng.hpp"

#include <cmath>

#include "bell/core.hpp"

namespace bell {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream), key_(mix64(seed ^ mix64(stream + kStreamSalt))) {}

RngStream RngStream::trial_stream(std::uint64_t seed, StreamRole role,
                                  std::uint64_t trial_id) noexcept {
  return RngStream(seed, (static_cast<std::uint64_t>(role) << 56) ^ trial_id);
}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
  // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant at our sizes.
  __extension__ using u128 = unsigned __int128;
  const u128 x = static_cast<u128>(next_u64()) * n;
  return static_cast<std::uint64_t>(x >> 64);
}

double RngStream::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::uint64_t RngStream::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double prod = uniform();
  while (prod > limit) {
    ++k;
    prod *= uniform();
  }
  return k;
}

RngStream RngStream::derive(std::uint64_t substream) const noexcept {
  return RngStream(seed_, mix64(stream_ ^ mix64(substream + kGamma)));
}

}  // namespace bell
