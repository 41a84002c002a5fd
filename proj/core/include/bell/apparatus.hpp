#pragma once

// Station models: active or passive switch in front of two analysers, finite
// detector efficiency, Poisson dark counts and timestamp jitter.
//
// Active switch: the photon goes to the analyser selected by the setting and
// survives the switch with probability `transmission`.
// Passive switch: the photon survives with probability `transmission`, then a
// 50/50 coupler sends it to one of the two analysers. Only the selected
// analyser's detectors are on; photons sent to the other one are never
// recorded.

#include <array>
#include <cstdint>
#include <string>

#include "bell/core.hpp"
#include "bell/event_log.hpp"
#include "bell/rng.hpp"
#include "bell/sources.hpp"

namespace bell::apparatus {

enum class SwitchKind : std::uint8_t { Active, Passive };

struct SwitchConfig {
  SwitchKind kind = SwitchKind::Active;
  double transmission = 1.0;
};

struct DetectorConfig {
  double efficiency = 1.0;
  /// Expected dark counts per detector per trial slot.
  double dark_rate = 0.0;
};

struct StationConfig {
  Station station = Station::Alice;
  SwitchConfig switch_config;
  DetectorConfig detectors;
  Angle primary;
  Angle alternate;
  double jitter_ns = 1.0;
  std::int64_t delay_ns = 0;

  [[nodiscard]] Setting setting(SettingLabel l) const noexcept {
    return {station, l, l == SettingLabel::Primary ? primary : alternate};
  }
  /// Throws ConfigError on out-of-range probabilities, rates or jitter.
  void validate() const;
};

/// Ideal station: active switch, lossless, perfect detectors, no dark counts.
[[nodiscard]] StationConfig ideal_station(Station station, Angle primary, Angle alternate);

/// Probability law over {Plus, Minus, NoDetect}.
struct OutcomeDistribution {
  double plus = 0.0;
  double minus = 0.0;
  double no_detect = 1.0;

  /// Throws ConfigError unless entries are nonnegative and sum to 1 (1e-9).
  void validate() const;
  [[nodiscard]] double operator[](Outcome o) const noexcept;
};

/// Exact per-trial outcome law of a station given the analyser-level law.
/// Dark counts are excluded; they are added in the log layer.
[[nodiscard]] OutcomeDistribution outcome_distribution(const StationConfig& config,
                                                       const OutcomeDistribution& p_micro);

/// Probability that a photon reaching the station is handed to the selected
/// analyser's detectors and registered: T * eta (active), T * eta / 2 (passive).
[[nodiscard]] double survival_probability(const StationConfig& config) noexcept;

/// Time slot owned by one trial at one station: [begin, end).
struct TrialSlot {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

[[nodiscard]] constexpr std::int64_t emission_time(std::uint64_t trial_id,
                                                   std::int64_t period_ns) noexcept {
  return static_cast<std::int64_t>(trial_id + 1) * period_ns;
}

[[nodiscard]] TrialSlot trial_slot(const StationConfig& config, std::int64_t t_emit,
                                   std::int64_t period_ns) noexcept;

/// One station, one trial. Applies switch routing and loss, detector gating,
/// efficiency, then dark counts, in that order. The returned event carries
/// Outcome::NoDetect when nothing fired; such events are not logged.
/// Real detections are stamped t_emit + delay + jitter, clamped to the slot.
/// If a dark count and a real detection share the slot, the earlier one wins.
[[nodiscard]] LocalEvent station_trial(const StationConfig& config, std::uint64_t trial_id,
                                       SettingLabel setting, Outcome micro, RngStream& rng,
                                       std::int64_t t_emit, std::int64_t period_ns);

struct RunOptions {
  std::uint64_t n_trials = 0;
  std::uint64_t seed = 0;
  std::int64_t period_ns = 1000;
  /// 0 picks worker_count().
  unsigned threads = 0;
  /// Written into both log headers; computed from the run description when empty.
  std::string config_hash;
};

/// Simulation-side truth that real logs do not carry.
struct RunMetadata {
  std::uint64_t n_trials = 0;
  std::array<std::uint64_t, 4> pair_trials{};
  /// [station][setting label]
  std::array<std::array<std::uint64_t, 2>, 2> setting_trials{};
  std::string scenario;
};

struct ExperimentRun {
  EventLog alice;
  EventLog bob;
  RunMetadata metadata;
};

/// Full pipeline: per trial both stations draw a fresh uniform setting, the
/// source emits micro outcomes (setting-dependent sources see both settings),
/// and each station turns them into a local event. Logs are identical for any
/// thread count. Throws ConfigError when n_trials == 0 or a config is invalid.
[[nodiscard]] ExperimentRun run_experiment(const sources::Source& source,
                                           const StationConfig& alice, const StationConfig& bob,
                                           const RunOptions& options);

/// Canonical text of a run description, hashed into log headers by default.
[[nodiscard]] std::string describe_run(const sources::Source& source, const StationConfig& alice,
                                       const StationConfig& bob, const RunOptions& options);

}  // namespace bell::apparatus
