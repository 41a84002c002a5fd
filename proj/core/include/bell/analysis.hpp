#pragma once

// Offline analysis: pair two station logs into coincidences, estimate
// correlations and S, estimate efficiencies, compare station variants.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bell/core.hpp"
#include "bell/event_log.hpp"

namespace bell::apparatus {
struct RunMetadata;
}

namespace bell::analysis {

/// A correlation is undefined because a setting pair has no coincidences.
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(SettingPair pair, const std::string& what);
  [[nodiscard]] SettingPair pair() const noexcept { return pair_; }

 private:
  SettingPair pair_;
};

/// Cell order inside each setting pair.
enum class Cell : std::uint8_t { PlusPlus = 0, PlusMinus = 1, MinusPlus = 2, MinusMinus = 3 };

[[nodiscard]] constexpr std::size_t cell_index(Outcome a, Outcome b) noexcept {
  return (a == Outcome::Plus ? 0u : 2u) + (b == Outcome::Plus ? 0u : 1u);
}

struct CoincidenceTable {
  /// counts[pair_index][cell_index]
  std::array<std::array<std::uint64_t, 4>, 4> counts{};
  /// singles[station][label]: recorded events, including dark counts.
  std::array<std::array<std::uint64_t, 2>, 2> singles{};
  /// Trials per setting pair (simulation metadata only).
  std::optional<std::array<std::uint64_t, 4>> pair_trials;
  /// Trials per station per setting (simulation metadata or log headers).
  std::optional<std::array<std::array<std::uint64_t, 2>, 2>> setting_trials;

  [[nodiscard]] std::uint64_t total(SettingPair p) const noexcept;
  [[nodiscard]] std::uint64_t count(SettingPair p, Outcome a, Outcome b) const noexcept {
    return counts[pair_index(p)][cell_index(a, b)];
  }
  void add(SettingPair p, Outcome a, Outcome b, std::uint64_t n = 1) noexcept {
    counts[pair_index(p)][cell_index(a, b)] += n;
  }

  friend bool operator==(const CoincidenceTable&, const CoincidenceTable&) = default;
};

/// Copies true trial counts into the table.
void attach_metadata(CoincidenceTable& table, const apparatus::RunMetadata& meta);

struct PairingOptions {
  /// Fraction of events with more than one candidate partner above which a
  /// warning is emitted.
  double max_ambiguity_rate = 0.01;
};

struct PairingResult {
  CoincidenceTable table;
  /// (alice trial_id, bob trial_id) per coincidence, in Alice time order.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> matches;
  std::size_t ambiguous_events = 0;
  double ambiguity_rate = 0.0;
  std::vector<std::string> warnings;

  /// Matches whose trial ids differ.
  [[nodiscard]] std::size_t mismatches() const noexcept;
};

/// Greedy nearest-timestamp matching: events pair iff |tA - tB| <= window_ns,
/// closest pairs first, each event used at most once; ties go to the smaller
/// tA, then the smaller Alice trial id. Setting trial counts are copied from
/// the log headers when both carry them. Throws ConfigError for a negative window.
[[nodiscard]] PairingResult pair_coincidences(const EventLog& alice, const EventLog& bob,
                                              std::int64_t window_ns,
                                              const PairingOptions& options = {});

enum class Estimator : std::uint8_t {
  /// C(a,b) = N(a,b) / N_coincidences(pair): fair-sampling convention.
  Conditional,
  /// C(a,b) = N(a,b) / N_trials(pair): undetected trials count as zero.
  AllTrials,
};

[[nodiscard]] std::string_view to_string(Estimator e) noexcept;
[[nodiscard]] std::optional<Estimator> parse_estimator(std::string_view s) noexcept;

struct CorrelationEstimate {
  double e = 0.0;
  double stderr_e = 0.0;
  /// Normalization: coincidences (conditional) or trials (all-trials).
  std::uint64_t n = 0;
};

/// E = C(+,+) + C(-,-) - C(+,-) - C(-,+).
/// Conditional: stderr = sqrt((1 - E^2) / N). All-trials: per-trial variable
/// X in {+1, -1, 0}, stderr = sqrt((mean X^2 - E^2) / N_trials).
/// Throws AnalysisError when the pair has no coincidences, ConfigError when
/// the all-trials estimator lacks trial counts.
[[nodiscard]] CorrelationEstimate correlation(const CoincidenceTable& table, SettingPair pair,
                                              Estimator estimator = Estimator::Conditional);

struct ChshResult {
  CorrelationSet e;
  std::array<double, 4> stderr_e{};
  std::array<std::uint64_t, 4> n{};
  double s = 0.0;
  double stderr_s = 0.0;
  double k_sigma = 3.0;
  /// S - 2 > k * stderr_s
  bool violates = false;
};

[[nodiscard]] ChshResult chsh(const CoincidenceTable& table,
                              Estimator estimator = Estimator::Conditional, double k_sigma = 3.0);

/// detected / emitted, [station][label].
struct EfficiencyEstimate {
  std::array<std::array<double, 2>, 2> efficiency{};
};

/// nullopt when the table carries no trial counts (real-log mode).
[[nodiscard]] std::optional<EfficiencyEstimate> efficiency_estimate(const CoincidenceTable& table);

/// Fraction of trials in which a station logged a dark-count event.
[[nodiscard]] double dark_event_fraction(const EventLog& log, std::uint64_t n_trials);

struct EmpiricalDistribution {
  std::vector<std::string> cells;
  std::vector<std::uint64_t> counts;

  [[nodiscard]] std::uint64_t total() const noexcept;
};

struct StationComparison {
  double tv_distance = 0.0;
  /// 5 * sqrt(cells / N), N the smaller sample size.
  double bound = 0.0;
  bool consistent = false;
  /// False when the bound is >= 1 and the test cannot discriminate.
  bool sufficient = false;
};

/// Total-variation distance between two empirical distributions over the same
/// cells. Throws ConfigError when the cell structures differ or a sample is empty.
[[nodiscard]] StationComparison compare_stations(const EmpiricalDistribution& first,
                                                 const EmpiricalDistribution& second);

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bell::analysis
