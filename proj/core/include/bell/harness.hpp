#pragma once

// Configuration, scenario orchestration and the bell_lab commands.
//
// Exit codes: 0 success, 2 config or parse error, 3 I/O error,
// 4 analysis undefined (a setting pair without coincidences).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bell/analysis.hpp"
#include "bell/apparatus.hpp"
#include "bell/core.hpp"
#include "bell/lhvopt.hpp"
#include "bell/sources.hpp"

namespace bell::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitAnalysis = 4;

inline constexpr int kResultsSchemaVersion = 1;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourceKind { Quantum, GgAdversary, LocalityAdversary, GuessMixture, RandomLhv, OptimalLhv };

[[nodiscard]] std::string_view to_string(SourceKind k) noexcept;

struct SourceSpec {
  SourceKind kind = SourceKind::Quantum;
  /// guess_mixture
  double w = 0.5;
  /// optimal_lhv
  double eta = 0.8284;
  /// random_lhv
  std::uint64_t strategy_seed = 1;
};

struct AnglesDeg {
  double a = 0.0;
  double a2 = 45.0;
  double b = 22.5;
  double b2 = -22.5;

  [[nodiscard]] AngleSet to_angle_set() const;
};

struct StationSpec {
  apparatus::SwitchKind switch_kind = apparatus::SwitchKind::Active;
  double transmission = 1.0;
  double efficiency = 1.0;
  double dark_rate = 0.0;
  double jitter_ns = 1.0;
  std::int64_t delay_ns = 0;
};

struct ExperimentConfig {
  SourceSpec source;
  AnglesDeg angles;
  StationSpec alice;
  StationSpec bob;
  std::uint64_t n_trials = 0;
  std::uint64_t seed = 0;
  std::int64_t period_ns = 1000;
  /// Defaults to period_ns / 4.
  std::optional<std::int64_t> window_ns;
  analysis::Estimator estimator = analysis::Estimator::Conditional;
  double k_sigma = 3.0;
  std::filesystem::path out_dir = ".";
  std::string description;

  [[nodiscard]] std::int64_t effective_window_ns() const noexcept {
    return window_ns.value_or(period_ns / 4);
  }
  [[nodiscard]] apparatus::StationConfig station(Station s) const;
  /// Fully resolved configuration (defaults filled, output fields omitted)
  /// with sorted keys; the config hash is computed over this text.
  [[nodiscard]] std::string canonical_json() const;
  [[nodiscard]] std::string hash() const;
};

/// Parses and validates a config document. Unknown keys are rejected.
/// Throws ConfigError whose message names the line/column or field path.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);

/// Throws IoError if the file cannot be read, ConfigError if it is invalid.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

[[nodiscard]] sources::Source build_source(const SourceSpec& spec);

/// Estimates of one analysis pass over a coincidence table.
struct AnalysisReport {
  analysis::CoincidenceTable table;
  analysis::Estimator estimator = analysis::Estimator::Conditional;
  double k_sigma = 3.0;
  analysis::ChshResult primary;
  std::optional<analysis::ChshResult> conditional;
  std::optional<analysis::ChshResult> all_trials;
  std::optional<analysis::EfficiencyEstimate> efficiency;
};

/// Throws analysis::AnalysisError for a pair without coincidences.
[[nodiscard]] AnalysisReport analyze_table(const analysis::CoincidenceTable& table,
                                           analysis::Estimator estimator, double k_sigma);

struct ScenarioResult {
  apparatus::ExperimentRun run;
  analysis::PairingResult pairing;
  AnalysisReport report;
};

/// Simulate, pair in memory and analyze. Throws AnalysisError when a pair has
/// no coincidences.
[[nodiscard]] ScenarioResult run_scenario(const ExperimentConfig& config);

struct ResultsContext {
  std::string command;
  std::string source;
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> n_trials;
  std::string config_hash;
  std::int64_t window_ns = 0;
};

[[nodiscard]] std::string results_json(const ResultsContext& context,
                                       const analysis::PairingResult& pairing,
                                       const AnalysisReport& report);
[[nodiscard]] std::string results_csv(const AnalysisReport& report);
[[nodiscard]] std::string metadata_json(const apparatus::RunMetadata& meta);
[[nodiscard]] apparatus::RunMetadata parse_metadata_json(std::string_view text);

// ---- commands ---------------------------------------------------------------

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::int64_t> window_ns;
  std::optional<analysis::Estimator> estimator;
};

/// Writes alice.ndjson, bob.ndjson, metadata.json, results.json, results.csv.
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err);

struct AnalyzeOptions {
  std::filesystem::path alice_log;
  std::filesystem::path bob_log;
  std::optional<std::filesystem::path> metadata;
  std::filesystem::path out_dir = ".";
  /// Defaults to the header period / 4.
  std::optional<std::int64_t> window_ns;
  analysis::Estimator estimator = analysis::Estimator::Conditional;
  double k_sigma = 3.0;
};

int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);

struct GridSpec {
  double lo = 0.55;
  double hi = 1.0;
  double step = 0.05;

  [[nodiscard]] std::vector<double> points() const;
};

/// "lo:hi:step" or a single value.
[[nodiscard]] GridSpec parse_grid(std::string_view text);

struct ScanOptions {
  GridSpec grid;
  double target_s = 2.0 * 1.41421356237309504880;
  lhvopt::EfficiencyScope scope = lhvopt::EfficiencyScope::Klyshko;
  lhvopt::EfficiencyRelation relation = lhvopt::EfficiencyRelation::Equal;
  bool fallback = true;
  /// Monte Carlo overlay trials per grid point (0 disables).
  std::uint64_t mc_trials = 0;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
};

/// Writes scan_eta.csv and scan_eta.json.
int cmd_scan_eta(const ScanOptions& options, std::ostream& out, std::ostream& err);

struct CompareOptions {
  double active_transmission = 0.5;
  double passive_transmission = 1.0;
  double efficiency = 1.0;
  std::uint64_t n = 1'000'000;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> out_dir;
};

struct SwitchComparison {
  double closed_form_max_diff = 0.0;
  analysis::EmpiricalDistribution active;
  analysis::EmpiricalDistribution passive;
  analysis::StationComparison monte_carlo;
  bool indistinguishable = false;
};

/// Closed-form comparison over a grid of analyser-level laws, plus a
/// two-sample Monte Carlo TV test.
[[nodiscard]] SwitchComparison compare_switches(const CompareOptions& options);

/// Samples n trials of a lone station fed with uniform +/-1 micro outcomes;
/// cells are (setting, outcome) including no-detect.
[[nodiscard]] analysis::EmpiricalDistribution sample_station(const apparatus::StationConfig& config,
                                                             std::uint64_t n, std::uint64_t seed,
                                                             StreamRole role);

int cmd_compare_switch(const CompareOptions& options, std::ostream& out, std::ostream& err);

}  // namespace bell::harness
