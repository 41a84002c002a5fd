#pragma once

// Maximum conditional CHSH value reachable by local hidden variables whose
// detection statistics match detectors of efficiency eta, and the critical
// efficiency at which that maximum meets a target S.
//
// Every LHV model with non-detection is a mixture of the 81 deterministic
// strategy pairs (9 local maps per side: each setting answers +1, -1 or no
// click). For mixture weights p and setting pair i:
//
//   n_i(p) = sum_k p_k * a_k b_k * [both detect]
//   d_i(p) = sum_k p_k * [both detect]
//   S(p)   = n_1/d_1 + n_2/d_2 + n_3/d_3 - n_4/d_4
//
// Efficiency scopes:
//   Klyshko  - coincidences / singles = eta for every setting pair and side
//              (how eta is measured from data; the default).
//   Marginal - each side detects with probability eta at each setting.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bell/core.hpp"
#include "bell/sources.hpp"

namespace bell::lhvopt {

inline constexpr std::size_t kLocalMapCount = 9;
inline constexpr std::size_t kStrategyCount = 81;

struct DeterministicStrategy {
  sources::LocalMap alice{};
  sources::LocalMap bob{};

  [[nodiscard]] bool detects(Station s, SettingLabel l) const noexcept {
    const auto& m = s == Station::Alice ? alice : bob;
    return bell::detected(m[label_index(l)]);
  }
};

/// The 9 local maps in canonical order: index = 3 * code(primary) +
/// code(alternate), with code(Plus) = 0, code(Minus) = 1, code(NoDetect) = 2.
[[nodiscard]] std::array<sources::LocalMap, kLocalMapCount> enumerate_local_maps() noexcept;

/// All 81 joint strategies; index = 9 * alice_map_index + bob_map_index.
[[nodiscard]] std::vector<DeterministicStrategy> enumerate_strategies();

[[nodiscard]] std::size_t local_map_index(const sources::LocalMap& m) noexcept;
[[nodiscard]] std::size_t strategy_index(const sources::LocalMap& alice,
                                         const sources::LocalMap& bob) noexcept;

/// Per-strategy coefficient vectors used by every optimizer.
struct StrategyCoefficients {
  /// a*b when both detect, else 0; [pair][strategy]
  std::array<std::array<int, kStrategyCount>, 4> numerator{};
  /// 1 when both detect; [pair][strategy]
  std::array<std::array<int, kStrategyCount>, 4> coincidence{};
  /// 1 when the side detects; [station][label][strategy]
  std::array<std::array<std::array<int, kStrategyCount>, 2>, 2> detection{};
};

[[nodiscard]] const StrategyCoefficients& strategy_coefficients();

struct StrategyMixture {
  std::vector<double> weights = std::vector<double>(kStrategyCount, 0.0);

  [[nodiscard]] static StrategyMixture point_mass(std::size_t index);
  [[nodiscard]] static StrategyMixture uniform_over(std::span<const std::size_t> indices);
  /// Throws ConfigError unless there are 81 nonnegative weights summing to 1 (1e-12
  /// after clipping negatives of magnitude <= 1e-12).
  void validate() const;
};

/// Conditional S of a mixture, generic over the scalar type so tests can use
/// exact rationals. nullopt when some setting pair has zero coincidence weight.
template <class Scalar>
[[nodiscard]] std::optional<Scalar> conditional_chsh(std::span<const Scalar> weights) {
  const auto& coef = strategy_coefficients();
  Scalar s(0);
  for (std::size_t i = 0; i < 4; ++i) {
    Scalar num(0);
    Scalar den(0);
    for (std::size_t k = 0; k < kStrategyCount && k < weights.size(); ++k) {
      num += Scalar(coef.numerator[i][k]) * weights[k];
      den += Scalar(coef.coincidence[i][k]) * weights[k];
    }
    if (den == Scalar(0)) return std::nullopt;
    s += Scalar(kChshSigns[i]) * num / den;
  }
  return s;
}

[[nodiscard]] std::optional<double> conditional_chsh(const StrategyMixture& mixture);

/// Per-side per-setting detection probabilities [station][label].
[[nodiscard]] std::array<std::array<double, 2>, 2> detection_probabilities(
    const StrategyMixture& mixture);

/// Coincidences / singles for pair i and the given side.
[[nodiscard]] std::optional<double> klyshko_efficiency(const StrategyMixture& mixture,
                                                       SettingPair pair, Station side);

/// The guess-mixture adversary as a strategy mixture: w/4 on each of the four
/// matched-guess strategies (Alice +1 on her guess, Bob the (+1,+1,+1,-1)
/// table entry on his), 1 - w on all-Plus.
[[nodiscard]] StrategyMixture guess_mixture_embedding(double w);

enum class EfficiencyScope { Klyshko, Marginal };
enum class EfficiencyRelation { Equal, AtLeast };

struct EfficiencyConstraint {
  double eta = 1.0;
  EfficiencyScope scope = EfficiencyScope::Klyshko;
  EfficiencyRelation relation = EfficiencyRelation::Equal;
};

/// Largest violation of the efficiency constraint by a mixture.
[[nodiscard]] double constraint_violation(const StrategyMixture& mixture,
                                          const EfficiencyConstraint& constraint);

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerOptions {
  /// Multistart projected-gradient fallback.
  bool run_fallback = true;
  std::size_t starts = 24;
  std::size_t iterations = 400;
  std::uint64_t seed = 20240901;
  /// LP and fallback values further apart than this are flagged.
  double agreement_tolerance = 1e-3;
};

struct OptimizationResult {
  double eta = 1.0;
  /// Equal-denominator linear program (fractional-to-linear transform).
  double s_lp = 0.0;
  StrategyMixture lp_argmax;
  /// Multistart projected gradient without the equal-denominator restriction.
  std::optional<double> s_fallback;
  std::optional<StrategyMixture> fallback_argmax;
  /// Larger of the two.
  double s_max = 0.0;
  StrategyMixture argmax;
  double gap = 0.0;
  bool flagged = false;
};

/// Throws ConfigError unless 0 < eta <= 1, InfeasibleError if no mixture
/// satisfies the constraint.
[[nodiscard]] OptimizationResult max_chsh_at_efficiency(const EfficiencyConstraint& constraint,
                                                        const OptimizerOptions& options = {});

[[nodiscard]] OptimizationResult max_chsh_at_efficiency(double eta,
                                                        const OptimizerOptions& options = {});

/// Equal-denominator LP only.
[[nodiscard]] std::pair<double, StrategyMixture> solve_equal_denominator_lp(
    const EfficiencyConstraint& constraint);

/// Fallback only: best of `starts` projected-gradient ascents from random
/// interior points. nullopt if no start reached a point with all denominators
/// positive.
[[nodiscard]] std::optional<std::pair<double, StrategyMixture>> solve_multistart(
    const EfficiencyConstraint& constraint, const OptimizerOptions& options);

/// min(4, 4/eta - 2).
[[nodiscard]] double closed_form_s_max(double eta) noexcept;

struct CriticalOptions {
  double lo = 0.5;
  double hi = 1.0;
  double tolerance = 1e-4;
  EfficiencyScope scope = EfficiencyScope::Klyshko;
  OptimizerOptions optimizer{.run_fallback = false};
};

/// Smallest efficiency at which the LHV maximum no longer reaches target_s,
/// found by bisection on eta -> S_max(eta) - target_s over [lo, hi].
/// Returns hi when S_max(hi) still reaches the target (target 2 -> 1.0).
/// Throws ConfigError for target outside [2, 4] or a non-bracketing interval.
[[nodiscard]] double critical_efficiency(double target_s, const CriticalOptions& options = {});

struct ScanPoint {
  double eta = 0.0;
  double s_lp = 0.0;
  std::optional<double> s_fallback;
  double s_max = 0.0;
  double gap = 0.0;
  bool flagged = false;
};

/// Evaluates each grid point independently (in parallel when workers > 1).
[[nodiscard]] std::vector<ScanPoint> scan_efficiency(const std::vector<double>& etas,
                                                     EfficiencyScope scope,
                                                     const OptimizerOptions& options,
                                                     unsigned workers = 1);

/// LhvSource whose lambda is a strategy index drawn by weight.
[[nodiscard]] sources::LhvSource realize_adversary(const StrategyMixture& mixture);

}  // namespace bell::lhvopt
