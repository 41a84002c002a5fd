#pragma once

// Pair sources: the (nonlocal) quantum reference sampler and local hidden
// variable sources.
//
// An LhvSource draws a hidden sample lambda and answers each station with a
// LocalResponse that depends only on (lambda, own setting). The response
// callables never see the other station's setting, so the joint outcome law
// factorizes for every lambda.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bell/core.hpp"
#include "bell/rng.hpp"

namespace bell::sources {

/// Per-side deterministic answer table, indexed by SettingLabel.
using LocalMap = std::array<Outcome, 2>;

struct DeterministicPair {
  LocalMap alice{Outcome::Plus, Outcome::Plus};
  LocalMap bob{Outcome::Plus, Outcome::Plus};
};

// Hidden sample payloads, one per model family.
struct PolarizationAngle {
  double theta = 0.0;  ///< radians in [0, pi)
};
struct StrategyIndex {
  std::size_t index = 0;
};
struct PresetOutcomes {
  Outcome alice = Outcome::Plus;
  Outcome bob = Outcome::Plus;
};
struct GuessedSettings {
  bool guessing = false;  ///< false: the always-detect branch of the mixture
  SettingLabel alice_guess = SettingLabel::Primary;
  SettingLabel bob_guess = SettingLabel::Primary;
};

struct HiddenSample {
  std::variant<PolarizationAngle, StrategyIndex, PresetOutcomes, GuessedSettings> payload;
  std::uint64_t trial_id = 0;
};

/// Detection probabilities for one station. The deficit
/// 1 - p_plus - p_minus is the no-detect probability.
struct LocalResponse {
  double p_plus = 0.0;
  double p_minus = 0.0;

  [[nodiscard]] double detection() const noexcept { return p_plus + p_minus; }
  /// Throws ModelError unless p_plus, p_minus >= 0 and p_plus + p_minus <= 1.
  void validate() const;
};

[[nodiscard]] LocalResponse deterministic_response(Outcome o) noexcept;

using Sampler = std::function<HiddenSample(RngStream&)>;
using SettingAwareSampler = std::function<HiddenSample(RngStream&, const Setting&, const Setting&)>;
using ResponseFn = std::function<LocalResponse(const HiddenSample&, const Setting&)>;

/// Local hidden variable source with a setting-independent distribution rho.
struct LhvSource {
  std::string name;
  Sampler sampler;
  ResponseFn alice_response;
  ResponseFn bob_response;
};

/// Source whose hidden-variable distribution depends on both settings.
/// Violates setting independence; only used in locality-loophole scenarios.
struct SettingDependentSource {
  std::string name;
  SettingAwareSampler sampler;
  ResponseFn alice_response;
  ResponseFn bob_response;
  static constexpr bool violates_setting_independence = true;
};

/// Quantum reference: two-stage conditional sampling of the |phi+> joint law.
/// Deliberately nonlocal; not an LHV model.
struct QuantumReference {
  std::string name = "quantum";
};

using Source = std::variant<QuantumReference, LhvSource, SettingDependentSource>;

[[nodiscard]] std::string source_name(const Source& s);
[[nodiscard]] bool is_locality_loophole(const Source& s) noexcept;

/// Samples (a, b) with P(a, b) = (1 + ab cos 2(alpha - beta)) / 4: a uniform,
/// then b = a with probability (1 + cos 2(alpha - beta)) / 2.
[[nodiscard]] std::pair<Outcome, Outcome> quantum_sample_joint(const Setting& alice,
                                                               const Setting& bob,
                                                               RngStream& rng);

/// Samples one station's outcome from its LocalResponse.
/// Throws ModelError if the response is not a valid sub-distribution.
[[nodiscard]] Outcome lhv_respond(const ResponseFn& response, const HiddenSample& lambda,
                                  const Setting& setting, RngStream& rng);

/// Samples an outcome from a LocalResponse with one uniform draw.
[[nodiscard]] Outcome sample_response(const LocalResponse& r, RngStream& rng);

/// Independent streams a single trial consumes inside the source.
struct TrialStreams {
  RngStream source;
  RngStream alice;
  RngStream bob;

  static TrialStreams for_trial(std::uint64_t seed, std::uint64_t trial_id) noexcept;
};

/// Micro outcomes (before switch and detector) of one emitted pair.
[[nodiscard]] std::pair<Outcome, Outcome> emit_pair(const Source& source, const Setting& alice,
                                                    const Setting& bob, std::uint64_t trial_id,
                                                    TrialStreams& streams);

/// lambda = theta uniform on [0, pi). Alice always detects with
/// sign(cos 2(alpha - theta)); Bob detects with probability |cos 2(beta - theta)|
/// and then answers sign(cos 2(beta - theta)). sign(0) = +1.
[[nodiscard]] LhvSource make_gg_adversary();

/// lambda = (a, b) drawn from the quantum joint law for the actual settings;
/// both stations answer deterministically with detection probability 1.
[[nodiscard]] SettingDependentSource make_locality_adversary();

/// With probability w each side guesses its setting (uniform) and detects only
/// if the actual setting matches; matched outcomes follow the table
/// (+1, +1, +1, -1). With probability 1 - w both sides always answer +1.
/// Per-side efficiency is 1 - w / 2. Throws ConfigError unless 0 <= w <= 1.
[[nodiscard]] LhvSource make_guess_mixture_adversary(double w);

/// Closed-form conditional S of the guess mixture: (2 - w) / (1 - 3w/4).
[[nodiscard]] double guess_mixture_conditional_s(double w);

/// Mixture over deterministic local strategies; lambda is the index of the
/// strategy sampled by weight. Weights must be nonnegative and sum to 1.
[[nodiscard]] LhvSource make_deterministic_mixture(std::string name,
                                                   std::vector<DeterministicPair> strategies,
                                                   std::vector<double> weights);

/// The 16 deterministic strategy pairs with full detection.
[[nodiscard]] std::vector<DeterministicPair> full_detection_strategies();

/// Random mixture over the 16 full-detection strategies. Weights are drawn
/// from a flat Dirichlet restricted to a random support of 1..16 strategies.
[[nodiscard]] LhvSource random_lhv_strategy(RngStream& rng);

/// Draws an index from a discrete distribution given by its cumulative sums.
[[nodiscard]] std::size_t sample_cumulative(std::span<const double> cumulative, RngStream& rng);

}  // namespace bell::sources
