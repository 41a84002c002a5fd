#include "bell/sources.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace bell::sources {

namespace {

double sign_of(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

Outcome outcome_of_sign(double s) noexcept { return s > 0 ? Outcome::Plus : Outcome::Minus; }

constexpr std::array<int, 4> kGuessTable{+1, +1, +1, -1};

}  // namespace

void LocalResponse::validate() const {
  constexpr double kSlack = 1e-12;
  if (!(p_plus >= 0.0) || !(p_minus >= 0.0) || !(p_plus + p_minus <= 1.0 + kSlack)) {
    throw ModelError("local response outside the simplex: p_plus=" + std::to_string(p_plus) +
                     " p_minus=" + std::to_string(p_minus));
  }
}

LocalResponse deterministic_response(Outcome o) noexcept {
  switch (o) {
    case Outcome::Plus:
      return {1.0, 0.0};
    case Outcome::Minus:
      return {0.0, 1.0};
    case Outcome::NoDetect:
      break;
  }
  return {0.0, 0.0};
}

std::string source_name(const Source& s) {
  return std::visit([](const auto& v) { return v.name; }, s);
}

bool is_locality_loophole(const Source& s) noexcept {
  return std::holds_alternative<SettingDependentSource>(s);
}

std::pair<Outcome, Outcome> quantum_sample_joint(const Setting& alice, const Setting& bob,
                                                 RngStream& rng) {
  const Outcome a = rng.uniform() < 0.5 ? Outcome::Plus : Outcome::Minus;
  const double p_same = 0.5 * (1.0 + quantum_correlation(alice.angle, bob.angle));
  const bool same = rng.uniform() < p_same;
  const Outcome b = same ? a : (a == Outcome::Plus ? Outcome::Minus : Outcome::Plus);
  return {a, b};
}

Outcome sample_response(const LocalResponse& r, RngStream& rng) {
  const double u = rng.uniform();
  if (u < r.p_plus) return Outcome::Plus;
  if (u < r.p_plus + r.p_minus) return Outcome::Minus;
  return Outcome::NoDetect;
}

Outcome lhv_respond(const ResponseFn& response, const HiddenSample& lambda, const Setting& setting,
                    RngStream& rng) {
  const LocalResponse r = response(lambda, setting);
  r.validate();
  return sample_response(r, rng);
}

TrialStreams TrialStreams::for_trial(std::uint64_t seed, std::uint64_t trial_id) noexcept {
  return {RngStream::trial_stream(seed, StreamRole::Source, trial_id),
          RngStream::trial_stream(seed, StreamRole::AliceResponse, trial_id),
          RngStream::trial_stream(seed, StreamRole::BobResponse, trial_id)};
}

std::pair<Outcome, Outcome> emit_pair(const Source& source, const Setting& alice,
                                      const Setting& bob, std::uint64_t trial_id,
                                      TrialStreams& streams) {
  struct Visitor {
    const Setting& alice;
    const Setting& bob;
    std::uint64_t trial_id;
    TrialStreams& streams;

    std::pair<Outcome, Outcome> operator()(const QuantumReference&) const {
      return quantum_sample_joint(alice, bob, streams.source);
    }
    std::pair<Outcome, Outcome> operator()(const LhvSource& s) const {
      HiddenSample lambda = s.sampler(streams.source);
      lambda.trial_id = trial_id;
      return {lhv_respond(s.alice_response, lambda, alice, streams.alice),
              lhv_respond(s.bob_response, lambda, bob, streams.bob)};
    }
    std::pair<Outcome, Outcome> operator()(const SettingDependentSource& s) const {
      HiddenSample lambda = s.sampler(streams.source, alice, bob);
      lambda.trial_id = trial_id;
      return {lhv_respond(s.alice_response, lambda, alice, streams.alice),
              lhv_respond(s.bob_response, lambda, bob, streams.bob)};
    }
  };
  return std::visit(Visitor{alice, bob, trial_id, streams}, source);
}

LhvSource make_gg_adversary() {
  LhvSource s;
  s.name = "gg_adversary";
  s.sampler = [](RngStream& rng) {
    return HiddenSample{PolarizationAngle{kPi * rng.uniform()}, 0};
  };
  s.alice_response = [](const HiddenSample& lambda, const Setting& setting) {
    const double theta = std::get<PolarizationAngle>(lambda.payload).theta;
    const double c = std::cos(2.0 * (setting.angle.radians() - theta));
    return deterministic_response(outcome_of_sign(sign_of(c)));
  };
  s.bob_response = [](const HiddenSample& lambda, const Setting& setting) {
    const double theta = std::get<PolarizationAngle>(lambda.payload).theta;
    const double c = std::cos(2.0 * (setting.angle.radians() - theta));
    const double p = std::min(1.0, std::abs(c));
    return c >= 0.0 ? LocalResponse{p, 0.0} : LocalResponse{0.0, p};
  };
  return s;
}

SettingDependentSource make_locality_adversary() {
  SettingDependentSource s;
  s.name = "locality_adversary";
  s.sampler = [](RngStream& rng, const Setting& alice, const Setting& bob) {
    const auto [a, b] = quantum_sample_joint(alice, bob, rng);
    return HiddenSample{PresetOutcomes{a, b}, 0};
  };
  s.alice_response = [](const HiddenSample& lambda, const Setting&) {
    return deterministic_response(std::get<PresetOutcomes>(lambda.payload).alice);
  };
  s.bob_response = [](const HiddenSample& lambda, const Setting&) {
    return deterministic_response(std::get<PresetOutcomes>(lambda.payload).bob);
  };
  return s;
}

LhvSource make_guess_mixture_adversary(double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ConfigError("guess mixture weight w must lie in [0, 1]");
  }
  LhvSource s;
  s.name = "guess_mixture";
  s.sampler = [w](RngStream& rng) {
    GuessedSettings g;
    g.guessing = rng.uniform() < w;
    const std::uint64_t bits = rng.uniform_index(4);
    if (g.guessing) {
      g.alice_guess = static_cast<SettingLabel>(bits >> 1);
      g.bob_guess = static_cast<SettingLabel>(bits & 1);
    }
    return HiddenSample{g, 0};
  };
  s.alice_response = [](const HiddenSample& lambda, const Setting& setting) {
    const auto& g = std::get<GuessedSettings>(lambda.payload);
    if (g.guessing && setting.label != g.alice_guess) {
      return deterministic_response(Outcome::NoDetect);
    }
    return deterministic_response(Outcome::Plus);
  };
  s.bob_response = [](const HiddenSample& lambda, const Setting& setting) {
    const auto& g = std::get<GuessedSettings>(lambda.payload);
    if (!g.guessing) return deterministic_response(Outcome::Plus);
    if (setting.label != g.bob_guess) return deterministic_response(Outcome::NoDetect);
    // Bob reads both guesses from lambda, never Alice's actual setting.
    const int sign = kGuessTable[pair_index({g.alice_guess, g.bob_guess})];
    return deterministic_response(sign > 0 ? Outcome::Plus : Outcome::Minus);
  };
  return s;
}

double guess_mixture_conditional_s(double w) { return (2.0 - w) / (1.0 - 0.75 * w); }

std::size_t sample_cumulative(std::span<const double> cumulative, RngStream& rng) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(idx, cumulative.size() - 1);
}

LhvSource make_deterministic_mixture(std::string name, std::vector<DeterministicPair> strategies,
                                     std::vector<double> weights) {
  if (strategies.empty() || strategies.size() != weights.size()) {
    throw ConfigError("mixture needs one weight per strategy");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("mixture weights must sum to 1");
  }
  auto cumulative = std::make_shared<std::vector<double>>(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative->begin());
  auto table = std::make_shared<const std::vector<DeterministicPair>>(std::move(strategies));

  LhvSource s;
  s.name = std::move(name);
  s.sampler = [cumulative](RngStream& rng) {
    return HiddenSample{StrategyIndex{sample_cumulative(*cumulative, rng)}, 0};
  };
  s.alice_response = [table](const HiddenSample& lambda, const Setting& setting) {
    const auto& st = (*table)[std::get<StrategyIndex>(lambda.payload).index];
    return deterministic_response(st.alice[label_index(setting.label)]);
  };
  s.bob_response = [table](const HiddenSample& lambda, const Setting& setting) {
    const auto& st = (*table)[std::get<StrategyIndex>(lambda.payload).index];
    return deterministic_response(st.bob[label_index(setting.label)]);
  };
  return s;
}

std::vector<DeterministicPair> full_detection_strategies() {
  constexpr std::array<Outcome, 2> kSigns{Outcome::Plus, Outcome::Minus};
  std::vector<LocalMap> maps;
  for (Outcome x : kSigns) {
    for (Outcome y : kSigns) maps.push_back({x, y});
  }
  std::vector<DeterministicPair> out;
  for (const auto& a : maps) {
    for (const auto& b : maps) out.push_back({a, b});
  }
  return out;
}

LhvSource random_lhv_strategy(RngStream& rng) {
  auto strategies = full_detection_strategies();
  const std::size_t n = strategies.size();
  const std::size_t support = 1 + rng.uniform_index(n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < support; ++i) {
    std::swap(order[i], order[i + rng.uniform_index(n - i)]);
  }
  std::vector<double> weights(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    const double e = -std::log(1.0 - rng.uniform());
    weights[order[i]] = e;
    total += e;
  }
  if (total <= 0.0) {
    weights.assign(n, 0.0);
    weights[order[0]] = 1.0;
    total = 1.0;
  }
  for (double& w : weights) w /= total;
  return make_deterministic_mixture("random_lhv", std::move(strategies), std::move(weights));
}

}  // namespace bell::sources
