#include <array>
#include <cmath>
#include <numbers>

#include "bell/sources.hpp"
#include "doctest.h"

using namespace bell;
using namespace bell::sources;

namespace {

const AngleSet kAngles = chsh_optimal_settings();

Setting alice_setting(SettingLabel l) { return kAngles.alice(l); }
Setting bob_setting(SettingLabel l) { return kAngles.bob(l); }

// Midpoint quadrature over theta of the GG response functions.
struct GgQuadrature {
  double correlation = 0.0;  // conditional on coincidence
  double bob_detection = 0.0;
  double alice_detection = 0.0;
};

GgQuadrature gg_quadrature(const LhvSource& gg, const Setting& a, const Setting& b) {
  constexpr int kSteps = 200000;
  double num = 0, den = 0, da = 0, db = 0;
  for (int i = 0; i < kSteps; ++i) {
    const double theta = std::numbers::pi * (i + 0.5) / kSteps;
    const HiddenSample lambda{PolarizationAngle{theta}, 0};
    const LocalResponse ra = gg.alice_response(lambda, a);
    const LocalResponse rb = gg.bob_response(lambda, b);
    num += (ra.p_plus - ra.p_minus) * (rb.p_plus - rb.p_minus);
    den += ra.detection() * rb.detection();
    da += ra.detection();
    db += rb.detection();
  }
  return {num / den, db / kSteps, da / kSteps};
}

}  // namespace

TEST_CASE("GG adversary reproduces the quantum correlation on coincidences") {
  const LhvSource gg = make_gg_adversary();
  for (auto pair : kSettingPairs) {
    const auto q = gg_quadrature(gg, alice_setting(pair.alice), bob_setting(pair.bob));
    CHECK(q.correlation ==
          doctest::Approx(quantum_correlation(kAngles.alice(pair.alice).angle, kAngles.bob(pair.bob).angle))
              .epsilon(1e-6));
    CHECK(q.alice_detection == doctest::Approx(1.0));
    CHECK(q.bob_detection == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-6));
  }
  // Off the optimal angles the sign jumps fall between nodes; midpoint error is O(1/steps).
  const Setting a{Station::Alice, SettingLabel::Primary, Angle::from_degrees(10)};
  const Setting b{Station::Bob, SettingLabel::Primary, Angle::from_degrees(70)};
  CHECK(gg_quadrature(gg, a, b).correlation == doctest::Approx(std::cos(2 * 60 * std::numbers::pi / 180)).epsilon(1e-4));
}

TEST_CASE("guess mixture conditional S by exhaustive enumeration") {
  for (double w : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const LhvSource src = make_guess_mixture_adversary(w);
    CorrelationSet e;
    double alice_singles = 0.0;
    for (auto pair : kSettingPairs) {
      double num = 0, den = 0;
      // The 4 guess combinations with weight w/4 each, plus the non-guessing branch.
      for (int k = 0; k < 5; ++k) {
        GuessedSettings g;
        double weight = 1.0 - w;
        if (k < 4) {
          g.guessing = true;
          g.alice_guess = static_cast<SettingLabel>(k >> 1);
          g.bob_guess = static_cast<SettingLabel>(k & 1);
          weight = w / 4;
        }
        const HiddenSample lambda{g, 0};
        const auto ra = src.alice_response(lambda, alice_setting(pair.alice));
        const auto rb = src.bob_response(lambda, bob_setting(pair.bob));
        num += weight * (ra.p_plus - ra.p_minus) * (rb.p_plus - rb.p_minus);
        den += weight * ra.detection() * rb.detection();
        if (pair.bob == SettingLabel::Primary) alice_singles += weight * ra.detection() / 2;
      }
      e.set(pair, num / den);
    }
    CHECK(chsh_s(e) == doctest::Approx(guess_mixture_conditional_s(w)).epsilon(1e-12));
    CHECK(alice_singles == doctest::Approx(1.0 - w / 2));
  }
  CHECK(guess_mixture_conditional_s(0.5) == doctest::Approx(2.4));
  CHECK(guess_mixture_conditional_s(1.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS((void)make_guess_mixture_adversary(1.5), ConfigError);
}

TEST_CASE("every full-detection deterministic strategy has |S| = 2") {
  const auto strategies = full_detection_strategies();
  REQUIRE(strategies.size() == 16);
  for (const auto& st : strategies) {
    CorrelationSet e;
    for (auto pair : kSettingPairs) {
      e.set(pair, *outcome_value(st.alice[label_index(pair.alice)]) *
                      *outcome_value(st.bob[label_index(pair.bob)]));
    }
    CHECK(std::abs(chsh_s(e)) == doctest::Approx(2.0));
  }
}

TEST_CASE("quantum joint sampler matches 1/4 (1 + ab cos 2(alpha - beta))") {
  const Setting a = alice_setting(SettingLabel::Primary);
  const Setting b = bob_setting(SettingLabel::Primary);
  RngStream rng(17, 1);
  std::array<double, 4> freq{};
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const auto [x, y] = quantum_sample_joint(a, b, rng);
    freq[(x == Outcome::Plus ? 0 : 2) + (y == Outcome::Plus ? 0 : 1)] += 1.0 / n;
  }
  const double c = quantum_correlation(a.angle, b.angle);
  const std::array<double, 4> expect{(1 + c) / 4, (1 - c) / 4, (1 - c) / 4, (1 + c) / 4};
  for (int k = 0; k < 4; ++k) {
    const double sigma = std::sqrt(expect[k] * (1 - expect[k]) / n);
    CHECK(std::abs(freq[k] - expect[k]) < 4 * sigma);
  }
}

TEST_CASE("locality adversary always detects and is flagged") {
  const Source src = make_locality_adversary();
  CHECK(is_locality_loophole(src));
  CHECK_FALSE(is_locality_loophole(Source{QuantumReference{}}));
  for (std::uint64_t t = 0; t < 2000; ++t) {
    auto streams = TrialStreams::for_trial(4, t);
    const auto [x, y] = emit_pair(src, alice_setting(SettingLabel::Alternate),
                                  bob_setting(SettingLabel::Alternate), t, streams);
    CHECK(detected(x));
    CHECK(detected(y));
  }
}

TEST_CASE("emit_pair is reproducible per trial") {
  const Source src = make_gg_adversary();
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto s1 = TrialStreams::for_trial(99, t);
    auto s2 = TrialStreams::for_trial(99, t);
    const auto p1 = emit_pair(src, alice_setting(SettingLabel::Primary), bob_setting(SettingLabel::Alternate), t, s1);
    const auto p2 = emit_pair(src, alice_setting(SettingLabel::Primary), bob_setting(SettingLabel::Alternate), t, s2);
    CHECK(p1 == p2);
  }
}

TEST_CASE("local responses outside the simplex are rejected") {
  CHECK_THROWS_AS(LocalResponse({0.7, 0.4}).validate(), ModelError);
  CHECK_THROWS_AS(LocalResponse({-0.1, 0.4}).validate(), ModelError);
  LhvSource bad;
  bad.name = "bad";
  bad.sampler = [](RngStream&) { return HiddenSample{StrategyIndex{0}, 0}; };
  bad.alice_response = [](const HiddenSample&, const Setting&) { return LocalResponse{0.9, 0.9}; };
  bad.bob_response = bad.alice_response;
  auto streams = TrialStreams::for_trial(1, 0);
  CHECK_THROWS_AS((void)emit_pair(Source{bad}, alice_setting(SettingLabel::Primary),
                                  bob_setting(SettingLabel::Primary), 0, streams),
                  ModelError);
}

TEST_CASE("deterministic mixtures validate their weights") {
  auto st = full_detection_strategies();
  CHECK_THROWS_AS((void)make_deterministic_mixture("x", st, std::vector<double>(16, 0.1)), ConfigError);
  CHECK_THROWS_AS((void)make_deterministic_mixture("x", st, std::vector<double>(3, 1.0 / 3)), ConfigError);
  std::vector<double> w(16, 0.0);
  w[5] = 1.0;
  const LhvSource m = make_deterministic_mixture("x", st, w);
  RngStream rng(1, 2);
  for (int i = 0; i < 100; ++i) CHECK(std::get<StrategyIndex>(m.sampler(rng).payload).index == 5);
}
