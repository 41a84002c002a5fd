#include <cmath>
#include <numbers>
#include <set>

#include "bell/analysis.hpp"
#include "bell/apparatus.hpp"
#include "bell/lhvopt.hpp"
#include "doctest.h"

#ifdef BELL_HAVE_BOOST_RATIONAL
#include <boost/rational.hpp>
#endif

using namespace bell;
using namespace bell::lhvopt;

namespace {

const double kTsirelson = 2.0 * std::numbers::sqrt2;

}  // namespace

TEST_CASE("strategy enumeration and indexing") {
  const auto maps = enumerate_local_maps();
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    CHECK(local_map_index(maps[i]) == i);
    seen.insert({static_cast<int>(maps[i][0]), static_cast<int>(maps[i][1])});
  }
  CHECK(seen.size() == 9);
  CHECK(local_map_index({Outcome::Minus, Outcome::NoDetect}) == 5);

  const auto strategies = enumerate_strategies();
  REQUIRE(strategies.size() == kStrategyCount);
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    CHECK(strategy_index(strategies[k].alice, strategies[k].bob) == k);
  }
}

TEST_CASE("full-detection mixtures obey the Bell bound") {
  // Every deterministic strategy with full detection has |S| <= 2, and S is
  // linear in the weights once all denominators equal 1.
  for (const auto& st : enumerate_strategies()) {
    if (!detected(st.alice[0]) || !detected(st.alice[1]) || !detected(st.bob[0]) ||
        !detected(st.bob[1])) {
      continue;
    }
    const auto s = conditional_chsh(StrategyMixture::point_mass(strategy_index(st.alice, st.bob)));
    REQUIRE(s);
    CHECK(std::abs(*s) == doctest::Approx(2.0));
  }
}

TEST_CASE("mixtures without coincidences at some pair have no conditional S") {
  const std::size_t k = strategy_index({Outcome::Plus, Outcome::NoDetect}, {Outcome::Plus, Outcome::Plus});
  CHECK_FALSE(conditional_chsh(StrategyMixture::point_mass(k)).has_value());
}

TEST_CASE("guess mixture embedding reproduces the sampled adversary") {
  for (double w : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    const StrategyMixture m = guess_mixture_embedding(w);
    CHECK_NOTHROW(m.validate());
    CHECK(*conditional_chsh(m) == doctest::Approx(sources::guess_mixture_conditional_s(w)));
    const auto det = detection_probabilities(m);
    for (const auto& side : det) {
      for (double p : side) CHECK(p == doctest::Approx(1.0 - w / 2));
    }
    if (w < 1.0) {
      const auto k = klyshko_efficiency(m, kSettingPairs[0], Station::Alice);
      REQUIRE(k);
      CHECK(*k == doctest::Approx((1 - 0.75 * w) / (1 - 0.5 * w)));
    }
  }
}

#ifdef BELL_HAVE_BOOST_RATIONAL
TEST_CASE("exact rational conditional S of the guess mixture") {
  using Q = boost::rational<long long>;
  // w = 1/2: weight 1/2 on all-Plus, 1/8 on each matched-guess strategy.
  const StrategyMixture m = guess_mixture_embedding(0.5);
  std::vector<Q> weights(kStrategyCount, Q(0));
  for (std::size_t k = 0; k < kStrategyCount; ++k) {
    if (m.weights[k] > 0.0) weights[k] = Q(static_cast<long long>(std::llround(m.weights[k] * 8)), 8);
  }
  const auto s = conditional_chsh<Q>(std::span<const Q>(weights));
  REQUIRE(s);
  CHECK(*s == Q(12, 5));

  // A uniform mixture over all 81 strategies.
  std::vector<Q> uniform(kStrategyCount, Q(1, 81));
  const auto su = conditional_chsh<Q>(std::span<const Q>(uniform));
  REQUIRE(su);
  CHECK(*su == Q(0));
}
#endif

TEST_CASE("LP maximum follows min(4, 4/eta - 2) under the Klyshko constraint") {
  OptimizerOptions opt;
  opt.run_fallback = false;
  for (double eta : {0.55, 2.0 / 3.0, 0.7, 0.75, 0.8, 0.8284, 0.85, 0.9, 0.95, 1.0}) {
    const auto r = max_chsh_at_efficiency(eta, opt);
    CHECK(r.s_lp == doctest::Approx(closed_form_s_max(eta)).epsilon(1e-9));
    CHECK(constraint_violation(r.argmax, {eta}) < 1e-9);
    CHECK(*conditional_chsh(r.argmax) == doctest::Approx(r.s_lp).epsilon(1e-9));
  }
  CHECK(std::abs(max_chsh_at_efficiency(1.0, opt).s_max - 2.0) <= 1e-9);
  CHECK(std::abs(max_chsh_at_efficiency(2.0 / 3.0, opt).s_max - 4.0) <= 1e-6);
}

TEST_CASE("multistart fallback agrees with the LP") {
  OptimizerOptions opt;
  for (double eta : {0.6, 0.75, 0.85, 0.95}) {
    const auto r = max_chsh_at_efficiency(eta, opt);
    REQUIRE(r.s_fallback);
    CHECK(std::abs(*r.s_fallback - r.s_lp) < 1e-2);
    CHECK(r.s_max >= r.s_lp);
    REQUIRE(r.fallback_argmax);
    CHECK(constraint_violation(*r.fallback_argmax, {eta}) < 1e-7);
  }
}

TEST_CASE("critical efficiency for the Tsirelson value") {
  const double eta_c = critical_efficiency(kTsirelson);
  CHECK(eta_c == doctest::Approx(2.0 * (std::numbers::sqrt2 - 1.0)).epsilon(2e-4));
  CHECK(critical_efficiency(2.0) == 1.0);
  CHECK(critical_efficiency(3.0) == doctest::Approx(0.8).epsilon(2e-4));
  CHECK_THROWS_AS((void)critical_efficiency(4.5), ConfigError);
  CriticalOptions narrow;
  narrow.lo = 0.9;
  CHECK_THROWS_AS((void)critical_efficiency(kTsirelson, narrow), ConfigError);
}

TEST_CASE("marginal-only constraint gives a higher threshold") {
  // Fixing only each side's detection probability at eta yields
  // S_max = min(4, 2 / (2 eta - 1)) and a threshold of (1 + 1/sqrt 2) / 2.
  OptimizerOptions opt;
  opt.run_fallback = false;
  for (double eta : {0.7, 0.8, 0.9, 1.0}) {
    const auto r = max_chsh_at_efficiency(EfficiencyConstraint{eta, EfficiencyScope::Marginal}, opt);
    CHECK(r.s_lp == doctest::Approx(std::min(4.0, 2.0 / (2 * eta - 1))).epsilon(1e-9));
  }
  CriticalOptions c;
  c.scope = EfficiencyScope::Marginal;
  CHECK(critical_efficiency(kTsirelson, c) ==
        doctest::Approx((1 + 1 / std::numbers::sqrt2) / 2).epsilon(2e-4));
}

TEST_CASE("at-least relation never lowers the maximum") {
  OptimizerOptions opt;
  opt.run_fallback = false;
  for (double eta : {0.7, 0.85, 1.0}) {
    const auto eq = max_chsh_at_efficiency({eta}, opt);
    const auto ge = max_chsh_at_efficiency({eta, EfficiencyScope::Klyshko, EfficiencyRelation::AtLeast}, opt);
    CHECK(ge.s_lp >= eq.s_lp - 1e-9);
    CHECK(ge.s_lp == doctest::Approx(closed_form_s_max(eta)).epsilon(1e-9));
  }
}

TEST_CASE("invalid efficiencies are rejected") {
  CHECK_THROWS_AS((void)max_chsh_at_efficiency(0.0), ConfigError);
  CHECK_THROWS_AS((void)max_chsh_at_efficiency(1.5), ConfigError);
  StrategyMixture bad;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scan is independent of the worker count") {
  OptimizerOptions opt;
  opt.starts = 4;
  const std::vector<double> etas{0.7, 0.8, 0.9};
  const auto one = scan_efficiency(etas, EfficiencyScope::Klyshko, opt, 1);
  const auto three = scan_efficiency(etas, EfficiencyScope::Klyshko, opt, 3);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    CHECK(one[i].s_lp == three[i].s_lp);
    CHECK(one[i].s_fallback == three[i].s_fallback);
  }
}

TEST_CASE("the realized optimal adversary reaches its S and efficiency in simulation") {
  OptimizerOptions opt;
  opt.run_fallback = false;
  const auto r = max_chsh_at_efficiency(0.8, opt);
  const sources::Source src = realize_adversary(r.argmax);
  const AngleSet s = chsh_optimal_settings();
  apparatus::RunOptions o;
  o.n_trials = 200000;
  o.seed = 3;
  const auto run = apparatus::run_experiment(
      src, apparatus::ideal_station(Station::Alice, s.alice_primary, s.alice_alternate),
      apparatus::ideal_station(Station::Bob, s.bob_primary, s.bob_alternate), o);
  auto pairing = analysis::pair_coincidences(run.alice, run.bob, 250);
  const auto chsh = analysis::chsh(pairing.table);
  CHECK(std::abs(chsh.s - 3.0) < 4 * chsh.stderr_s);
  // Coincidence / singles at (a, b) from Alice's side.
  const double coinc = static_cast<double>(pairing.table.total(kSettingPairs[0]));
  double alice_singles_ab = 0.0;
  for (const auto& e : run.alice.events) {
    if (e.setting == SettingLabel::Primary) alice_singles_ab += 1.0;
  }
  // Alice's a-singles split over Bob's two settings uniformly.
  CHECK(coinc / (alice_singles_ab / 2) == doctest::Approx(0.8).epsilon(0.02));
}
