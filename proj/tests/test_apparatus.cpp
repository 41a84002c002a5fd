#include <cmath>

#include "bell/apparatus.hpp"
#include "doctest.h"

using namespace bell;
using namespace bell::apparatus;

namespace {

StationConfig station(SwitchKind kind, double t, double eta) {
  const AngleSet s = chsh_optimal_settings();
  StationConfig c = ideal_station(Station::Alice, s.alice_primary, s.alice_alternate);
  c.switch_config = {kind, t};
  c.detectors.efficiency = eta;
  return c;
}

const std::vector<OutcomeDistribution> kMicroGrid{
    {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.5, 0.5, 0.0}, {0.3, 0.2, 0.5}, {0.0, 0.0, 1.0}};

}  // namespace

TEST_CASE("Active(T/2) and Passive(T) have identical outcome laws") {
  for (double t : {0.0, 0.1, 0.3, 0.5, 0.8, 1.0}) {
    for (double eta : {0.1, 0.5, 0.8284, 1.0}) {
      for (const auto& p : kMicroGrid) {
        const auto a = outcome_distribution(station(SwitchKind::Active, t / 2, eta), p);
        const auto b = outcome_distribution(station(SwitchKind::Passive, t, eta), p);
        for (Outcome o : {Outcome::Plus, Outcome::Minus, Outcome::NoDetect}) {
          CHECK(std::abs(a[o] - b[o]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("loss stages compose as independent thinnings") {
  const OutcomeDistribution p{0.6, 0.4, 0.0};
  const auto two_stage = outcome_distribution(station(SwitchKind::Active, 0.7, 0.6), p);
  const auto one_stage = outcome_distribution(station(SwitchKind::Active, 0.42, 1.0), p);
  CHECK(two_stage.plus == doctest::Approx(one_stage.plus).epsilon(1e-14));
  CHECK(two_stage.no_detect == doctest::Approx(one_stage.no_detect).epsilon(1e-14));
  CHECK(two_stage.plus + two_stage.minus + two_stage.no_detect == doctest::Approx(1.0));
  // No-detect input stays no-detect.
  const auto nd = outcome_distribution(station(SwitchKind::Passive, 1.0, 1.0), {0, 0, 1});
  CHECK(nd.no_detect == 1.0);
}

TEST_CASE("station_trial sampling agrees with the closed form") {
  for (auto kind : {SwitchKind::Active, SwitchKind::Passive}) {
    const StationConfig c = station(kind, 0.8, 0.75);
    const int n = 200000;
    int clicks = 0;
    for (int i = 0; i < n; ++i) {
      auto rng = RngStream::trial_stream(3, StreamRole::AliceStation, i);
      const auto ev = station_trial(c, i, SettingLabel::Primary, Outcome::Minus, rng,
                                    emission_time(i, 1000), 1000);
      if (detected(ev.outcome)) {
        CHECK(ev.outcome == Outcome::Minus);
        ++clicks;
      }
    }
    const double p = survival_probability(c);
    CHECK(std::abs(clicks / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("dark counts follow a Poisson law per detector and stay in the slot") {
  StationConfig c = station(SwitchKind::Active, 1.0, 1.0);
  c.detectors.dark_rate = 0.2;
  c.delay_ns = 40;
  const int n = 100000;
  int dark = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = RngStream::trial_stream(8, StreamRole::AliceStation, i);
    const std::int64_t t_emit = emission_time(i, 1000);
    const auto ev = station_trial(c, i, SettingLabel::Alternate, Outcome::NoDetect, rng, t_emit, 1000);
    if (detected(ev.outcome)) {
      ++dark;
      CHECK(ev.dark);
      const TrialSlot slot = trial_slot(c, t_emit, 1000);
      CHECK(ev.t_ns >= slot.begin);
      CHECK(ev.t_ns < slot.end);
    }
  }
  const double p = 1.0 - std::exp(-0.4);
  CHECK(std::abs(dark / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("real detections sit at emission + delay + jitter") {
  StationConfig c = station(SwitchKind::Active, 1.0, 1.0);
  c.jitter_ns = 0.0;
  c.delay_ns = 17;
  auto rng = RngStream::trial_stream(1, StreamRole::AliceStation, 4);
  const auto ev = station_trial(c, 4, SettingLabel::Primary, Outcome::Plus, rng, emission_time(4, 1000), 1000);
  CHECK(ev.t_ns == 5000 + 17);
  CHECK_FALSE(ev.dark);
}

TEST_CASE("run_experiment is independent of the worker count") {
  const AngleSet s = chsh_optimal_settings();
  StationConfig a = ideal_station(Station::Alice, s.alice_primary, s.alice_alternate);
  StationConfig b = ideal_station(Station::Bob, s.bob_primary, s.bob_alternate);
  a.detectors = {0.8, 0.01};
  b.switch_config = {SwitchKind::Passive, 0.9};
  const sources::Source src = sources::make_gg_adversary();
  RunOptions o{.n_trials = 20000, .seed = 12, .period_ns = 1000, .threads = 1, .config_hash = ""};
  const auto r1 = run_experiment(src, a, b, o);
  o.threads = 4;
  const auto r4 = run_experiment(src, a, b, o);
  o.threads = 7;
  const auto r7 = run_experiment(src, a, b, o);
  CHECK(r1.alice == r4.alice);
  CHECK(r1.bob == r4.bob);
  CHECK(r1.alice == r7.alice);
  CHECK(r1.bob == r7.bob);
  CHECK(r1.metadata.pair_trials == r7.metadata.pair_trials);

  std::uint64_t total = 0;
  for (auto v : r1.metadata.pair_trials) total += v;
  CHECK(total == 20000);
  CHECK(r1.metadata.setting_trials[0][0] + r1.metadata.setting_trials[0][1] == 20000);
  CHECK(r1.metadata.scenario == "standard");
  CHECK_NOTHROW(r1.alice.validate());
  CHECK_NOTHROW(r1.bob.validate());
}

TEST_CASE("run_experiment labels the locality scenario and validates inputs") {
  const AngleSet s = chsh_optimal_settings();
  const StationConfig a = ideal_station(Station::Alice, s.alice_primary, s.alice_alternate);
  const StationConfig b = ideal_station(Station::Bob, s.bob_primary, s.bob_alternate);
  RunOptions o;
  o.n_trials = 100;
  o.seed = 1;
  const auto r = run_experiment(sources::make_locality_adversary(), a, b, o);
  CHECK(r.metadata.scenario == "locality_loophole");
  CHECK(r.alice.header.scenario == "locality_loophole");
  CHECK(r.alice.events.size() == 100);

  CHECK_THROWS_AS((void)run_experiment(sources::QuantumReference{}, b, a, o), ConfigError);
  StationConfig bad = a;
  bad.detectors.efficiency = 1.2;
  CHECK_THROWS_AS((void)run_experiment(sources::QuantumReference{}, bad, b, o), ConfigError);
  o.n_trials = 0;
  CHECK_THROWS_AS((void)run_experiment(sources::QuantumReference{}, a, b, o), ConfigError);
}
