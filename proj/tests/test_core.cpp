#include <cmath>
#include <numbers>

#include "bell/core.hpp"
#include "doctest.h"

using namespace bell;

TEST_CASE("angles normalize modulo pi") {
  CHECK(Angle::from_degrees(-22.5).degrees() == doctest::Approx(157.5));
  CHECK(Angle::from_degrees(180.0).radians() == doctest::Approx(0.0));
  CHECK(Angle::from_degrees(405.0).degrees() == doctest::Approx(45.0));
  CHECK(Angle::from_radians(-std::numbers::pi / 8).radians() ==
        doctest::Approx(7 * std::numbers::pi / 8));
}

TEST_CASE("quantum correlation at the optimal settings") {
  const AngleSet s = chsh_optimal_settings();
  const CorrelationSet e = quantum_correlations(s);
  const double r = std::numbers::sqrt2 / 2;
  CHECK(*e.get({SettingLabel::Primary, SettingLabel::Primary}) == doctest::Approx(r));
  CHECK(*e.get({SettingLabel::Alternate, SettingLabel::Alternate}) == doctest::Approx(-r));
  CHECK(chsh_s(e) == doctest::Approx(2 * std::numbers::sqrt2).epsilon(1e-14));
}

TEST_CASE("quantum correlation depends only on the angle difference") {
  for (double d : {0.0, 10.0, 33.3, 90.0, 135.0}) {
    const double e1 = quantum_correlation(Angle::from_degrees(0), Angle::from_degrees(d));
    const double e2 = quantum_correlation(Angle::from_degrees(50), Angle::from_degrees(50 + d));
    CHECK(e1 == doctest::Approx(e2));
    CHECK(e1 == doctest::Approx(std::cos(2 * d * std::numbers::pi / 180)));
  }
}

TEST_CASE("chsh_s rejects incomplete or out-of-range correlations") {
  CorrelationSet e;
  e.set({SettingLabel::Primary, SettingLabel::Primary}, 1.0);
  CHECK_THROWS_AS((void)chsh_s(e), ConfigError);
  CorrelationSet bad(1.0, 1.0, 1.0, 1.5);
  CHECK_THROWS_AS((void)chsh_s(bad), ConfigError);
  CHECK(chsh_s(CorrelationSet(1.0, 1.0, 1.0, -1.0)) == doctest::Approx(4.0));
}

TEST_CASE("outcome values") {
  CHECK(outcome_value(Outcome::Plus) == 1);
  CHECK(outcome_value(Outcome::Minus) == -1);
  CHECK_FALSE(outcome_value(Outcome::NoDetect).has_value());
  CHECK_FALSE(detected(Outcome::NoDetect));
}

TEST_CASE("names round-trip") {
  for (Station st : {Station::Alice, Station::Bob}) {
    CHECK(parse_station(to_string(st)) == st);
    for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
      CHECK(parse_setting(st, setting_name(st, l)) == l);
    }
  }
  CHECK(parse_outcome("r") == Outcome::Plus);
  CHECK(parse_outcome("g") == Outcome::Minus);
  CHECK_FALSE(parse_outcome("x").has_value());
  CHECK(pair_name({SettingLabel::Alternate, SettingLabel::Primary}) == "a2,b");
}
