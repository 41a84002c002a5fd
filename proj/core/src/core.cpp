#include "bell/core.hpp"

#include <cmath>

namespace bell {

Angle Angle::from_radians(double radians) {
  if (!std::isfinite(radians)) {
    throw ConfigError("angle must be finite");
  }
  double r = radians - kPi * std::floor(radians / kPi);
  if (r >= kPi || r < 0.0) {
    r = 0.0;
  }
  return Angle(r);
}

Angle Angle::from_degrees(double degrees) {
  if (!std::isfinite(degrees)) {
    throw ConfigError("angle must be finite");
  }
  // Reduce in degrees first so that e.g. -22.5 maps to exactly 157.5.
  double d = degrees - 180.0 * std::floor(degrees / 180.0);
  if (d >= 180.0 || d < 0.0) {
    d = 0.0;
  }
  return Angle(d * kPi / 180.0);
}

double Angle::degrees() const noexcept { return radians_ * 180.0 / kPi; }

CorrelationSet::CorrelationSet(double ab, double ab2, double a2b, double a2b2)
    : values_{ab, ab2, a2b, a2b2} {}

void CorrelationSet::set(SettingPair pair, double e) { values_[pair_index(pair)] = e; }

bool CorrelationSet::complete() const noexcept {
  for (const auto& v : values_) {
    if (!v) return false;
  }
  return true;
}

double chsh_s(const CorrelationSet& corr) {
  double s = 0.0;
  for (std::size_t i = 0; i < kSettingPairs.size(); ++i) {
    const auto e = corr.get(kSettingPairs[i]);
    if (!e) {
      throw ConfigError("correlation for setting pair " + pair_name(kSettingPairs[i]) +
                        " is missing");
    }
    if (!(*e >= -1.0 && *e <= 1.0)) {
      throw ConfigError("correlation for setting pair " + pair_name(kSettingPairs[i]) +
                        " is outside [-1, 1]");
    }
    s += kChshSigns[i] * *e;
  }
  return s;
}

double quantum_correlation(Angle alice, Angle bob) noexcept {
  return std::cos(2.0 * (alice.radians() - bob.radians()));
}

AngleSet chsh_optimal_settings() noexcept {
  return {Angle::from_degrees(0.0), Angle::from_degrees(45.0), Angle::from_degrees(22.5),
          Angle::from_degrees(-22.5)};
}

CorrelationSet quantum_correlations(const AngleSet& angles) noexcept {
  CorrelationSet out;
  for (const auto& p : kSettingPairs) {
    out.set(p, quantum_correlation(angles.alice(p.alice).angle, angles.bob(p.bob).angle));
  }
  return out;
}

std::string_view to_string(Station s) noexcept { return s == Station::Alice ? "alice" : "bob"; }

std::string_view setting_name(Station s, SettingLabel l) noexcept {
  if (s == Station::Alice) return l == SettingLabel::Primary ? "a" : "a2";
  return l == SettingLabel::Primary ? "b" : "b2";
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Plus:
      return "r";
    case Outcome::Minus:
      return "g";
    case Outcome::NoDetect:
      break;
  }
  return "none";
}

std::string pair_name(SettingPair p) {
  std::string out(setting_name(Station::Alice, p.alice));
  out += ',';
  out += setting_name(Station::Bob, p.bob);
  return out;
}

std::optional<Station> parse_station(std::string_view s) noexcept {
  if (s == "alice") return Station::Alice;
  if (s == "bob") return Station::Bob;
  return std::nullopt;
}

std::optional<SettingLabel> parse_setting(Station station, std::string_view s) noexcept {
  if (s == setting_name(station, SettingLabel::Primary)) return SettingLabel::Primary;
  if (s == setting_name(station, SettingLabel::Alternate)) return SettingLabel::Alternate;
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view s) noexcept {
  if (s == "r") return Outcome::Plus;
  if (s == "g") return Outcome::Minus;
  if (s == "none") return Outcome::NoDetect;
  return std::nullopt;
}

}  // namespace bell
