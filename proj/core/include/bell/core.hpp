#pragma once

// Shared domain types for CHSH experiments: analyser angles, settings,
// outcomes, setting pairs and the CHSH combination itself.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bell {

inline constexpr double kPi = 3.14159265358979323846;

/// Raised for invalid configuration values or incomplete inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a source model produces response probabilities outside the
/// simplex p_plus + p_minus <= 1.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polarization analyser orientation. Stored in radians, normalized to
/// [0, pi) because analysers are pi-periodic.
class Angle {
 public:
  constexpr Angle() = default;

  static Angle from_radians(double radians);
  static Angle from_degrees(double degrees);

  [[nodiscard]] constexpr double radians() const noexcept { return radians_; }
  [[nodiscard]] double degrees() const noexcept;

  friend constexpr bool operator==(Angle, Angle) = default;

 private:
  explicit constexpr Angle(double normalized) : radians_(normalized) {}
  double radians_ = 0.0;
};

enum class Station : std::uint8_t { Alice = 0, Bob = 1 };

/// Primary is a (Alice) / b (Bob); Alternate is a' / b'.
enum class SettingLabel : std::uint8_t { Primary = 0, Alternate = 1 };

struct Setting {
  Station station = Station::Alice;
  SettingLabel label = SettingLabel::Primary;
  Angle angle;
};

/// Plus is detector "r" (+1), Minus is detector "g" (-1).
enum class Outcome : std::uint8_t { Plus = 0, Minus = 1, NoDetect = 2 };

/// +1, -1, or nullopt for NoDetect.
[[nodiscard]] constexpr std::optional<int> outcome_value(Outcome o) noexcept {
  switch (o) {
    case Outcome::Plus:
      return 1;
    case Outcome::Minus:
      return -1;
    case Outcome::NoDetect:
      break;
  }
  return std::nullopt;
}

[[nodiscard]] constexpr bool detected(Outcome o) noexcept { return o != Outcome::NoDetect; }

struct SettingPair {
  SettingLabel alice = SettingLabel::Primary;
  SettingLabel bob = SettingLabel::Primary;

  friend constexpr bool operator==(SettingPair, SettingPair) = default;
};

/// The four pairs in CHSH order: (a,b), (a,b'), (a',b), (a',b').
inline constexpr std::array<SettingPair, 4> kSettingPairs{{
    {SettingLabel::Primary, SettingLabel::Primary},
    {SettingLabel::Primary, SettingLabel::Alternate},
    {SettingLabel::Alternate, SettingLabel::Primary},
    {SettingLabel::Alternate, SettingLabel::Alternate},
}};

/// Sign of each pair's correlation in S.
inline constexpr std::array<int, 4> kChshSigns{+1, +1, +1, -1};

[[nodiscard]] constexpr std::size_t pair_index(SettingPair p) noexcept {
  return static_cast<std::size_t>(p.alice) * 2 + static_cast<std::size_t>(p.bob);
}

[[nodiscard]] constexpr std::size_t label_index(SettingLabel l) noexcept {
  return static_cast<std::size_t>(l);
}

[[nodiscard]] constexpr std::size_t station_index(Station s) noexcept {
  return static_cast<std::size_t>(s);
}

/// Correlations E for the four setting pairs. Entries may be missing while
/// the set is being filled in; chsh_s requires all four.
class CorrelationSet {
 public:
  CorrelationSet() = default;
  /// Values in CHSH order (a,b), (a,b'), (a',b), (a',b').
  CorrelationSet(double ab, double ab2, double a2b, double a2b2);

  void set(SettingPair pair, double e);
  [[nodiscard]] std::optional<double> get(SettingPair pair) const noexcept {
    return values_[pair_index(pair)];
  }
  [[nodiscard]] bool complete() const noexcept;

 private:
  std::array<std::optional<double>, 4> values_{};
};

/// The four analyser angles of an experiment.
struct AngleSet {
  Angle alice_primary;
  Angle alice_alternate;
  Angle bob_primary;
  Angle bob_alternate;

  [[nodiscard]] Setting alice(SettingLabel l) const noexcept {
    return {Station::Alice, l, l == SettingLabel::Primary ? alice_primary : alice_alternate};
  }
  [[nodiscard]] Setting bob(SettingLabel l) const noexcept {
    return {Station::Bob, l, l == SettingLabel::Primary ? bob_primary : bob_alternate};
  }
};

/// S = E(a,b) + E(a,b') + E(a',b) - E(a',b').
/// Throws ConfigError if a pair is missing or a correlation lies outside [-1, 1].
[[nodiscard]] double chsh_s(const CorrelationSet& corr);

/// cos 2(alpha - beta): the ideal correlation of the |phi+> polarization pair.
[[nodiscard]] double quantum_correlation(Angle alice, Angle bob) noexcept;

/// a = 0, a' = 45, b = 22.5, b' = -22.5 degrees (stored mod 180).
[[nodiscard]] AngleSet chsh_optimal_settings() noexcept;

/// Quantum correlations for all four pairs of an angle set.
[[nodiscard]] CorrelationSet quantum_correlations(const AngleSet& angles) noexcept;

// External labels: "alice"/"bob", "a","a2","b","b2", "r","g","none".
[[nodiscard]] std::string_view to_string(Station s) noexcept;
[[nodiscard]] std::string_view setting_name(Station s, SettingLabel l) noexcept;
[[nodiscard]] std::string_view to_string(Outcome o) noexcept;
[[nodiscard]] std::string pair_name(SettingPair p);

[[nodiscard]] std::optional<Station> parse_station(std::string_view s) noexcept;
[[nodiscard]] std::optional<SettingLabel> parse_setting(Station station, std::string_view s) noexcept;
[[nodiscard]] std::optional<Outcome> parse_outcome(std::string_view s) noexcept;

}  // namespace bell
