#pragma once

// Per-station event logs and their newline-delimited JSON form.
//
//   header: {"station":"alice","seed":1,"config_hash":"...","period_ns":1000, ...}
//   record: {"trial":7,"t_ns":8001,"setting":"a2","outcome":"r","dark":false}
//
// Trials without a detection produce no record. Optional header keys written by
// the simulator: "scenario", "n_trials", "setting_trials".

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bell/core.hpp"

namespace bell {

struct LocalEvent {
  std::uint64_t trial_id = 0;
  std::int64_t t_ns = 0;
  SettingLabel setting = SettingLabel::Primary;
  Outcome outcome = Outcome::NoDetect;
  bool dark = false;

  friend bool operator==(const LocalEvent&, const LocalEvent&) = default;
};

struct EventLogHeader {
  Station station = Station::Alice;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::int64_t period_ns = 1000;
  std::string scenario;
  std::optional<std::uint64_t> n_trials;
  /// Trials in which this station chose each setting.
  std::optional<std::array<std::uint64_t, 2>> setting_trials;

  friend bool operator==(const EventLogHeader&, const EventLogHeader&) = default;
};

struct EventLog {
  EventLogHeader header;
  std::vector<LocalEvent> events;

  /// Throws ConfigError unless timestamps are nondecreasing, trial ids unique
  /// and every outcome is Plus or Minus.
  void validate() const;

  friend bool operator==(const EventLog&, const EventLog&) = default;
};

/// Parse failure in an NDJSON log; record 0 is the header line.
class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t record, const std::string& what);
  [[nodiscard]] std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

void write_ndjson(std::ostream& out, const EventLog& log);
[[nodiscard]] EventLog read_ndjson(std::istream& in);

/// 64-bit FNV-1a, lowercase hex, 16 digits.
[[nodiscard]] std::string config_hash_hex(std::string_view canonical);

}  // namespace bell
