#include <sstream>

#include "bell/event_log.hpp"
#include "doctest.h"

using namespace bell;

namespace {

EventLog sample_log() {
  EventLog log;
  log.header.station = Station::Bob;
  log.header.seed = 77;
  log.header.config_hash = "00ff00ff00ff00ff";
  log.header.period_ns = 500;
  log.header.scenario = "standard";
  log.header.n_trials = 4;
  log.header.setting_trials = std::array<std::uint64_t, 2>{3, 1};
  log.events = {{0, 499, SettingLabel::Primary, Outcome::Plus, false},
                {1, 1003, SettingLabel::Alternate, Outcome::Minus, true},
                {3, 2001, SettingLabel::Primary, Outcome::Minus, false}};
  return log;
}

std::size_t failing_record(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)read_ndjson(in);
  } catch (const LogParseError& e) {
    return e.record();
  }
  return static_cast<std::size_t>(-1);
}

const std::string kHeader = R"({"station":"alice","seed":1,"config_hash":"x","period_ns":1000})";

}  // namespace

TEST_CASE("NDJSON round trip preserves the log exactly") {
  const EventLog log = sample_log();
  std::ostringstream out;
  write_ndjson(out, log);
  std::istringstream in(out.str());
  const EventLog back = read_ndjson(in);
  CHECK(back == log);

  std::ostringstream again;
  write_ndjson(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("records use the fixed field order and detector names") {
  std::ostringstream out;
  write_ndjson(out, sample_log());
  const std::string text = out.str();
  CHECK(text.find(R"({"trial":1,"t_ns":1003,"setting":"b2","outcome":"g","dark":true})") !=
        std::string::npos);
  CHECK(text.rfind(R"({"station":"bob")", 0) == 0);
}

TEST_CASE("malformed records are reported by record number") {
  CHECK(failing_record("") == 0);
  CHECK(failing_record("{not json\n") == 0);
  CHECK(failing_record(R"({"station":"carol","seed":1,"config_hash":"x","period_ns":1000})") == 0);
  CHECK(failing_record(kHeader + "\n" + R"({"trial":0,"t_ns":10,"setting":"a","outcome":"r","dark":false})" +
                       "\n" + R"({"trial":1,"t_ns":20,"setting":"a","outcome":"q","dark":false})") == 2);
  CHECK(failing_record(kHeader + "\n" + R"({"trial":0,"t_ns":10,"setting":"b","outcome":"r","dark":false})") == 1);
  CHECK(failing_record(kHeader + "\n" + R"({"trial":-1,"t_ns":10,"setting":"a","outcome":"r","dark":false})") == 1);
  CHECK(failing_record(kHeader + "\n" + R"({"trial":0,"t_ns":10,"setting":"a","outcome":"r"})") == 1);
  CHECK(failing_record(kHeader + "\n" + R"({"trial":0,"t_ns":50,"setting":"a","outcome":"r","dark":false})" +
                       "\n" + R"({"trial":1,"t_ns":20,"setting":"a","outcome":"g","dark":false})") == 2);
}

TEST_CASE("a header-only log is valid and empty") {
  std::istringstream in(kHeader + "\n");
  const EventLog log = read_ndjson(in);
  CHECK(log.events.empty());
  CHECK(log.header.station == Station::Alice);
  CHECK_FALSE(log.header.n_trials.has_value());
}

TEST_CASE("validate catches duplicate trials and missing outcomes") {
  EventLog log = sample_log();
  log.events[1].trial_id = 0;
  CHECK_THROWS_AS(log.validate(), ConfigError);
  log = sample_log();
  log.events[2].outcome = Outcome::NoDetect;
  CHECK_THROWS_AS(log.validate(), ConfigError);
  CHECK_NOTHROW(sample_log().validate());
}

TEST_CASE("config hash is 64-bit FNV-1a") {
  CHECK(config_hash_hex("") == "cbf29ce484222325");
  CHECK(config_hash_hex("a") == "af63dc4c8601ec8c");
  CHECK(config_hash_hex("foobar") == "85944171f73967e8");
}
