#include "bell/event_log.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include "json.hpp"

namespace bell {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void EventLog::validate() const {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const LocalEvent& e = events[i];
    if (i > 0 && e.t_ns < events[i - 1].t_ns) {
      throw ConfigError("event log timestamps decrease at record " + std::to_string(i + 1));
    }
    if (!seen.insert(e.trial_id).second) {
      throw ConfigError("duplicate trial id " + std::to_string(e.trial_id));
    }
    if (!detected(e.outcome)) {
      throw ConfigError("event log record " + std::to_string(i + 1) + " has no outcome");
    }
  }
}

LogParseError::LogParseError(std::size_t record, const std::string& what)
    : std::runtime_error("record " + std::to_string(record) + ": " + what), record_(record) {}

std::string config_hash_hex(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace {

template <class Int>
void append_int(std::string& out, Int v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_ndjson(std::ostream& out, const EventLog& log) {
  ordered_json header;
  header["station"] = std::string(to_string(log.header.station));
  header["seed"] = log.header.seed;
  header["config_hash"] = log.header.config_hash;
  header["period_ns"] = log.header.period_ns;
  if (!log.header.scenario.empty()) header["scenario"] = log.header.scenario;
  if (log.header.n_trials) header["n_trials"] = *log.header.n_trials;
  if (log.header.setting_trials) {
    ordered_json st;
    st[std::string(setting_name(log.header.station, SettingLabel::Primary))] =
        (*log.header.setting_trials)[0];
    st[std::string(setting_name(log.header.station, SettingLabel::Alternate))] =
        (*log.header.setting_trials)[1];
    header["setting_trials"] = st;
  }
  out << header.dump() << '\n';

  std::string line;
  for (const LocalEvent& e : log.events) {
    line.clear();
    line += "{\"trial\":";
    append_int(line, e.trial_id);
    line += ",\"t_ns\":";
    append_int(line, e.t_ns);
    line += ",\"setting\":\"";
    line += setting_name(log.header.station, e.setting);
    line += "\",\"outcome\":\"";
    line += to_string(e.outcome);
    line += "\",\"dark\":";
    line += e.dark ? "true" : "false";
    line += "}\n";
    out << line;
  }
}

namespace {

const json& require(const json& obj, const char* key, std::size_t record) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw LogParseError(record, std::string("missing field \"") + key + "\"");
  return *it;
}

std::uint64_t require_unsigned(const json& obj, const char* key, std::size_t record) {
  const json& v = require(obj, key, record);
  if (!v.is_number_unsigned()) {
    throw LogParseError(record, std::string("field \"") + key + "\" must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::int64_t require_int(const json& obj, const char* key, std::size_t record) {
  const json& v = require(obj, key, record);
  if (!v.is_number_integer()) {
    throw LogParseError(record, std::string("field \"") + key + "\" must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string require_string(const json& obj, const char* key, std::size_t record) {
  const json& v = require(obj, key, record);
  if (!v.is_string()) {
    throw LogParseError(record, std::string("field \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

json parse_line(const std::string& line, std::size_t record) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw LogParseError(record, "invalid JSON");
  if (!j.is_object()) throw LogParseError(record, "expected a JSON object");
  return j;
}

}  // namespace

EventLog read_ndjson(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t record = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!have_header) {
      const json h = parse_line(line, 0);
      const auto station = parse_station(require_string(h, "station", 0));
      if (!station) throw LogParseError(0, "station must be \"alice\" or \"bob\"");
      log.header.station = *station;
      log.header.seed = require_unsigned(h, "seed", 0);
      log.header.config_hash = require_string(h, "config_hash", 0);
      log.header.period_ns = require_int(h, "period_ns", 0);
      if (log.header.period_ns <= 0) throw LogParseError(0, "period_ns must be positive");
      if (h.contains("scenario")) log.header.scenario = require_string(h, "scenario", 0);
      if (h.contains("n_trials")) log.header.n_trials = require_unsigned(h, "n_trials", 0);
      if (h.contains("setting_trials")) {
        const json& st = h["setting_trials"];
        if (!st.is_object()) throw LogParseError(0, "setting_trials must be an object");
        std::array<std::uint64_t, 2> counts{};
        for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
          counts[label_index(l)] =
              require_unsigned(st, std::string(setting_name(*station, l)).c_str(), 0);
        }
        log.header.setting_trials = counts;
      }
      have_header = true;
      continue;
    }
    ++record;
    const json r = parse_line(line, record);
    LocalEvent e;
    e.trial_id = require_unsigned(r, "trial", record);
    e.t_ns = require_int(r, "t_ns", record);
    const auto setting = parse_setting(log.header.station, require_string(r, "setting", record));
    if (!setting) throw LogParseError(record, "unknown setting label for this station");
    e.setting = *setting;
    const auto outcome = parse_outcome(require_string(r, "outcome", record));
    if (!outcome || !detected(*outcome)) throw LogParseError(record, "outcome must be \"r\" or \"g\"");
    e.outcome = *outcome;
    const json& dark = require(r, "dark", record);
    if (!dark.is_boolean()) throw LogParseError(record, "field \"dark\" must be a boolean");
    e.dark = dark.get<bool>();
    if (!log.events.empty() && e.t_ns < log.events.back().t_ns) {
      throw LogParseError(record, "timestamps must be nondecreasing");
    }
    log.events.push_back(e);
  }
  if (!have_header) throw LogParseError(0, "missing header line");
  return log;
}

}  // namespace bell
