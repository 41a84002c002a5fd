#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bell/event_log.hpp"
#include "bell/harness.hpp"
#include "json.hpp"

namespace bell::harness {

using nlohmann::json;

std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::Quantum:
      return "quantum";
    case SourceKind::GgAdversary:
      return "gg_adversary";
    case SourceKind::LocalityAdversary:
      return "locality_adversary";
    case SourceKind::GuessMixture:
      return "guess_mixture";
    case SourceKind::RandomLhv:
      return "random_lhv";
    case SourceKind::OptimalLhv:
      break;
  }
  return "optimal_lhv";
}

AngleSet AnglesDeg::to_angle_set() const {
  return {Angle::from_degrees(a), Angle::from_degrees(a2), Angle::from_degrees(b),
          Angle::from_degrees(b2)};
}

apparatus::StationConfig ExperimentConfig::station(Station s) const {
  const StationSpec& spec = s == Station::Alice ? alice : bob;
  const AngleSet set = angles.to_angle_set();
  apparatus::StationConfig c;
  c.station = s;
  c.switch_config = {spec.switch_kind, spec.transmission};
  c.detectors = {spec.efficiency, spec.dark_rate};
  c.primary = s == Station::Alice ? set.alice_primary : set.bob_primary;
  c.alternate = s == Station::Alice ? set.alice_alternate : set.bob_alternate;
  c.jitter_ns = spec.jitter_ns;
  c.delay_ns = spec.delay_ns;
  return c;
}

namespace {

json station_json(const StationSpec& s) {
  return json{{"switch", s.switch_kind == apparatus::SwitchKind::Active ? "active" : "passive"},
              {"transmission", s.transmission},
              {"efficiency", s.efficiency},
              {"dark_rate", s.dark_rate},
              {"jitter_ns", s.jitter_ns},
              {"delay_ns", s.delay_ns}};
}

json source_json(const SourceSpec& s) {
  json j{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == SourceKind::GuessMixture) j["w"] = s.w;
  if (s.kind == SourceKind::OptimalLhv) j["eta"] = s.eta;
  if (s.kind == SourceKind::RandomLhv) j["strategy_seed"] = s.strategy_seed;
  return j;
}

// Field-path aware reader over a JSON object that rejects unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "document" : path_, "must be a JSON object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("field \"" + field + "\": " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) fail(field(key), "is required");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(field(key), "must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(field(key), "must be finite");
    return d;
  }

  double probability(const std::string& key, double fallback) {
    const double p = number(key, fallback);
    if (!(p >= 0.0 && p <= 1.0)) fail(field(key), "must lie in [0, 1]");
    return p;
  }

  std::uint64_t unsigned_integer(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned()) fail(field(key), "must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(field(key), "must be an integer");
    return v->get<std::int64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(field(key), "must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

StationSpec read_station(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  StationSpec s;
  const std::string sw = r.string("switch", "active");
  if (sw == "active") {
    s.switch_kind = apparatus::SwitchKind::Active;
  } else if (sw == "passive") {
    s.switch_kind = apparatus::SwitchKind::Passive;
  } else {
    ObjectReader::fail(r.field("switch"), "must be \"active\" or \"passive\"");
  }
  s.transmission = r.probability("transmission", 1.0);
  s.efficiency = r.probability("efficiency", 1.0);
  s.dark_rate = r.number("dark_rate", 0.0);
  if (!(s.dark_rate >= 0.0 && s.dark_rate <= 20.0)) {
    ObjectReader::fail(r.field("dark_rate"), "must lie in [0, 20]");
  }
  s.jitter_ns = r.number("jitter_ns", 1.0);
  if (s.jitter_ns < 0.0) ObjectReader::fail(r.field("jitter_ns"), "must be nonnegative");
  s.delay_ns = r.integer("delay_ns", 0);
  r.finish();
  return s;
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["source"] = source_json(source);
  j["angles_deg"] = {{"a", angles.a}, {"a2", angles.a2}, {"b", angles.b}, {"b2", angles.b2}};
  j["alice"] = station_json(alice);
  j["bob"] = station_json(bob);
  j["n_trials"] = n_trials;
  j["seed"] = seed;
  j["period_ns"] = period_ns;
  j["window_ns"] = effective_window_ns();
  j["estimator"] = std::string(analysis::to_string(estimator));
  j["k_sigma"] = k_sigma;
  return j.dump();
}

std::string ExperimentConfig::hash() const { return config_hash_hex(canonical_json()); }

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError("invalid JSON at " + locate(text, at) + ": " + e.what());
  }

  ObjectReader root(doc, "");
  ExperimentConfig c;

  {
    ObjectReader src(root.require("source"), "source");
    const std::string kind = src.string("kind", "");
    if (kind == "quantum") {
      c.source.kind = SourceKind::Quantum;
    } else if (kind == "gg_adversary") {
      c.source.kind = SourceKind::GgAdversary;
    } else if (kind == "locality_adversary") {
      c.source.kind = SourceKind::LocalityAdversary;
    } else if (kind == "guess_mixture") {
      c.source.kind = SourceKind::GuessMixture;
      c.source.w = src.probability("w", 0.5);
    } else if (kind == "random_lhv") {
      c.source.kind = SourceKind::RandomLhv;
      if (const json* v = src.get("strategy_seed")) {
        c.source.strategy_seed = src.unsigned_integer(*v, "strategy_seed");
      }
    } else if (kind == "optimal_lhv") {
      c.source.kind = SourceKind::OptimalLhv;
      c.source.eta = src.number("eta", 0.8284);
      if (!(c.source.eta > 0.0 && c.source.eta <= 1.0)) {
        ObjectReader::fail("source.eta", "must lie in (0, 1]");
      }
    } else {
      ObjectReader::fail("source.kind",
                         "must be one of quantum, gg_adversary, locality_adversary, "
                         "guess_mixture, random_lhv, optimal_lhv");
    }
    src.finish();
  }

  if (const json* a = root.get("angles_deg")) {
    ObjectReader r(*a, "angles_deg");
    c.angles.a = r.number("a", c.angles.a);
    c.angles.a2 = r.number("a2", c.angles.a2);
    c.angles.b = r.number("b", c.angles.b);
    c.angles.b2 = r.number("b2", c.angles.b2);
    r.finish();
  }
  if (const json* a = root.get("alice")) c.alice = read_station(*a, "alice");
  if (const json* b = root.get("bob")) c.bob = read_station(*b, "bob");

  c.n_trials = root.unsigned_integer(root.require("n_trials"), "n_trials");
  if (c.n_trials == 0) ObjectReader::fail("n_trials", "must be at least 1");
  if (c.n_trials > 100'000'000) ObjectReader::fail("n_trials", "must be at most 100000000");
  c.seed = root.unsigned_integer(root.require("seed"), "seed");
  c.period_ns = root.integer("period_ns", 1000);
  if (c.period_ns < 2) ObjectReader::fail("period_ns", "must be at least 2");
  if (const json* w = root.get("window_ns")) {
    if (!w->is_number_integer() || w->get<std::int64_t>() < 0) {
      ObjectReader::fail("window_ns", "must be a nonnegative integer");
    }
    c.window_ns = w->get<std::int64_t>();
  }
  const std::string est = root.string("estimator", "conditional");
  const auto parsed = analysis::parse_estimator(est);
  if (!parsed) ObjectReader::fail("estimator", "must be \"conditional\" or \"all-trials\"");
  c.estimator = *parsed;
  c.k_sigma = root.number("k_sigma", 3.0);
  if (!(c.k_sigma > 0.0)) ObjectReader::fail("k_sigma", "must be positive");
  if (const json* o = root.get("output")) {
    ObjectReader r(*o, "output");
    c.out_dir = r.string("dir", ".");
    r.finish();
  }
  c.description = root.string("description", "");
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

sources::Source build_source(const SourceSpec& spec) {
  switch (spec.kind) {
    case SourceKind::Quantum:
      return sources::QuantumReference{};
    case SourceKind::GgAdversary:
      return sources::make_gg_adversary();
    case SourceKind::LocalityAdversary:
      return sources::make_locality_adversary();
    case SourceKind::GuessMixture:
      return sources::make_guess_mixture_adversary(spec.w);
    case SourceKind::RandomLhv: {
      RngStream rng(spec.strategy_seed, static_cast<std::uint64_t>(StreamRole::Generator));
      return sources::random_lhv_strategy(rng);
    }
    case SourceKind::OptimalLhv:
      break;
  }
  lhvopt::OptimizerOptions opts;
  opts.run_fallback = false;
  const auto result = lhvopt::max_chsh_at_efficiency(spec.eta, opts);
  auto source = lhvopt::realize_adversary(result.argmax);
  source.name = "optimal_lhv";
  return source;
}

}  // namespace bell::harness
