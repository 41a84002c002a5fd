#include <sstream>

#include "bell/harness.hpp"
#include "json.hpp"

namespace bell::harness {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 4> kCellNames{"++", "+-", "-+", "--"};

ordered_json chsh_block(const analysis::ChshResult& r) {
  ordered_json j;
  j["S"] = r.s;
  j["stderr_S"] = r.stderr_s;
  j["violates"] = r.violates;
  ordered_json e = ordered_json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    e.push_back({{"pair", pair_name(kSettingPairs[i])},
                 {"E", *r.e.get(kSettingPairs[i])},
                 {"stderr", r.stderr_e[i]},
                 {"n", r.n[i]}});
  }
  j["correlations"] = e;
  return j;
}

ordered_json per_station(const std::array<std::array<double, 2>, 2>& v) {
  ordered_json j;
  for (Station st : {Station::Alice, Station::Bob}) {
    ordered_json s;
    for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
      s[std::string(setting_name(st, l))] = v[station_index(st)][label_index(l)];
    }
    j[std::string(to_string(st))] = s;
  }
  return j;
}

ordered_json per_station(const std::array<std::array<std::uint64_t, 2>, 2>& v) {
  ordered_json j;
  for (Station st : {Station::Alice, Station::Bob}) {
    ordered_json s;
    for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
      s[std::string(setting_name(st, l))] = v[station_index(st)][label_index(l)];
    }
    j[std::string(to_string(st))] = s;
  }
  return j;
}

}  // namespace

AnalysisReport analyze_table(const analysis::CoincidenceTable& table, analysis::Estimator estimator,
                             double k_sigma) {
  AnalysisReport r;
  r.table = table;
  r.estimator = estimator;
  r.k_sigma = k_sigma;
  r.primary = analysis::chsh(table, estimator, k_sigma);
  r.conditional = analysis::chsh(table, analysis::Estimator::Conditional, k_sigma);
  if (table.pair_trials) r.all_trials = analysis::chsh(table, analysis::Estimator::AllTrials, k_sigma);
  r.efficiency = analysis::efficiency_estimate(table);
  return r;
}

ScenarioResult run_scenario(const ExperimentConfig& config) {
  const sources::Source source = build_source(config.source);
  apparatus::RunOptions opts;
  opts.n_trials = config.n_trials;
  opts.seed = config.seed;
  opts.period_ns = config.period_ns;
  opts.config_hash = config.hash();

  ScenarioResult out;
  out.run = apparatus::run_experiment(source, config.station(Station::Alice),
                                      config.station(Station::Bob), opts);
  out.pairing = analysis::pair_coincidences(out.run.alice, out.run.bob, config.effective_window_ns());
  analysis::attach_metadata(out.pairing.table, out.run.metadata);
  out.report = analyze_table(out.pairing.table, config.estimator, config.k_sigma);
  return out;
}

std::string results_json(const ResultsContext& ctx, const analysis::PairingResult& pairing,
                         const AnalysisReport& report) {
  const analysis::CoincidenceTable& t = report.table;
  ordered_json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["command"] = ctx.command;
  j["source"] = ctx.source;
  j["scenario"] = ctx.scenario;
  j["seed"] = ctx.seed;
  j["n_trials"] = ctx.n_trials ? ordered_json(*ctx.n_trials) : ordered_json(nullptr);
  j["config_hash"] = ctx.config_hash;
  j["window_ns"] = ctx.window_ns;
  j["estimator"] = std::string(analysis::to_string(report.estimator));
  j["k_sigma"] = report.k_sigma;

  ordered_json pairs = ordered_json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    const SettingPair p = kSettingPairs[i];
    ordered_json counts;
    for (std::size_t c = 0; c < 4; ++c) counts[kCellNames[c]] = t.counts[i][c];
    ordered_json row;
    row["pair"] = pair_name(p);
    row["counts"] = counts;
    row["coincidences"] = t.total(p);
    row["trials"] = t.pair_trials ? ordered_json((*t.pair_trials)[i]) : ordered_json(nullptr);
    row["E"] = *report.primary.e.get(p);
    row["stderr"] = report.primary.stderr_e[i];
    pairs.push_back(row);
  }
  j["pairs"] = pairs;
  j["S"] = report.primary.s;
  j["stderr_S"] = report.primary.stderr_s;
  j["violates"] = report.primary.violates;
  j["conditional"] = report.conditional ? chsh_block(*report.conditional) : ordered_json(nullptr);
  j["all_trials"] = report.all_trials ? chsh_block(*report.all_trials) : ordered_json(nullptr);
  j["singles"] = per_station(t.singles);
  j["efficiency"] = report.efficiency ? per_station(report.efficiency->efficiency) : ordered_json(nullptr);

  ordered_json pj;
  pj["coincidences"] = pairing.matches.size();
  pj["ambiguous_events"] = pairing.ambiguous_events;
  pj["ambiguity_rate"] = pairing.ambiguity_rate;
  pj["trial_id_mismatches"] = pairing.mismatches();
  pj["warnings"] = pairing.warnings;
  j["pairing"] = pj;
  return j.dump(2) + "\n";
}

std::string results_csv(const AnalysisReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "pair,n_pp,n_pm,n_mp,n_mm,coincidences,trials,E,stderr\n";
  for (std::size_t i = 0; i < 4; ++i) {
    const SettingPair p = kSettingPairs[i];
    const auto& c = report.table.counts[i];
    out << '"' << pair_name(p) << '"' << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3]
        << ',' << report.table.total(p) << ',';
    if (report.table.pair_trials) out << (*report.table.pair_trials)[i];
    out << ',' << *report.primary.e.get(p) << ',' << report.primary.stderr_e[i] << '\n';
  }
  return out.str();
}

std::string metadata_json(const apparatus::RunMetadata& meta) {
  ordered_json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["n_trials"] = meta.n_trials;
  j["scenario"] = meta.scenario;
  ordered_json pairs;
  for (std::size_t i = 0; i < 4; ++i) pairs[pair_name(kSettingPairs[i])] = meta.pair_trials[i];
  j["pair_trials"] = pairs;
  j["setting_trials"] = per_station(meta.setting_trials);
  return j.dump(2) + "\n";
}

apparatus::RunMetadata parse_metadata_json(std::string_view text) {
  const json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("metadata: invalid JSON document");
  apparatus::RunMetadata m;
  try {
    m.n_trials = j.at("n_trials").get<std::uint64_t>();
    m.scenario = j.value("scenario", std::string("standard"));
    for (std::size_t i = 0; i < 4; ++i) {
      m.pair_trials[i] = j.at("pair_trials").at(pair_name(kSettingPairs[i])).get<std::uint64_t>();
    }
    for (Station st : {Station::Alice, Station::Bob}) {
      for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
        m.setting_trials[station_index(st)][label_index(l)] =
            j.at("setting_trials")
                .at(std::string(to_string(st)))
                .at(std::string(setting_name(st, l)))
                .get<std::uint64_t>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("metadata: ") + e.what());
  }
  return m;
}

}  // namespace bell::harness
