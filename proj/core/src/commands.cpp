#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bell/harness.hpp"
#include "bell/parallel.hpp"
#include "json.hpp"

namespace bell::harness {

using ordered_json = nlohmann::ordered_json;

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_log(const std::filesystem::path& path, const EventLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_ndjson(out, log);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

EventLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_ndjson(in);
}

void print_summary(std::ostream& out, const AnalysisReport& report) {
  const auto& r = report.primary;
  out << std::fixed << std::setprecision(4);
  out << "S = " << r.s << " +/- " << r.stderr_s << " (" << analysis::to_string(report.estimator)
      << ")\n";
  out << "violation at " << std::setprecision(1) << r.k_sigma << " sigma: "
      << (r.violates ? "true" : "false") << "\n";
  out << std::defaultfloat << std::setprecision(6);
}

// Maps the error taxonomy onto exit codes; `body` does the work.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const LogParseError& e) {
    err << "error: malformed log, " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const analysis::AnalysisError& e) {
    err << "error: analysis undefined for pair " << pair_name(e.pair()) << ": " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const lhvopt::InfeasibleError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig config = load_config(config_path);
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.window_ns) {
      if (*overrides.window_ns < 0) throw ConfigError("field \"window_ns\": must be nonnegative");
      config.window_ns = *overrides.window_ns;
    }
    if (overrides.estimator) config.estimator = *overrides.estimator;

    const sources::Source source = build_source(config.source);
    apparatus::RunOptions opts;
    opts.n_trials = config.n_trials;
    opts.seed = config.seed;
    opts.period_ns = config.period_ns;
    opts.config_hash = config.hash();
    const apparatus::ExperimentRun run = apparatus::run_experiment(
        source, config.station(Station::Alice), config.station(Station::Bob), opts);

    ensure_dir(config.out_dir);
    write_log(config.out_dir / "alice.ndjson", run.alice);
    write_log(config.out_dir / "bob.ndjson", run.bob);
    write_text(config.out_dir / "metadata.json", metadata_json(run.metadata));

    analysis::PairingResult pairing =
        analysis::pair_coincidences(run.alice, run.bob, config.effective_window_ns());
    analysis::attach_metadata(pairing.table, run.metadata);
    for (const auto& w : pairing.warnings) err << "warning: " << w << "\n";
    const AnalysisReport report = analyze_table(pairing.table, config.estimator, config.k_sigma);

    ResultsContext ctx{"run",           sources::source_name(source), run.metadata.scenario,
                       config.seed,     config.n_trials,              opts.config_hash,
                       config.effective_window_ns()};
    write_text(config.out_dir / "results.json", results_json(ctx, pairing, report));
    write_text(config.out_dir / "results.csv", results_csv(report));

    out << "source: " << ctx.source << " (" << ctx.scenario << "), " << config.n_trials
        << " trials, seed " << config.seed << "\n";
    print_summary(out, report);
    return kExitOk;
  });
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const EventLog alice = read_log(options.alice_log);
    const EventLog bob = read_log(options.bob_log);
    if (alice.header.station != Station::Alice || bob.header.station != Station::Bob) {
      throw ConfigError("expected an alice log followed by a bob log");
    }
    alice.validate();
    bob.validate();
    if (alice.header.period_ns != bob.header.period_ns) {
      err << "warning: logs disagree on period_ns\n";
    }
    const std::int64_t window = options.window_ns.value_or(alice.header.period_ns / 4);

    analysis::PairingResult pairing = analysis::pair_coincidences(alice, bob, window);
    std::optional<std::uint64_t> n_trials = alice.header.n_trials;
    if (options.metadata) {
      const apparatus::RunMetadata meta = parse_metadata_json(read_text(*options.metadata));
      analysis::attach_metadata(pairing.table, meta);
      n_trials = meta.n_trials;
    }
    for (const auto& w : pairing.warnings) err << "warning: " << w << "\n";
    const AnalysisReport report = analyze_table(pairing.table, options.estimator, options.k_sigma);

    ResultsContext ctx{"analyze",         "unknown", alice.header.scenario, alice.header.seed,
                       n_trials,          alice.header.config_hash, window};
    ensure_dir(options.out_dir);
    write_text(options.out_dir / "results.json", results_json(ctx, pairing, report));
    write_text(options.out_dir / "results.csv", results_csv(report));

    out << pairing.matches.size() << " coincidences from " << alice.events.size() << " + "
        << bob.events.size() << " events (window " << window << " ns)\n";
    print_summary(out, report);
    return kExitOk;
  });
}

std::vector<double> GridSpec::points() const {
  std::vector<double> out;
  if (step <= 0.0) {
    out.push_back(lo);
    return out;
  }
  for (std::size_t i = 0;; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    if (x > hi + 1e-9) break;
    out.push_back(std::round(x * 1e12) / 1e12);
  }
  return out;
}

GridSpec parse_grid(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t colon = text.find(':', start);
    const std::string_view piece =
        text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start);
    double v = 0.0;
    const auto res = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (res.ec != std::errc{} || res.ptr != piece.data() + piece.size() || piece.empty()) {
      throw ConfigError("grid must be \"lo:hi:step\" or a single efficiency, got \"" +
                        std::string(text) + "\"");
    }
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  GridSpec g;
  if (parts.size() == 1) {
    g = {parts[0], parts[0], 0.0};
  } else if (parts.size() == 3) {
    g = {parts[0], parts[1], parts[2]};
  } else {
    throw ConfigError("grid must be \"lo:hi:step\" or a single efficiency");
  }
  if (!(g.lo > 0.0 && g.hi <= 1.0 && g.lo <= g.hi) || g.step < 0.0 ||
      (g.step == 0.0 && g.lo != g.hi)) {
    throw ConfigError("grid bounds must satisfy 0 < lo <= hi <= 1 with a positive step");
  }
  return g;
}

int cmd_scan_eta(const ScanOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::vector<double> etas = options.grid.points();
    lhvopt::OptimizerOptions opt;
    opt.run_fallback = options.fallback;
    opt.seed = options.seed;

    std::vector<lhvopt::ScanPoint> points(etas.size());
    std::vector<lhvopt::OptimizationResult> full(etas.size());
    parallel_for(etas.size(), worker_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t i = begin; i < end; ++i) {
        lhvopt::EfficiencyConstraint c{etas[i], options.scope, options.relation};
        full[i] = lhvopt::max_chsh_at_efficiency(c, opt);
        points[i] = {full[i].eta, full[i].s_lp, full[i].s_fallback, full[i].s_max, full[i].gap,
                     full[i].flagged};
      }
    });

    // Optional Monte Carlo overlay through the full pipeline.
    std::vector<std::optional<analysis::ChshResult>> mc(etas.size());
    if (options.mc_trials > 0) {
      const AngleSet angles = chsh_optimal_settings();
      for (std::size_t i = 0; i < etas.size(); ++i) {
        const auto source = lhvopt::realize_adversary(full[i].argmax);
        apparatus::RunOptions ro;
        ro.n_trials = options.mc_trials;
        ro.seed = options.seed + i;
        const auto run = apparatus::run_experiment(
            source, apparatus::ideal_station(Station::Alice, angles.alice_primary, angles.alice_alternate),
            apparatus::ideal_station(Station::Bob, angles.bob_primary, angles.bob_alternate), ro);
        const auto pairing = analysis::pair_coincidences(run.alice, run.bob, ro.period_ns / 4);
        mc[i] = analysis::chsh(pairing.table);
      }
    }

    lhvopt::CriticalOptions crit;
    crit.scope = options.scope;
    crit.optimizer.seed = options.seed;
    const double critical = lhvopt::critical_efficiency(options.target_s, crit);

    ensure_dir(options.out_dir);
    std::ostringstream csv;
    csv.precision(12);
    csv << "eta,S_max_LP,S_max_fallback,gap";
    if (options.mc_trials > 0) csv << ",S_mc,stderr_mc";
    csv << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      csv << p.eta << ',' << p.s_lp << ',';
      if (p.s_fallback) csv << *p.s_fallback;
      csv << ',' << p.gap;
      if (options.mc_trials > 0) csv << ',' << mc[i]->s << ',' << mc[i]->stderr_s;
      csv << "\n";
    }
    write_text(options.out_dir / "scan_eta.csv", csv.str());

    ordered_json j;
    j["schema_version"] = kResultsSchemaVersion;
    j["command"] = "scan-eta";
    j["scope"] = options.scope == lhvopt::EfficiencyScope::Klyshko ? "klyshko" : "marginal";
    j["relation"] = options.relation == lhvopt::EfficiencyRelation::Equal ? "equal" : "at-least";
    j["target_S"] = options.target_s;
    j["critical_efficiency"] = critical;
    ordered_json grid = ordered_json::array();
    std::size_t flagged = 0;
    for (const auto& p : points) {
      ordered_json row;
      row["eta"] = p.eta;
      row["S_max_LP"] = p.s_lp;
      row["S_max_fallback"] = p.s_fallback ? ordered_json(*p.s_fallback) : ordered_json(nullptr);
      row["S_max"] = p.s_max;
      row["gap"] = p.gap;
      row["flagged"] = p.flagged;
      flagged += p.flagged ? 1 : 0;
      grid.push_back(row);
    }
    j["grid"] = grid;
    j["flagged_points"] = flagged;
    write_text(options.out_dir / "scan_eta.json", j.dump(2) + "\n");

    out << std::setprecision(6);
    for (const auto& p : points) {
      out << "eta=" << p.eta << "  S_max=" << p.s_max << (p.flagged ? "  [LP/fallback gap]" : "")
          << "\n";
    }
    out << "critical efficiency for S=" << options.target_s << ": " << critical << "\n";
    return kExitOk;
  });
}

analysis::EmpiricalDistribution sample_station(const apparatus::StationConfig& config,
                                               std::uint64_t n, std::uint64_t seed,
                                               StreamRole role) {
  analysis::EmpiricalDistribution d;
  for (SettingLabel l : {SettingLabel::Primary, SettingLabel::Alternate}) {
    for (Outcome o : {Outcome::Plus, Outcome::Minus, Outcome::NoDetect}) {
      d.cells.push_back(std::string(setting_name(config.station, l)) + ":" + std::string(to_string(o)));
    }
  }
  d.counts.assign(d.cells.size(), 0);
  constexpr std::int64_t kPeriod = 1000;
  for (std::uint64_t trial = 0; trial < n; ++trial) {
    RngStream rng = RngStream::trial_stream(seed, role, trial);
    const SettingLabel l = rng.uniform() < 0.5 ? SettingLabel::Primary : SettingLabel::Alternate;
    const Outcome micro = rng.uniform() < 0.5 ? Outcome::Plus : Outcome::Minus;
    const LocalEvent ev = apparatus::station_trial(config, trial, l, micro, rng,
                                                   apparatus::emission_time(trial, kPeriod), kPeriod);
    ++d.counts[3 * label_index(l) + static_cast<std::size_t>(ev.outcome)];
  }
  return d;
}

SwitchComparison compare_switches(const CompareOptions& options) {
  for (double p : {options.active_transmission, options.passive_transmission, options.efficiency}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("transmissions and efficiency must lie in [0, 1]");
  }
  if (options.n == 0) throw ConfigError("--n must be at least 1");

  const AngleSet angles = chsh_optimal_settings();
  apparatus::StationConfig active =
      apparatus::ideal_station(Station::Alice, angles.alice_primary, angles.alice_alternate);
  active.switch_config = {apparatus::SwitchKind::Active, options.active_transmission};
  active.detectors.efficiency = options.efficiency;
  apparatus::StationConfig passive = active;
  passive.switch_config = {apparatus::SwitchKind::Passive, options.passive_transmission};

  const std::array<apparatus::OutcomeDistribution, 5> micro_grid{{
      {1.0, 0.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.5, 0.5, 0.0},
      {0.3, 0.2, 0.5},
      {0.0, 0.0, 1.0},
  }};
  SwitchComparison out;
  for (const auto& p : micro_grid) {
    const auto a = apparatus::outcome_distribution(active, p);
    const auto b = apparatus::outcome_distribution(passive, p);
    for (Outcome o : {Outcome::Plus, Outcome::Minus, Outcome::NoDetect}) {
      out.closed_form_max_diff = std::max(out.closed_form_max_diff, std::abs(a[o] - b[o]));
    }
  }

  out.active = sample_station(active, options.n, options.seed, StreamRole::AliceStation);
  out.passive = sample_station(passive, options.n, options.seed, StreamRole::BobStation);
  out.monte_carlo = analysis::compare_stations(out.active, out.passive);
  out.indistinguishable = out.closed_form_max_diff <= 1e-12 &&
                          (out.monte_carlo.consistent || !out.monte_carlo.sufficient);
  return out;
}

int cmd_compare_switch(const CompareOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SwitchComparison c = compare_switches(options);
    if (options.out_dir) {
      ensure_dir(*options.out_dir);
      ordered_json j;
      j["schema_version"] = kResultsSchemaVersion;
      j["command"] = "compare-switch";
      j["active_transmission"] = options.active_transmission;
      j["passive_transmission"] = options.passive_transmission;
      j["efficiency"] = options.efficiency;
      j["n"] = options.n;
      j["seed"] = options.seed;
      j["closed_form_max_diff"] = c.closed_form_max_diff;
      j["tv_distance"] = c.monte_carlo.tv_distance;
      j["tv_bound"] = c.monte_carlo.bound;
      j["consistent"] = c.monte_carlo.consistent;
      j["sufficient_samples"] = c.monte_carlo.sufficient;
      j["indistinguishable"] = c.indistinguishable;
      ordered_json cells = ordered_json::array();
      for (std::size_t k = 0; k < c.active.cells.size(); ++k) {
        cells.push_back({{"cell", c.active.cells[k]},
                         {"active", c.active.counts[k]},
                         {"passive", c.passive.counts[k]}});
      }
      j["cells"] = cells;
      write_text(*options.out_dir / "compare_switch.json", j.dump(2) + "\n");
    }
    out << "active(T=" << options.active_transmission << ") vs passive(T="
        << options.passive_transmission << "), eta=" << options.efficiency << "\n";
    out << "closed-form max diff: " << std::scientific << std::setprecision(3)
        << c.closed_form_max_diff << std::defaultfloat << "\n";
    out << "monte carlo TV: " << std::setprecision(6) << c.monte_carlo.tv_distance
        << " (bound " << c.monte_carlo.bound << ", N=" << options.n << ")\n";
    if (!c.monte_carlo.sufficient) {
      out << "note: insufficient samples; the TV test is inconclusive at this N\n";
    }
    out << "indistinguishable: " << (c.indistinguishable ? "true" : "false") << "\n";
    return kExitOk;
  });
}

}  // namespace bell::harness
