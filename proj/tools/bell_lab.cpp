// bell_lab: simulate CHSH experiments, analyze event logs, scan the LHV
// efficiency threshold and compare switch models.

#include <iostream>

#include "CLI11.hpp"
#include "bell/harness.hpp"

namespace h = bell::harness;

namespace {

std::optional<bell::analysis::Estimator> estimator_from(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return bell::analysis::parse_estimator(s);
}

const auto kEstimatorCheck = CLI::IsMember({"conditional", "all-trials", "all_trials"});

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CHSH Bell-test simulator and analysis toolkit"};
  app.require_subcommand(1);

  // run
  std::filesystem::path run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  std::optional<std::int64_t> run_window;
  std::string run_estimator;
  auto* run = app.add_subcommand("run", "Simulate an experiment and analyze it");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--out-dir", run_out, "Override the output directory");
  run->add_option("--window-ns", run_window, "Coincidence window in ns")->check(CLI::NonNegativeNumber);
  run->add_option("--estimator", run_estimator, "conditional | all-trials")->check(kEstimatorCheck);

  // analyze
  h::AnalyzeOptions an;
  std::string an_estimator;
  std::string an_metadata;
  auto* analyze = app.add_subcommand("analyze", "Pair and analyze two station logs");
  analyze->add_option("alice", an.alice_log, "Alice NDJSON log")->required();
  analyze->add_option("bob", an.bob_log, "Bob NDJSON log")->required();
  analyze->add_option("--metadata", an_metadata, "metadata.json with per-pair trial counts");
  analyze->add_option("--out-dir", an.out_dir, "Output directory");
  analyze->add_option("--window-ns", an.window_ns, "Coincidence window in ns (default: period/4)")
      ->check(CLI::NonNegativeNumber);
  analyze->add_option("--estimator", an_estimator, "conditional | all-trials")->check(kEstimatorCheck);
  analyze->add_option("--k-sigma", an.k_sigma, "Violation threshold in standard errors")
      ->check(CLI::PositiveNumber);

  // scan-eta
  h::ScanOptions scan;
  std::string grid_text = "0.55:1.0:0.05";
  std::string scope_text = "klyshko";
  std::string relation_text = "equal";
  bool no_fallback = false;
  auto* scan_cmd = app.add_subcommand("scan-eta", "Maximum LHV S versus detector efficiency");
  scan_cmd->add_option("--grid", grid_text, "lo:hi:step or a single efficiency")->capture_default_str();
  scan_cmd->add_option("--target", scan.target_s, "Target S for the critical efficiency");
  scan_cmd->add_option("--scope", scope_text, "Efficiency constraint scope")
      ->check(CLI::IsMember({"klyshko", "marginal"}));
  scan_cmd->add_option("--relation", relation_text, "Efficiency relation")
      ->check(CLI::IsMember({"equal", "at-least"}));
  scan_cmd->add_flag("--no-fallback", no_fallback, "Skip the multistart optimizer cross-check");
  scan_cmd->add_option("--mc-trials", scan.mc_trials, "Monte Carlo trials per grid point (0 = off)");
  scan_cmd->add_option("--seed", scan.seed, "Seed for the fallback and Monte Carlo");
  scan_cmd->add_option("--out-dir", scan.out_dir, "Output directory");

  // compare-switch
  h::CompareOptions cmp;
  std::optional<std::string> cmp_out;
  auto* compare = app.add_subcommand("compare-switch", "Active versus passive setting switches");
  compare->add_option("--n", cmp.n, "Monte Carlo trials per station")->check(CLI::PositiveNumber);
  compare->add_option("--seed", cmp.seed, "Seed");
  compare->add_option("--active-T", cmp.active_transmission, "Active switch transmission")
      ->check(CLI::Range(0.0, 1.0));
  compare->add_option("--passive-T", cmp.passive_transmission, "Passive switch transmission")
      ->check(CLI::Range(0.0, 1.0));
  compare->add_option("--efficiency", cmp.efficiency, "Detector efficiency")->check(CLI::Range(0.0, 1.0));
  compare->add_option("--out-dir", cmp_out, "Write compare_switch.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return h::kExitConfig;
  }

  if (run->parsed()) {
    h::RunOverrides o;
    o.seed = run_seed;
    if (run_out) o.out_dir = *run_out;
    o.window_ns = run_window;
    o.estimator = estimator_from(run_estimator);
    return h::cmd_run(run_config, o, std::cout, std::cerr);
  }
  if (analyze->parsed()) {
    if (auto e = estimator_from(an_estimator)) an.estimator = *e;
    if (!an_metadata.empty()) an.metadata = an_metadata;
    return h::cmd_analyze(an, std::cout, std::cerr);
  }
  if (scan_cmd->parsed()) {
    try {
      scan.grid = h::parse_grid(grid_text);
    } catch (const bell::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return h::kExitConfig;
    }
    scan.scope = scope_text == "marginal" ? bell::lhvopt::EfficiencyScope::Marginal
                                          : bell::lhvopt::EfficiencyScope::Klyshko;
    scan.relation = relation_text == "at-least" ? bell::lhvopt::EfficiencyRelation::AtLeast
                                                : bell::lhvopt::EfficiencyRelation::Equal;
    scan.fallback = !no_fallback;
    return h::cmd_scan_eta(scan, std::cout, std::cerr);
  }
  if (cmp_out) cmp.out_dir = *cmp_out;
  return h::cmd_compare_switch(cmp, std::cout, std::cerr);
}
