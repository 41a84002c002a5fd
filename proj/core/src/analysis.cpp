#include "bell/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "bell/apparatus.hpp"

namespace bell::analysis {

AnalysisError::AnalysisError(SettingPair pair, const std::string& what)
    : std::runtime_error(what), pair_(pair) {}

std::uint64_t CoincidenceTable::total(SettingPair p) const noexcept {
  const auto& c = counts[pair_index(p)];
  return c[0] + c[1] + c[2] + c[3];
}

void attach_metadata(CoincidenceTable& table, const apparatus::RunMetadata& meta) {
  table.pair_trials = meta.pair_trials;
  table.setting_trials = meta.setting_trials;
}

std::size_t PairingResult::mismatches() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      matches.begin(), matches.end(), [](const auto& m) { return m.first != m.second; }));
}

PairingResult pair_coincidences(const EventLog& alice, const EventLog& bob, std::int64_t window_ns,
                                const PairingOptions& options) {
  if (window_ns < 0) throw ConfigError("coincidence window must be nonnegative");

  PairingResult result;
  CoincidenceTable& table = result.table;
  for (const LocalEvent& e : alice.events) ++table.singles[0][label_index(e.setting)];
  for (const LocalEvent& e : bob.events) ++table.singles[1][label_index(e.setting)];
  if (alice.header.setting_trials && bob.header.setting_trials) {
    table.setting_trials = {{*alice.header.setting_trials, *bob.header.setting_trials}};
  }

  const auto& ea = alice.events;
  const auto& eb = bob.events;

  struct Candidate {
    std::int64_t dt;
    std::int64_t t_a;
    std::uint64_t trial_a;
    std::int64_t t_b;
    std::uint64_t trial_b;
    std::uint32_t i;
    std::uint32_t j;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(std::min(ea.size(), eb.size()));
  std::vector<std::uint32_t> degree_a(ea.size(), 0);
  std::vector<std::uint32_t> degree_b(eb.size(), 0);

  std::size_t lo = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const std::int64_t t = ea[i].t_ns;
    while (lo < eb.size() && eb[lo].t_ns < t - window_ns) ++lo;
    for (std::size_t j = lo; j < eb.size() && eb[j].t_ns <= t + window_ns; ++j) {
      candidates.push_back({std::abs(eb[j].t_ns - t), t, ea[i].trial_id, eb[j].t_ns,
                            eb[j].trial_id, static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j)});
      ++degree_a[i];
      ++degree_b[j];
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.dt, x.t_a, x.trial_a, x.t_b, x.trial_b) <
           std::tie(y.dt, y.t_a, y.trial_a, y.t_b, y.trial_b);
  });

  std::vector<char> used_a(ea.size(), 0);
  std::vector<char> used_b(eb.size(), 0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> chosen;
  for (const Candidate& c : candidates) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = 1;
    used_b[c.j] = 1;
    chosen.emplace_back(c.i, c.j);
  }
  std::sort(chosen.begin(), chosen.end());

  result.matches.reserve(chosen.size());
  for (const auto& [i, j] : chosen) {
    table.add({ea[i].setting, eb[j].setting}, ea[i].outcome, eb[j].outcome);
    result.matches.emplace_back(ea[i].trial_id, eb[j].trial_id);
  }

  result.ambiguous_events =
      static_cast<std::size_t>(std::count_if(degree_a.begin(), degree_a.end(), [](auto d) { return d > 1; }) +
                               std::count_if(degree_b.begin(), degree_b.end(), [](auto d) { return d > 1; }));
  const std::size_t n_events = ea.size() + eb.size();
  result.ambiguity_rate =
      n_events == 0 ? 0.0 : static_cast<double>(result.ambiguous_events) / static_cast<double>(n_events);
  if (result.ambiguity_rate > options.max_ambiguity_rate) {
    result.warnings.push_back("ambiguous coincidence rate " + std::to_string(result.ambiguity_rate) +
                              " exceeds " + std::to_string(options.max_ambiguity_rate));
  }
  return result;
}

std::string_view to_string(Estimator e) noexcept {
  return e == Estimator::Conditional ? "conditional" : "all-trials";
}

std::optional<Estimator> parse_estimator(std::string_view s) noexcept {
  if (s == "conditional") return Estimator::Conditional;
  if (s == "all-trials" || s == "all_trials") return Estimator::AllTrials;
  return std::nullopt;
}

CorrelationEstimate correlation(const CoincidenceTable& table, SettingPair pair,
                                Estimator estimator) {
  const std::uint64_t coincidences = table.total(pair);
  if (coincidences == 0) {
    throw AnalysisError(pair, "no coincidences for setting pair " + pair_name(pair) +
                                  "; correlation undefined");
  }
  const auto& c = table.counts[pair_index(pair)];
  const double agree = static_cast<double>(c[0]) + static_cast<double>(c[3]);
  const double disagree = static_cast<double>(c[1]) + static_cast<double>(c[2]);

  CorrelationEstimate out;
  if (estimator == Estimator::Conditional) {
    const auto n = static_cast<double>(coincidences);
    out.n = coincidences;
    out.e = (agree - disagree) / n;
    out.stderr_e = std::sqrt(std::max(0.0, 1.0 - out.e * out.e) / n);
    return out;
  }
  if (!table.pair_trials) {
    throw ConfigError("all-trials estimator needs per-pair trial counts (simulation metadata)");
  }
  const std::uint64_t trials = (*table.pair_trials)[pair_index(pair)];
  if (trials < coincidences) {
    throw ConfigError("trial count for setting pair " + pair_name(pair) +
                      " is smaller than its coincidence count");
  }
  const auto n = static_cast<double>(trials);
  out.n = trials;
  out.e = (agree - disagree) / n;
  const double second_moment = static_cast<double>(coincidences) / n;
  out.stderr_e = std::sqrt(std::max(0.0, second_moment - out.e * out.e) / n);
  return out;
}

ChshResult chsh(const CoincidenceTable& table, Estimator estimator, double k_sigma) {
  ChshResult r;
  r.k_sigma = k_sigma;
  double var = 0.0;
  for (std::size_t i = 0; i < kSettingPairs.size(); ++i) {
    const CorrelationEstimate est = correlation(table, kSettingPairs[i], estimator);
    r.e.set(kSettingPairs[i], est.e);
    r.stderr_e[i] = est.stderr_e;
    r.n[i] = est.n;
    var += est.stderr_e * est.stderr_e;
  }
  r.s = chsh_s(r.e);
  r.stderr_s = std::sqrt(var);
  r.violates = r.s - 2.0 > k_sigma * r.stderr_s;
  return r;
}

std::optional<EfficiencyEstimate> efficiency_estimate(const CoincidenceTable& table) {
  if (!table.setting_trials) return std::nullopt;
  EfficiencyEstimate out;
  for (std::size_t st = 0; st < 2; ++st) {
    for (std::size_t l = 0; l < 2; ++l) {
      const std::uint64_t emitted = (*table.setting_trials)[st][l];
      out.efficiency[st][l] = emitted == 0 ? 0.0
                                           : static_cast<double>(table.singles[st][l]) /
                                                 static_cast<double>(emitted);
    }
  }
  return out;
}

double dark_event_fraction(const EventLog& log, std::uint64_t n_trials) {
  if (n_trials == 0) throw ConfigError("n_trials must be positive");
  const auto dark = std::count_if(log.events.begin(), log.events.end(),
                                  [](const LocalEvent& e) { return e.dark; });
  return static_cast<double>(dark) / static_cast<double>(n_trials);
}

std::uint64_t EmpiricalDistribution::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

StationComparison compare_stations(const EmpiricalDistribution& first,
                                   const EmpiricalDistribution& second) {
  if (first.cells != second.cells || first.counts.size() != first.cells.size() ||
      second.counts.size() != second.cells.size()) {
    throw ConfigError("station comparison needs identical outcome cells");
  }
  const std::uint64_t n1 = first.total();
  const std::uint64_t n2 = second.total();
  if (n1 == 0 || n2 == 0) throw ConfigError("station comparison needs nonempty samples");

  StationComparison out;
  double tv = 0.0;
  for (std::size_t k = 0; k < first.counts.size(); ++k) {
    tv += std::abs(static_cast<double>(first.counts[k]) / static_cast<double>(n1) -
                   static_cast<double>(second.counts[k]) / static_cast<double>(n2));
  }
  out.tv_distance = 0.5 * tv;
  const double n = static_cast<double>(std::min(n1, n2));
  out.bound = 5.0 * std::sqrt(static_cast<double>(first.cells.size()) / n);
  out.consistent = out.tv_distance <= out.bound;
  out.sufficient = out.bound < 1.0;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("slope fit needs positive values");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace bell::analysis
