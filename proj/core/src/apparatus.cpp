#include "bell/apparatus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bell/parallel.hpp"

namespace bell::apparatus {

namespace {

bool is_probability(double p) noexcept { return p >= 0.0 && p <= 1.0; }

std::string_view switch_name(SwitchKind k) noexcept {
  return k == SwitchKind::Active ? "active" : "passive";
}

}  // namespace

void StationConfig::validate() const {
  const std::string who(to_string(station));
  if (!is_probability(switch_config.transmission)) {
    throw ConfigError(who + ": switch transmission must lie in [0, 1]");
  }
  if (!is_probability(detectors.efficiency)) {
    throw ConfigError(who + ": detector efficiency must lie in [0, 1]");
  }
  if (!(detectors.dark_rate >= 0.0 && detectors.dark_rate <= 20.0)) {
    throw ConfigError(who + ": dark_rate must lie in [0, 20] counts per trial");
  }
  if (!(jitter_ns >= 0.0) || !std::isfinite(jitter_ns)) {
    throw ConfigError(who + ": jitter_ns must be finite and nonnegative");
  }
}

StationConfig ideal_station(Station station, Angle primary, Angle alternate) {
  StationConfig c;
  c.station = station;
  c.primary = primary;
  c.alternate = alternate;
  return c;
}

void OutcomeDistribution::validate() const {
  if (!(plus >= 0.0 && minus >= 0.0 && no_detect >= 0.0) ||
      std::abs(plus + minus + no_detect - 1.0) > 1e-9) {
    throw ConfigError("outcome distribution must be nonnegative and sum to 1");
  }
}

double OutcomeDistribution::operator[](Outcome o) const noexcept {
  switch (o) {
    case Outcome::Plus:
      return plus;
    case Outcome::Minus:
      return minus;
    case Outcome::NoDetect:
      break;
  }
  return no_detect;
}

double survival_probability(const StationConfig& config) noexcept {
  const double routing = config.switch_config.kind == SwitchKind::Passive ? 0.5 : 1.0;
  return config.switch_config.transmission * routing * config.detectors.efficiency;
}

OutcomeDistribution outcome_distribution(const StationConfig& config,
                                         const OutcomeDistribution& p_micro) {
  p_micro.validate();
  const double keep = survival_probability(config);
  OutcomeDistribution out;
  out.plus = keep * p_micro.plus;
  out.minus = keep * p_micro.minus;
  out.no_detect = p_micro.no_detect + (1.0 - keep) * (p_micro.plus + p_micro.minus);
  return out;
}

TrialSlot trial_slot(const StationConfig& config, std::int64_t t_emit,
                     std::int64_t period_ns) noexcept {
  const std::int64_t center = t_emit + config.delay_ns;
  const std::int64_t begin = center - period_ns / 2;
  return {begin, begin + period_ns};
}

LocalEvent station_trial(const StationConfig& config, std::uint64_t trial_id,
                         SettingLabel setting, Outcome micro, RngStream& rng,
                         std::int64_t t_emit, std::int64_t period_ns) {
  // Fixed draw order: switch, coupler, detector, jitter, dark counts.
  const bool through_switch = rng.uniform() < config.switch_config.transmission;
  const bool to_selected =
      config.switch_config.kind == SwitchKind::Active || rng.uniform() < 0.5;
  const bool clicked = rng.uniform() < config.detectors.efficiency;
  const double jitter = config.jitter_ns * rng.normal();

  const TrialSlot slot = trial_slot(config, t_emit, period_ns);

  LocalEvent ev;
  ev.trial_id = trial_id;
  ev.setting = setting;
  ev.outcome = Outcome::NoDetect;
  ev.t_ns = slot.begin;

  if (detected(micro) && through_switch && to_selected && clicked) {
    const auto t = static_cast<std::int64_t>(
        std::llround(static_cast<double>(t_emit + config.delay_ns) + jitter));
    ev.t_ns = std::clamp(t, slot.begin, slot.end - 1);
    ev.outcome = micro;
  }

  if (config.detectors.dark_rate > 0.0) {
    const std::uint64_t width = static_cast<std::uint64_t>(slot.end - slot.begin);
    for (Outcome detector : {Outcome::Plus, Outcome::Minus}) {
      const std::uint64_t n = rng.poisson(config.detectors.dark_rate);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::int64_t t = slot.begin + static_cast<std::int64_t>(rng.uniform_index(width));
        if (ev.outcome == Outcome::NoDetect || t < ev.t_ns) {
          ev.t_ns = t;
          ev.outcome = detector;
          ev.dark = true;
        }
      }
    }
  }
  return ev;
}

std::string describe_run(const sources::Source& source, const StationConfig& alice,
                         const StationConfig& bob, const RunOptions& options) {
  std::ostringstream out;
  out.precision(17);
  out << "source=" << sources::source_name(source) << ";n_trials=" << options.n_trials
      << ";seed=" << options.seed << ";period_ns=" << options.period_ns;
  for (const StationConfig* c : {&alice, &bob}) {
    out << ";" << to_string(c->station) << "={switch=" << switch_name(c->switch_config.kind)
        << ",transmission=" << c->switch_config.transmission
        << ",efficiency=" << c->detectors.efficiency << ",dark_rate=" << c->detectors.dark_rate
        << ",angles=" << c->primary.degrees() << "/" << c->alternate.degrees()
        << ",jitter_ns=" << c->jitter_ns << ",delay_ns=" << c->delay_ns << "}";
  }
  return out.str();
}

ExperimentRun run_experiment(const sources::Source& source, const StationConfig& alice,
                             const StationConfig& bob, const RunOptions& options) {
  if (options.n_trials == 0) throw ConfigError("n_trials must be at least 1");
  if (options.period_ns < 2) throw ConfigError("period_ns must be at least 2");
  if (alice.station != Station::Alice || bob.station != Station::Bob) {
    throw ConfigError("station configs must be given as (alice, bob)");
  }
  alice.validate();
  bob.validate();

  const unsigned workers = options.threads == 0 ? worker_count() : options.threads;
  const std::size_t n = options.n_trials;
  const std::size_t chunks = std::clamp<std::size_t>(workers, 1, n);

  struct Shard {
    std::vector<LocalEvent> alice;
    std::vector<LocalEvent> bob;
    RunMetadata meta;
  };
  std::vector<Shard> shards(chunks);

  parallel_for(n, static_cast<unsigned>(chunks), [&](std::size_t begin, std::size_t end,
                                                     std::size_t chunk) {
    Shard& shard = shards[chunk];
    for (std::size_t i = begin; i < end; ++i) {
      const auto trial = static_cast<std::uint64_t>(i);
      auto a_choice = RngStream::trial_stream(options.seed, StreamRole::AliceSetting, trial);
      auto b_choice = RngStream::trial_stream(options.seed, StreamRole::BobSetting, trial);
      const SettingLabel la = a_choice.uniform() < 0.5 ? SettingLabel::Primary : SettingLabel::Alternate;
      const SettingLabel lb = b_choice.uniform() < 0.5 ? SettingLabel::Primary : SettingLabel::Alternate;
      ++shard.meta.pair_trials[pair_index({la, lb})];
      ++shard.meta.setting_trials[0][label_index(la)];
      ++shard.meta.setting_trials[1][label_index(lb)];

      auto streams = sources::TrialStreams::for_trial(options.seed, trial);
      const auto [micro_a, micro_b] =
          sources::emit_pair(source, alice.setting(la), bob.setting(lb), trial, streams);

      const std::int64_t t_emit = emission_time(trial, options.period_ns);
      auto a_rng = RngStream::trial_stream(options.seed, StreamRole::AliceStation, trial);
      auto b_rng = RngStream::trial_stream(options.seed, StreamRole::BobStation, trial);
      const LocalEvent ea = station_trial(alice, trial, la, micro_a, a_rng, t_emit, options.period_ns);
      const LocalEvent eb = station_trial(bob, trial, lb, micro_b, b_rng, t_emit, options.period_ns);
      if (detected(ea.outcome)) shard.alice.push_back(ea);
      if (detected(eb.outcome)) shard.bob.push_back(eb);
    }
  });

  ExperimentRun run;
  run.metadata.n_trials = options.n_trials;
  run.metadata.scenario = sources::is_locality_loophole(source) ? "locality_loophole" : "standard";
  std::size_t na = 0;
  std::size_t nb = 0;
  for (const auto& s : shards) {
    na += s.alice.size();
    nb += s.bob.size();
    for (std::size_t p = 0; p < 4; ++p) run.metadata.pair_trials[p] += s.meta.pair_trials[p];
    for (std::size_t st = 0; st < 2; ++st) {
      for (std::size_t l = 0; l < 2; ++l) {
        run.metadata.setting_trials[st][l] += s.meta.setting_trials[st][l];
      }
    }
  }
  run.alice.events.reserve(na);
  run.bob.events.reserve(nb);
  for (auto& s : shards) {
    run.alice.events.insert(run.alice.events.end(), s.alice.begin(), s.alice.end());
    run.bob.events.insert(run.bob.events.end(), s.bob.begin(), s.bob.end());
  }

  const std::string hash = options.config_hash.empty()
                               ? config_hash_hex(describe_run(source, alice, bob, options))
                               : options.config_hash;
  for (Station st : {Station::Alice, Station::Bob}) {
    EventLogHeader& h = st == Station::Alice ? run.alice.header : run.bob.header;
    h.station = st;
    h.seed = options.seed;
    h.config_hash = hash;
    h.period_ns = options.period_ns;
    h.scenario = run.metadata.scenario;
    h.n_trials = options.n_trials;
    h.setting_trials = run.metadata.setting_trials[station_index(st)];
  }
  return run;
}

}  // namespace bell::apparatus
