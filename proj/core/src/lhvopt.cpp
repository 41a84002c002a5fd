#include "bell/lhvopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bell/parallel.hpp"
#include "bell/rng.hpp"
#include "bell/simplex.hpp"

namespace bell::lhvopt {

namespace {

constexpr std::array<Outcome, 3> kLocalOutcomes{Outcome::Plus, Outcome::Minus, Outcome::NoDetect};

std::size_t outcome_code(Outcome o) noexcept { return static_cast<std::size_t>(o); }

StrategyCoefficients build_coefficients() {
  StrategyCoefficients c;
  const auto strategies = enumerate_strategies();
  for (std::size_t k = 0; k < kStrategyCount; ++k) {
    const auto& st = strategies[k];
    for (std::size_t i = 0; i < 4; ++i) {
      const auto a = outcome_value(st.alice[label_index(kSettingPairs[i].alice)]);
      const auto b = outcome_value(st.bob[label_index(kSettingPairs[i].bob)]);
      c.coincidence[i][k] = (a && b) ? 1 : 0;
      c.numerator[i][k] = (a && b) ? *a * *b : 0;
    }
    for (std::size_t l = 0; l < 2; ++l) {
      c.detection[0][l][k] = detected(st.alice[l]) ? 1 : 0;
      c.detection[1][l][k] = detected(st.bob[l]) ? 1 : 0;
    }
  }
  return c;
}

template <class Row>
double dot(const Row& row, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t k = 0; k < kStrategyCount; ++k) s += row[k] * p[k];
  return s;
}

// One efficiency row over the 81 weights: coef . p (= or >=) rhs_eta * eta.
struct EfficiencyRow {
  std::array<double, kStrategyCount> coef{};
  double rhs = 0.0;
};

std::vector<EfficiencyRow> efficiency_rows(const EfficiencyConstraint& c) {
  const auto& coef = strategy_coefficients();
  std::vector<EfficiencyRow> rows;
  if (c.scope == EfficiencyScope::Klyshko) {
    for (std::size_t i = 0; i < 4; ++i) {
      const SettingPair pair = kSettingPairs[i];
      for (Station side : {Station::Alice, Station::Bob}) {
        const SettingLabel l = side == Station::Alice ? pair.alice : pair.bob;
        EfficiencyRow r;
        for (std::size_t k = 0; k < kStrategyCount; ++k) {
          r.coef[k] = coef.coincidence[i][k] -
                      c.eta * coef.detection[station_index(side)][label_index(l)][k];
        }
        rows.push_back(r);
      }
    }
  } else {
    for (std::size_t st = 0; st < 2; ++st) {
      for (std::size_t l = 0; l < 2; ++l) {
        EfficiencyRow r;
        for (std::size_t k = 0; k < kStrategyCount; ++k) r.coef[k] = coef.detection[st][l][k];
        r.rhs = c.eta;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

void check_eta(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("efficiency must lie in (0, 1]");
}

StrategyMixture normalized(std::vector<double> w) {
  for (double& x : w) x = std::max(0.0, x);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  StrategyMixture m;
  m.weights = std::move(w);
  return m;
}

// ---- multistart gradient projection ----------------------------------------
//
// Variables z = (p, slack) with E z = e, z >= 0; slacks only exist for the
// AtLeast relation. The objective reads p only.

struct FeasibleSet {
  std::size_t n = 0;  // total variables
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
};

FeasibleSet feasible_set(const EfficiencyConstraint& c) {
  const auto eff = efficiency_rows(c);
  const bool slack = c.relation == EfficiencyRelation::AtLeast;
  FeasibleSet fs;
  fs.n = kStrategyCount + (slack ? eff.size() : 0);
  for (std::size_t r = 0; r < eff.size(); ++r) {
    std::vector<double> row(fs.n, 0.0);
    std::copy(eff[r].coef.begin(), eff[r].coef.end(), row.begin());
    if (slack) row[kStrategyCount + r] = -1.0;
    fs.rows.push_back(std::move(row));
    fs.rhs.push_back(eff[r].rhs);
  }
  std::vector<double> sum(fs.n, 0.0);
  std::fill(sum.begin(), sum.begin() + kStrategyCount, 1.0);
  fs.rows.push_back(std::move(sum));
  fs.rhs.push_back(1.0);
  return fs;
}

struct RatioObjective {
  // Value and gradient of S(p); nullopt when a denominator is not positive.
  std::optional<double> value(std::span<const double> z) const {
    const auto& coef = strategy_coefficients();
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double d = dot(coef.coincidence[i], z);
      if (!(d > 1e-12)) return std::nullopt;
      s += kChshSigns[i] * dot(coef.numerator[i], z) / d;
    }
    return s;
  }

  void gradient(std::span<const double> z, std::vector<double>& g) const {
    const auto& coef = strategy_coefficients();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      const double n = dot(coef.numerator[i], z);
      const double d = dot(coef.coincidence[i], z);
      for (std::size_t k = 0; k < kStrategyCount; ++k) {
        g[k] += kChshSigns[i] * (coef.numerator[i][k] * d - n * coef.coincidence[i][k]) / (d * d);
      }
    }
  }
};

// Orthonormal basis of the rows of E restricted to free coordinates, with the
// transform T such that q_k = sum_l T[k][l] * row_l. Dependent rows are dropped.
struct RowBasis {
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> t;
};

RowBasis orthonormalize(const FeasibleSet& fs, const std::vector<char>& free) {
  RowBasis b;
  const std::size_t m = fs.rows.size();
  for (std::size_t l = 0; l < m; ++l) {
    std::vector<double> v(fs.n, 0.0);
    for (std::size_t j = 0; j < fs.n; ++j) v[j] = free[j] ? fs.rows[l][j] : 0.0;
    std::vector<double> tv(m, 0.0);
    tv[l] = 1.0;
    // Two passes of modified Gram-Schmidt for stability.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < b.q.size(); ++k) {
        double proj = 0.0;
        for (std::size_t j = 0; j < fs.n; ++j) proj += b.q[k][j] * v[j];
        for (std::size_t j = 0; j < fs.n; ++j) v[j] -= proj * b.q[k][j];
        for (std::size_t x = 0; x < m; ++x) tv[x] -= proj * b.t[k][x];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-9) continue;
    for (double& x : v) x /= norm;
    for (double& x : tv) x /= norm;
    b.q.push_back(std::move(v));
    b.t.push_back(std::move(tv));
  }
  return b;
}

struct AscentResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> z;
};

AscentResult gradient_projection_ascent(const FeasibleSet& fs, std::vector<double> z,
                                        std::size_t iterations) {
  const RatioObjective f;
  const std::size_t n = fs.n;
  constexpr double kZero = 1e-14;

  std::vector<char> free(n, 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (z[j] <= kZero) {
      z[j] = 0.0;
      free[j] = 0;
    }
  }
  auto current = f.value(z);
  if (!current) return {};

  std::vector<double> g(n, 0.0);
  std::vector<double> d(n, 0.0);
  std::vector<double> trial(n, 0.0);
  double step_hint = 1.0;

  for (std::size_t it = 0; it < iterations; ++it) {
    f.gradient(z, g);
    const RowBasis basis = orthonormalize(fs, free);

    // d = projection of g onto {E d = 0, d_j = 0 off the free set}.
    std::vector<double> coeff(basis.q.size(), 0.0);
    for (std::size_t j = 0; j < n; ++j) d[j] = free[j] ? g[j] : 0.0;
    for (std::size_t k = 0; k < basis.q.size(); ++k) {
      double c = 0.0;
      for (std::size_t j = 0; j < n; ++j) c += basis.q[k][j] * d[j];
      coeff[k] = c;
    }
    for (std::size_t k = 0; k < basis.q.size(); ++k) {
      for (std::size_t j = 0; j < n; ++j) d[j] -= coeff[k] * basis.q[k][j];
    }
    double dnorm = 0.0;
    for (double x : d) dnorm = std::max(dnorm, std::abs(x));

    if (dnorm < 1e-10) {
      // Stationary on this face: release the bound whose multiplier says the
      // objective still increases off it, or stop at a KKT point.
      std::vector<double> lambda(fs.rows.size(), 0.0);
      for (std::size_t k = 0; k < basis.q.size(); ++k) {
        for (std::size_t l = 0; l < fs.rows.size(); ++l) lambda[l] += coeff[k] * basis.t[k][l];
      }
      std::size_t release = n;
      double best = 1e-9;
      for (std::size_t j = 0; j < n; ++j) {
        if (free[j]) continue;
        double r = g[j];
        for (std::size_t l = 0; l < fs.rows.size(); ++l) r -= lambda[l] * fs.rows[l][j];
        if (r > best) {
          best = r;
          release = j;
        }
      }
      if (release == n) break;
      free[release] = 1;
      continue;
    }

    double max_step = std::numeric_limits<double>::infinity();
    std::size_t blocking = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (d[j] < -1e-15) {
        const double s = z[j] / -d[j];
        if (s < max_step) {
          max_step = s;
          blocking = j;
        }
      }
    }
    double slope = 0.0;
    for (std::size_t j = 0; j < n; ++j) slope += g[j] * d[j];

    double step = std::min(max_step, step_hint);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = z[j] + step * d[j];
      if (step == max_step && blocking < n) trial[blocking] = 0.0;
      for (std::size_t j = 0; j < n; ++j) trial[j] = std::max(0.0, trial[j]);
      const auto v = f.value(trial);
      if (v && *v >= *current + 1e-4 * step * slope) {
        accepted = true;
        current = v;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    z.swap(trial);
    step_hint = std::min(1e6, step * 4.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (free[j] && z[j] <= kZero) {
        z[j] = 0.0;
        free[j] = 0;
      }
    }
  }
  return {*current, std::move(z)};
}

}  // namespace

std::array<sources::LocalMap, kLocalMapCount> enumerate_local_maps() noexcept {
  std::array<sources::LocalMap, kLocalMapCount> maps{};
  std::size_t idx = 0;
  for (Outcome primary : kLocalOutcomes) {
    for (Outcome alternate : kLocalOutcomes) maps[idx++] = {primary, alternate};
  }
  return maps;
}

std::vector<DeterministicStrategy> enumerate_strategies() {
  const auto maps = enumerate_local_maps();
  std::vector<DeterministicStrategy> out;
  out.reserve(kStrategyCount);
  for (const auto& a : maps) {
    for (const auto& b : maps) out.push_back({a, b});
  }
  return out;
}

std::size_t local_map_index(const sources::LocalMap& m) noexcept {
  return 3 * outcome_code(m[0]) + outcome_code(m[1]);
}

std::size_t strategy_index(const sources::LocalMap& alice, const sources::LocalMap& bob) noexcept {
  return kLocalMapCount * local_map_index(alice) + local_map_index(bob);
}

const StrategyCoefficients& strategy_coefficients() {
  static const StrategyCoefficients coef = build_coefficients();
  return coef;
}

StrategyMixture StrategyMixture::point_mass(std::size_t index) {
  if (index >= kStrategyCount) throw ConfigError("strategy index out of range");
  StrategyMixture m;
  m.weights[index] = 1.0;
  return m;
}

StrategyMixture StrategyMixture::uniform_over(std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("uniform mixture needs at least one strategy");
  StrategyMixture m;
  for (std::size_t i : indices) {
    if (i >= kStrategyCount) throw ConfigError("strategy index out of range");
    m.weights[i] += 1.0 / static_cast<double>(indices.size());
  }
  return m;
}

void StrategyMixture::validate() const {
  if (weights.size() != kStrategyCount) throw ConfigError("a mixture has exactly 81 weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12)) throw ConfigError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12 * kStrategyCount) {
    throw ConfigError("mixture weights must sum to 1");
  }
}

std::optional<double> conditional_chsh(const StrategyMixture& mixture) {
  mixture.validate();
  return conditional_chsh<double>(std::span<const double>(mixture.weights));
}

std::array<std::array<double, 2>, 2> detection_probabilities(const StrategyMixture& mixture) {
  const auto& coef = strategy_coefficients();
  std::array<std::array<double, 2>, 2> out{};
  for (std::size_t st = 0; st < 2; ++st) {
    for (std::size_t l = 0; l < 2; ++l) out[st][l] = dot(coef.detection[st][l], mixture.weights);
  }
  return out;
}

std::optional<double> klyshko_efficiency(const StrategyMixture& mixture, SettingPair pair,
                                         Station side) {
  const auto& coef = strategy_coefficients();
  const SettingLabel l = side == Station::Alice ? pair.alice : pair.bob;
  const double singles = dot(coef.detection[station_index(side)][label_index(l)], mixture.weights);
  if (!(singles > 0.0)) return std::nullopt;
  return dot(coef.coincidence[pair_index(pair)], mixture.weights) / singles;
}

StrategyMixture guess_mixture_embedding(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("guess mixture weight w must lie in [0, 1]");
  constexpr auto P = Outcome::Plus;
  constexpr auto M = Outcome::Minus;
  constexpr auto N = Outcome::NoDetect;
  StrategyMixture m;
  m.weights[strategy_index({P, P}, {P, P})] += 1.0 - w;
  for (std::size_t i = 0; i < 4; ++i) {
    const SettingPair guess = kSettingPairs[i];
    sources::LocalMap alice{N, N};
    sources::LocalMap bob{N, N};
    alice[label_index(guess.alice)] = P;
    bob[label_index(guess.bob)] = kChshSigns[i] > 0 ? P : M;
    m.weights[strategy_index(alice, bob)] += w / 4.0;
  }
  return m;
}

double constraint_violation(const StrategyMixture& mixture, const EfficiencyConstraint& c) {
  double worst = 0.0;
  for (const auto& row : efficiency_rows(c)) {
    const double r = dot(row.coef, mixture.weights) - row.rhs;
    worst = std::max(worst, c.relation == EfficiencyRelation::Equal ? std::abs(r) : std::max(0.0, -r));
  }
  return worst;
}

std::pair<double, StrategyMixture> solve_equal_denominator_lp(const EfficiencyConstraint& c) {
  check_eta(c.eta);
  // Charnes-Cooper: y = p / d, t = 1 / d with the common coincidence weight d.
  const std::size_t n = kStrategyCount + 1;
  const std::size_t t_col = kStrategyCount;
  const auto& coef = strategy_coefficients();
  const auto relation =
      c.relation == EfficiencyRelation::Equal ? lp::Relation::Equal : lp::Relation::GreaterEqual;

  lp::LinearProgram program;
  program.n_vars = n;
  program.objective.assign(n, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < kStrategyCount; ++k) {
      program.objective[k] += kChshSigns[i] * coef.numerator[i][k];
    }
  }
  for (const auto& row : efficiency_rows(c)) {
    std::vector<double> r(n, 0.0);
    std::copy(row.coef.begin(), row.coef.end(), r.begin());
    r[t_col] = -row.rhs;
    program.add(std::move(r), relation, 0.0);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> r(n, 0.0);
    for (std::size_t k = 0; k < kStrategyCount; ++k) r[k] = coef.coincidence[i][k];
    program.add(std::move(r), lp::Relation::Equal, 1.0);
  }
  {
    std::vector<double> r(n, 1.0);
    r[t_col] = -1.0;
    program.add(std::move(r), lp::Relation::Equal, 0.0);
  }

  const lp::Solution sol = lp::solve(program);
  if (sol.status != lp::Status::Optimal) {
    throw InfeasibleError("no LHV mixture satisfies the efficiency constraint at eta=" +
                          std::to_string(c.eta));
  }
  const double t = sol.x[t_col];
  if (!(t > 0.0)) throw InfeasibleError("degenerate fractional transform (t = 0)");
  std::vector<double> p(sol.x.begin(), sol.x.begin() + kStrategyCount);
  for (double& x : p) x /= t;
  return {sol.objective, normalized(std::move(p))};
}

std::optional<std::pair<double, StrategyMixture>> solve_multistart(const EfficiencyConstraint& c,
                                                                   const OptimizerOptions& options) {
  check_eta(c.eta);
  const FeasibleSet fs = feasible_set(c);
  RngStream rng(options.seed, static_cast<std::uint64_t>(StreamRole::Optimizer));

  // Feasible vertices from LPs with random objectives; starts are random
  // convex combinations of several of them.
  auto random_vertex = [&]() -> std::optional<std::vector<double>> {
    lp::LinearProgram program;
    program.n_vars = fs.n;
    program.objective.resize(fs.n);
    for (std::size_t j = 0; j < fs.n; ++j) {
      program.objective[j] = j < kStrategyCount ? rng.normal() : 0.0;
    }
    for (std::size_t r = 0; r < fs.rows.size(); ++r) {
      program.add(fs.rows[r], lp::Relation::Equal, fs.rhs[r]);
    }
    const lp::Solution sol = lp::solve(program);
    if (sol.status != lp::Status::Optimal) return std::nullopt;
    return sol.x;
  };

  constexpr std::size_t kVerticesPerStart = 12;
  std::optional<std::pair<double, StrategyMixture>> best;
  for (std::size_t s = 0; s < options.starts; ++s) {
    std::vector<double> z(fs.n, 0.0);
    double total = 0.0;
    for (std::size_t v = 0; v < kVerticesPerStart; ++v) {
      const auto vertex = random_vertex();
      if (!vertex) continue;
      const double w = -std::log(1.0 - rng.uniform());
      for (std::size_t j = 0; j < fs.n; ++j) z[j] += w * (*vertex)[j];
      total += w;
    }
    if (total == 0.0) continue;
    for (double& x : z) x /= total;

    const AscentResult r = gradient_projection_ascent(fs, std::move(z), options.iterations);
    if (r.z.empty()) continue;
    if (!best || r.value > best->first) {
      std::vector<double> p(r.z.begin(), r.z.begin() + kStrategyCount);
      best = std::make_pair(r.value, normalized(std::move(p)));
    }
  }
  return best;
}

OptimizationResult max_chsh_at_efficiency(const EfficiencyConstraint& c,
                                          const OptimizerOptions& options) {
  check_eta(c.eta);
  OptimizationResult out;
  out.eta = c.eta;
  auto [s_lp, lp_mix] = solve_equal_denominator_lp(c);
  out.s_lp = s_lp;
  out.lp_argmax = lp_mix;
  out.s_max = s_lp;
  out.argmax = std::move(lp_mix);
  if (options.run_fallback) {
    if (auto fb = solve_multistart(c, options)) {
      out.s_fallback = fb->first;
      out.fallback_argmax = fb->second;
      out.gap = std::abs(fb->first - s_lp);
      out.flagged = out.gap > options.agreement_tolerance;
      if (fb->first > out.s_max) {
        out.s_max = fb->first;
        out.argmax = fb->second;
      }
    } else {
      out.flagged = true;
    }
  }
  return out;
}

OptimizationResult max_chsh_at_efficiency(double eta, const OptimizerOptions& options) {
  return max_chsh_at_efficiency(EfficiencyConstraint{eta}, options);
}

double closed_form_s_max(double eta) noexcept { return std::min(4.0, 4.0 / eta - 2.0); }

double critical_efficiency(double target_s, const CriticalOptions& options) {
  if (!(target_s >= 2.0 && target_s <= 4.0)) {
    throw ConfigError("target S must lie in [2, 4]");
  }
  if (!(options.lo > 0.0 && options.lo < options.hi && options.hi <= 1.0)) {
    throw ConfigError("bisection interval must satisfy 0 < lo < hi <= 1");
  }
  constexpr double kReach = 1e-9;
  auto reaches = [&](double eta) {
    EfficiencyConstraint c{eta, options.scope};
    return max_chsh_at_efficiency(c, options.optimizer).s_max >= target_s - kReach;
  };
  if (reaches(options.hi)) return options.hi;
  if (!reaches(options.lo)) {
    throw ConfigError("interval does not bracket the critical efficiency for target S=" +
                      std::to_string(target_s));
  }
  double lo = options.lo;
  double hi = options.hi;
  while (hi - lo > options.tolerance) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<ScanPoint> scan_efficiency(const std::vector<double>& etas, EfficiencyScope scope,
                                       const OptimizerOptions& options, unsigned workers) {
  std::vector<ScanPoint> out(etas.size());
  parallel_for(etas.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const OptimizationResult r = max_chsh_at_efficiency(EfficiencyConstraint{etas[i], scope}, options);
      out[i] = {r.eta, r.s_lp, r.s_fallback, r.s_max, r.gap, r.flagged};
    }
  });
  return out;
}

sources::LhvSource realize_adversary(const StrategyMixture& mixture) {
  mixture.validate();
  std::vector<sources::DeterministicPair> strategies;
  for (const auto& s : enumerate_strategies()) strategies.push_back({s.alice, s.bob});
  const StrategyMixture clean = normalized(mixture.weights);
  return sources::make_deterministic_mixture("lhv_mixture", std::move(strategies), clean.weights);
}

}  // namespace bell::lhvopt
