#include "bell/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bell::lp {

void LinearProgram::add(std::vector<double> coefficients, Relation relation, double rhs) {
  if (coefficients.size() != n_vars) {
    throw std::invalid_argument("constraint width does not match the number of variables");
  }
  constraints.push_back({std::move(coefficients), relation, rhs});
}

namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  // Row `rows_` holds reduced costs z_j - c_j; its rhs is the objective value.
  double& cost(std::size_t c) { return at(rows_, c); }
  double value() const { return at(rows_, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
    }
    basis_[r] = c;
  }

  // Sets the objective row for maximizing `costs` over the current basis.
  void load_objective(const std::vector<double>& costs) {
    for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) at(rows_, j) = -costs[j];
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cb = costs[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) += cb * at(i, j);
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

enum class Outcome { Optimal, Unbounded, IterationLimit };

Outcome iterate(Tableau& t, const std::vector<char>& allowed, const SolverOptions& opt,
                std::size_t& pivots) {
  constexpr std::size_t kDegenerateRun = 50;
  std::size_t degenerate = 0;
  while (pivots < opt.max_pivots) {
    const bool bland = degenerate >= kDegenerateRun;
    std::size_t enter = t.cols();
    double best = -opt.tolerance;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (!allowed[j]) continue;
      const double rc = t.cost(j);
      if (rc < -opt.tolerance) {
        if (bland) {
          enter = j;
          break;
        }
        if (rc < best) {
          best = rc;
          enter = j;
        }
      }
    }
    if (enter == t.cols()) return Outcome::Optimal;

    std::size_t leave = t.rows();
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, enter);
      if (a <= opt.tolerance) continue;
      const double r = t.rhs(i) / a;
      if (r < ratio - opt.tolerance ||
          (r <= ratio + opt.tolerance && leave < t.rows() && t.basis()[i] < t.basis()[leave])) {
        ratio = r;
        leave = i;
      }
    }
    if (leave == t.rows()) return Outcome::Unbounded;

    degenerate = ratio <= opt.tolerance ? degenerate + 1 : 0;
    t.pivot(leave, enter);
    ++pivots;
  }
  return Outcome::IterationLimit;
}

}  // namespace

Solution solve(const LinearProgram& program, const SolverOptions& options) {
  const std::size_t n = program.n_vars;
  const std::size_t m = program.constraints.size();
  if (program.objective.size() != n) {
    throw std::invalid_argument("objective width does not match the number of variables");
  }

  std::size_t n_slack = 0;
  for (const auto& c : program.constraints) {
    if (c.relation != Relation::Equal) ++n_slack;
  }
  // Columns: structural | slacks | artificials (one per row).
  const std::size_t slack0 = n;
  const std::size_t art0 = n + n_slack;
  const std::size_t cols = art0 + m;

  Tableau t(m, cols);
  std::size_t s = slack0;
  for (std::size_t i = 0; i < m; ++i) {
    const Constraint& c = program.constraints[i];
    const double sign = c.rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign * c.coefficients[j];
    if (c.relation == Relation::LessEqual) t.at(i, s++) = sign;
    if (c.relation == Relation::GreaterEqual) t.at(i, s++) = -sign;
    t.rhs(i) = sign * c.rhs;
    t.at(i, art0 + i) = 1.0;
    t.basis()[i] = art0 + i;
  }

  Solution sol;
  std::vector<char> allowed(cols, 1);

  // Phase I: maximize -sum(artificials).
  std::vector<double> phase1(cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1[art0 + i] = -1.0;
  t.load_objective(phase1);
  if (iterate(t, allowed, options, sol.pivots) == Outcome::IterationLimit) {
    sol.status = Status::IterationLimit;
    return sol;
  }
  const double infeasibility = -t.value();
  double scale = 1.0;
  for (const auto& c : program.constraints) scale = std::max(scale, std::abs(c.rhs));
  if (infeasibility > 1e-8 * scale) {
    sol.status = Status::Infeasible;
    return sol;
  }

  // Drive remaining (zero-valued) artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis()[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::abs(t.at(i, j)) > 1e-9) {
        t.pivot(i, j);
        ++sol.pivots;
        break;
      }
    }
  }
  for (std::size_t j = art0; j < cols; ++j) allowed[j] = 0;

  // Phase II.
  std::vector<double> costs(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) costs[j] = program.objective[j];
  t.load_objective(costs);
  const Outcome phase2 = iterate(t, allowed, options, sol.pivots);
  if (phase2 == Outcome::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }
  if (phase2 == Outcome::IterationLimit) {
    sol.status = Status::IterationLimit;
    return sol;
  }

  sol.status = Status::Optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis()[i] < n) sol.x[t.basis()[i]] = std::max(0.0, t.rhs(i));
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += program.objective[j] * sol.x[j];
  return sol;
}

}  // namespace bell::lp
