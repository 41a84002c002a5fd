#pragma once

// Dense two-phase primal simplex for small linear programs:
//
//   maximize c^T x  subject to  rows (=, <=, >=)  and  x >= 0.
//
// Dantzig pricing with a switch to Bland's rule after a run of degenerate
// pivots, so degenerate problems (the LHV programs are highly degenerate)
// cannot cycle.

#include <cstddef>
#include <vector>

namespace bell::lp {

enum class Relation { Equal, LessEqual, GreaterEqual };

struct Constraint {
  std::vector<double> coefficients;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
};

struct LinearProgram {
  std::size_t n_vars = 0;
  std::vector<double> objective;
  std::vector<Constraint> constraints;

  void add(std::vector<double> coefficients, Relation relation, double rhs);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

struct SolverOptions {
  double tolerance = 1e-10;
  std::size_t max_pivots = 100000;
};

[[nodiscard]] Solution solve(const LinearProgram& program, const SolverOptions& options = {});

}  // namespace bell::lp
