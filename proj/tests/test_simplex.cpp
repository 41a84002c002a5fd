#include "bell/simplex.hpp"
#include "doctest.h"

using namespace bell::lp;

TEST_CASE("textbook maximization") {
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {3, 5};
  lp.add({1, 0}, Relation::LessEqual, 4);
  lp.add({0, 2}, Relation::LessEqual, 12);
  lp.add({3, 2}, Relation::LessEqual, 18);
  const Solution s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(36));
  CHECK(s.x[0] == doctest::Approx(2));
  CHECK(s.x[1] == doctest::Approx(6));
}

TEST_CASE("equality and greater-equal rows") {
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {1, 1};
  lp.add({1, 2}, Relation::Equal, 4);
  lp.add({1, -1}, Relation::GreaterEqual, -1);
  const Solution s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(4));
  CHECK(s.x[0] == doctest::Approx(4));
}

TEST_CASE("Beale's cycling example terminates at the optimum") {
  LinearProgram lp;
  lp.n_vars = 4;
  lp.objective = {0.75, -20, 0.5, -6};
  lp.add({0.25, -8, -1, 9}, Relation::LessEqual, 0);
  lp.add({0.5, -12, -0.5, 3}, Relation::LessEqual, 0);
  lp.add({0, 0, 1, 0}, Relation::LessEqual, 1);
  const Solution s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(1.25));
}

TEST_CASE("infeasible and unbounded programs are classified") {
  LinearProgram infeasible;
  infeasible.n_vars = 1;
  infeasible.objective = {1};
  infeasible.add({1}, Relation::LessEqual, 1);
  infeasible.add({1}, Relation::GreaterEqual, 2);
  CHECK(solve(infeasible).status == Status::Infeasible);

  LinearProgram unbounded;
  unbounded.n_vars = 2;
  unbounded.objective = {1, 0};
  unbounded.add({1, -1}, Relation::LessEqual, 1);
  CHECK(solve(unbounded).status == Status::Unbounded);
}

TEST_CASE("negative right-hand sides and redundant equalities") {
  LinearProgram lp;
  lp.n_vars = 3;
  lp.objective = {-1, -1, -1};
  lp.add({-1, -1, 0}, Relation::LessEqual, -2);  // x0 + x1 >= 2
  lp.add({1, 1, 1}, Relation::Equal, 3);
  lp.add({2, 2, 2}, Relation::Equal, 6);  // redundant
  const Solution s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-3));
  CHECK(s.x[0] + s.x[1] >= doctest::Approx(2));
}

TEST_CASE("pivot limit is reported") {
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {3, 5};
  lp.add({1, 0}, Relation::LessEqual, 4);
  lp.add({0, 2}, Relation::LessEqual, 12);
  lp.add({3, 2}, Relation::LessEqual, 18);
  CHECK(solve(lp, {.tolerance = 1e-10, .max_pivots = 1}).status == Status::IterationLimit);
}
