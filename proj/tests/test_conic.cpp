#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbrrm/conic.hpp"
#include "sbrrm/socp_solver.hpp"

using namespace sbrrm::conic;

TEST_CASE("empty program is valid with objective zero") {
  ProgramBuilder pb;
  const ConicProgram program = pb.build();
  CHECK(program.num_variables == 0);
  const SolveReport report = solve(program);
  CHECK(report.status == SolveStatus::optimal);
  CHECK(report.objective == 0.0);
}

TEST_CASE("builder rejects malformed programs") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x");
  (void)x;
  ConicProgram program = pb.build();
  program.cones.push_back({5, {0}, "bad"});
  CHECK_THROWS_AS(program.validate(), std::invalid_argument);

  ConicProgram dup = pb.build();
  dup.variable_names.back() = "x";
  dup.variable_names.push_back("x");
  dup.objective.push_back(0.0);
  dup.lower.push_back(-kInf);
  dup.upper.push_back(kInf);
  dup.num_variables = 2;
  CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("label collision"),
                       std::invalid_argument);

  ConicProgram self = pb.build();
  self.cones.push_back({0, {0}, "self"});
  CHECK_THROWS_AS(self.validate(), std::invalid_argument);
}

TEST_CASE("norm lower bound: maximize -t subject to ||1|| <= t") {
  ProgramBuilder pb;
  const int t = pb.add_variable("t");
  pb.set_objective(t, -1.0);
  LinExpr head;
  head.add(t, 1.0);
  pb.add_cone(head, {LinExpr(1.0)}, "soc");
  const SolveReport report = solve(pb.build());
  REQUIRE(report.status == SolveStatus::optimal);
  CHECK(report.x(t) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(report.objective == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("linear corner: maximize x subject to x <= 3, x >= 0") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x", 0.0, kInf);
  pb.set_objective(x, 1.0);
  LinExpr row;
  row.add(x, 1.0);
  pb.add_row(row, RowSense::le, 3.0, "cap");
  const SolveReport report = solve(pb.build());
  REQUIRE(report.status == SolveStatus::optimal);
  CHECK(report.objective == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("disk optimum: maximize x+y subject to ||(x,y)|| <= 1") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x");
  const int y = pb.add_variable("y");
  pb.set_objective(x, 1.0);
  pb.set_objective(y, 1.0);
  LinExpr ex, ey;
  ex.add(x, 1.0);
  ey.add(y, 1.0);
  pb.add_cone(LinExpr(1.0), {ex, ey}, "disk");
  const SolveReport report = solve(pb.build());
  REQUIRE(report.status == SolveStatus::optimal);
  CHECK(report.objective == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(report.x(x) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-5));
}

TEST_CASE("equality constraints are honored") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x");
  const int y = pb.add_variable("y");
  pb.set_objective(y, 1.0);
  LinExpr sum;
  sum.add(x, 1.0);
  sum.add(y, 1.0);
  pb.add_row(sum, RowSense::eq, 1.0, "sum");
  LinExpr ex, ey;
  ex.add(x, 1.0);
  ey.add(y, 1.0);
  pb.add_cone(LinExpr(2.0), {ex, ey}, "disk");
  const SolveReport report = solve(pb.build());
  REQUIRE(report.status == SolveStatus::optimal);
  // max y s.t. x + y = 1, x^2 + y^2 <= 4: y = (1 + sqrt(7)) / 2.
  CHECK(report.objective == doctest::Approx((1.0 + std::sqrt(7.0)) / 2.0).epsilon(1e-6));
  CHECK(report.x(x) + report.x(y) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("infeasible programs are certified") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x", 0.0, kInf);
  pb.set_objective(x, 1.0);
  LinExpr row;
  row.add(x, 1.0);
  pb.add_row(row, RowSense::le, -1.0, "impossible");
  const SolveReport report = solve(pb.build());
  CHECK(report.status == SolveStatus::infeasible);
}

TEST_CASE("trivially contradictory fixed rows short-circuit to infeasible") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x", 0.0, 0.0);
  LinExpr row;
  row.add(x, 1.0);
  pb.add_row(row, RowSense::eq, 3.0, "pinned");
  const SolveReport report = solve(pb.build());
  CHECK(report.status == SolveStatus::infeasible);
}

TEST_CASE("unbounded programs are certified") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x", 0.0, kInf);
  pb.set_objective(x, 1.0);
  const SolveReport report = solve(pb.build());
  CHECK(report.status == SolveStatus::unbounded);
}

TEST_CASE("reported residuals match an independent recomputation") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x");
  const int y = pb.add_variable("y", -1.0, 5.0);
  pb.set_objective(x, 2.0);
  pb.set_objective(y, 1.0);
  LinExpr ex, ey;
  ex.add(x, 1.0);
  ey.add(y, 1.0);
  pb.add_cone(LinExpr(3.0), {ex, ey}, "disk");
  LinExpr row;
  row.add(x, 1.0);
  row.add(y, -1.0);
  pb.add_row(row, RowSense::le, 1.0, "band");
  const ConicProgram program = pb.build();
  const SolveReport report = solve(program);
  REQUIRE(report.status == SolveStatus::optimal);

  // Independent recomputation of the worst violation.
  double worst = 0.0;
  {
    double v = report.x(x) - report.x(y) - 1.0;
    worst = std::max(worst, v);
    worst = std::max(worst, -1.0 - report.x(y));
    worst = std::max(worst, report.x(y) - 5.0);
    const double norm = std::hypot(report.x(x), report.x(y));
    worst = std::max(worst, norm - 3.0);
  }
  CHECK(std::abs(std::max(0.0, worst) - report.primal_residual) < 1e-9);
  CHECK(report.primal_residual <= 1e-6);
}

TEST_CASE("solver is deterministic") {
  auto build = [] {
    ProgramBuilder pb;
    const int x = pb.add_variable("x");
    const int y = pb.add_variable("y");
    pb.set_objective(x, 1.0);
    pb.set_objective(y, 0.3);
    LinExpr ex, ey;
    ex.add(x, 1.0);
    ey.add(y, 1.0);
    pb.add_cone(LinExpr(1.0), {ex, ey}, "disk");
    return pb.build();
  };
  const SolveReport a = solve(build());
  const SolveReport b = solve(build());
  REQUIRE(a.status == SolveStatus::optimal);
  CHECK(a.objective == b.objective);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("program json dump carries structure") {
  ProgramBuilder pb;
  const int x = pb.add_variable("x", 0.0, 1.0);
  LinExpr row;
  row.add(x, 2.0);
  pb.add_row(row, RowSense::le, 1.0, "r");
  LinExpr ex;
  ex.add(x, 1.0);
  pb.add_cone(LinExpr(1.0), {ex}, "c");
  const std::string text = pb.build().to_json();
  CHECK(text.find("\"rows\"") != std::string::npos);
  CHECK(text.find("\"cones\"") != std::string::npos);
}
