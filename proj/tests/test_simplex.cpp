#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "socialgrid/simplex.hpp"

using namespace socialgrid;

namespace {

LpProblem make_problem(int rows, int cols) {
  LpProblem p;
  p.cost = Eigen::VectorXd::Zero(cols);
  p.a = Eigen::MatrixXd::Zero(rows, cols);
  p.row_lo = Eigen::VectorXd::Constant(rows, -kInf);
  p.row_up = Eigen::VectorXd::Constant(rows, kInf);
  p.col_lo = Eigen::VectorXd::Zero(cols);
  p.col_up = Eigen::VectorXd::Constant(cols, kInf);
  return p;
}

}  // namespace

TEST_CASE("two-variable textbook maximum") {
  // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  ->  x=2, y=6, obj=36.
  // Solved as min of the negated cost.
  LpProblem p = make_problem(3, 2);
  p.cost << -3.0, -5.0;
  p.a << 1.0, 0.0, 0.0, 2.0, 3.0, 2.0;
  p.row_up << 4.0, 12.0, 18.0;

  SimplexSolver solver;
  const LpSolution s = solver.solve(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == Catch::Approx(2.0).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(6.0).margin(1e-9));
  CHECK(s.objective == Catch::Approx(-36.0).margin(1e-9));
  // Known duals of the max problem are (0, 3/2, 1); minimization flips sign.
  CHECK(s.row_dual[0] == Catch::Approx(0.0).margin(1e-9));
  CHECK(s.row_dual[1] == Catch::Approx(-1.5).margin(1e-9));
  CHECK(s.row_dual[2] == Catch::Approx(-1.0).margin(1e-9));
  CHECK(s.dual_objective == Catch::Approx(s.objective).margin(1e-8));
}

TEST_CASE("equality row with bounded columns") {
  // min 2a + 5b st a + b = 10, 0 <= a <= 6, 0 <= b <= 10.
  LpProblem p = make_problem(1, 2);
  p.cost << 2.0, 5.0;
  p.a << 1.0, 1.0;
  p.row_lo << 10.0;
  p.row_up << 10.0;
  p.col_up << 6.0, 10.0;

  const LpSolution s = SimplexSolver().solve(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == Catch::Approx(6.0).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(4.0).margin(1e-9));
  CHECK(s.objective == Catch::Approx(32.0).margin(1e-9));
  // b is marginal, so the balance dual is its cost; a earns rent 2 - 5 = -3.
  CHECK(s.row_dual[0] == Catch::Approx(5.0).margin(1e-9));
  CHECK(s.col_dual[0] == Catch::Approx(-3.0).margin(1e-9));
  CHECK(s.dual_objective == Catch::Approx(s.objective).margin(1e-8));
}

TEST_CASE("range row binds at its lower edge") {
  // min x st 3 <= x + y <= 8, y <= 1, x free above 0.
  LpProblem p = make_problem(1, 2);
  p.cost << 1.0, 0.0;
  p.a << 1.0, 1.0;
  p.row_lo << 3.0;
  p.row_up << 8.0;
  p.col_up << kInf, 1.0;

  const LpSolution s = SimplexSolver().solve(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == Catch::Approx(2.0).margin(1e-9));
  CHECK(s.row_value[0] == Catch::Approx(3.0).margin(1e-9));
  CHECK(s.row_dual[0] == Catch::Approx(1.0).margin(1e-9));  // binding low: dual >= 0
}

TEST_CASE("infeasible and unbounded detection") {
  SECTION("crossing requirements") {
    LpProblem p = make_problem(2, 1);
    p.cost << 1.0;
    p.a << 1.0, 1.0;
    p.row_up << 1.0, kInf;
    p.row_lo << -kInf, 2.0;  // x <= 1 and x >= 2
    CHECK(SimplexSolver().solve(p).status == LpStatus::Infeasible);
  }
  SECTION("free fall") {
    LpProblem p = make_problem(1, 2);
    p.cost << -1.0, 0.0;  // maximize x with no cap
    p.a << 1.0, -1.0;
    p.row_up << 5.0;
    CHECK(SimplexSolver().solve(p).status == LpStatus::Unbounded);
  }
}

TEST_CASE("negative lower bounds and upper-resting columns") {
  // min -x - 2y st x + y <= 3, -2 <= x <= 2, -2 <= y <= 2.
  LpProblem p = make_problem(1, 2);
  p.cost << -1.0, -2.0;
  p.a << 1.0, 1.0;
  p.row_up << 3.0;
  p.col_lo << -2.0, -2.0;
  p.col_up << 2.0, 2.0;

  const LpSolution s = SimplexSolver().solve(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(2.0).margin(1e-9));
  CHECK(s.objective == Catch::Approx(-5.0).margin(1e-9));
}

TEST_CASE("degenerate-dual reporting") {
  // Two generators with identical costs leave a zero-reduced-cost nonbasic
  // structural column at the optimum.
  LpProblem p = make_problem(1, 2);
  p.cost << 1.0, 1.0;
  p.a << 1.0, 1.0;
  p.row_lo << 1.0;
  p.row_up << 1.0;
  p.col_up << 5.0, 5.0;

  const LpSolution s = SimplexSolver().solve(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.degenerate_duals);

  // Distinct costs restore a unique dual.
  p.cost << 1.0, 2.0;
  const LpSolution t = SimplexSolver().solve(p);
  REQUIRE(t.status == LpStatus::Optimal);
  CHECK_FALSE(t.degenerate_duals);
  CHECK(t.row_dual[0] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("random LPs agree with vertex enumeration") {
  // Small random problems with box columns and <= rows; the oracle scans
  // every basis-defining subset of {rows at bound} x {cols at bound}.
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> level(0.5, 3.0);

  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2, m = 3;
    LpProblem p = make_problem(m, n);
    for (int j = 0; j < n; ++j) p.cost[j] = coef(rng);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.a(i, j) = coef(rng);
    for (int i = 0; i < m; ++i) p.row_up[i] = level(rng);
    p.col_up << level(rng), level(rng);

    const LpSolution s = SimplexSolver().solve(p);
    REQUIRE(s.status == LpStatus::Optimal);  // 0 is always feasible here
    ++solved;

    // Oracle: enumerate every vertex as an intersection of two active
    // constraints from {rows, column bounds} and keep the feasible best.
    double best = kInf;
    std::vector<Eigen::Vector2d> candidates;
    std::vector<Eigen::Vector3d> hyper;  // a1 x + a2 y = b
    for (int i = 0; i < m; ++i) hyper.emplace_back(p.a(i, 0), p.a(i, 1), p.row_up[i]);
    hyper.emplace_back(1.0, 0.0, p.col_lo[0]);
    hyper.emplace_back(1.0, 0.0, p.col_up[0]);
    hyper.emplace_back(0.0, 1.0, p.col_lo[1]);
    hyper.emplace_back(0.0, 1.0, p.col_up[1]);
    for (size_t u = 0; u < hyper.size(); ++u)
      for (size_t v = u + 1; v < hyper.size(); ++v) {
        Eigen::Matrix2d mat;
        mat << hyper[u][0], hyper[u][1], hyper[v][0], hyper[v][1];
        if (std::abs(mat.determinant()) < 1e-10) continue;
        Eigen::Vector2d rhs(hyper[u][2], hyper[v][2]);
        Eigen::Vector2d pt = mat.inverse() * rhs;
        bool ok = pt[0] >= p.col_lo[0] - 1e-9 && pt[0] <= p.col_up[0] + 1e-9 &&
                  pt[1] >= p.col_lo[1] - 1e-9 && pt[1] <= p.col_up[1] + 1e-9;
        for (int i = 0; ok && i < m; ++i)
          ok = p.a.row(i).dot(pt) <= p.row_up[i] + 1e-9;
        if (ok) best = std::min(best, p.cost.dot(pt));
      }
    REQUIRE(std::isfinite(best));
    CHECK(s.objective == Catch::Approx(best).margin(1e-7));
    CHECK(s.dual_objective == Catch::Approx(s.objective).margin(1e-7));
  }
  CHECK(solved == 40);
}
