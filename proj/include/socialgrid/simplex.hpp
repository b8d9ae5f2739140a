#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "socialgrid/common.hpp"

namespace socialgrid {

// Dense bounded-variable primal simplex.
//
//   minimize    cost' x
//   subject to  row_lo <= A x <= row_up
//               col_lo <=   x <= col_up
//
// Rows are handled through logical (slack) columns so equalities, one-sided
// and range rows all share one code path. Bland's rule picks entering and
// leaving variables, so the iteration count is finite even on degenerate
// problems. The basis is refactorized every iteration; problems in this
// project stay well under a hundred rows, where that is cheaper than
// maintaining an update scheme.

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpProblem {
  Eigen::VectorXd cost;              // n
  Eigen::MatrixXd a;                 // m x n
  Eigen::VectorXd row_lo, row_up;    // m, +-inf allowed
  Eigen::VectorXd col_lo, col_up;    // n, +-inf allowed

  int num_rows() const { return static_cast<int>(a.rows()); }
  int num_cols() const { return static_cast<int>(a.cols()); }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;          // n, structural values
  Eigen::VectorXd row_value;  // m, A x
  double objective = 0.0;     // cost' x
  // Duals from the optimal basis (minimization convention):
  //   row_dual[i]  >= 0 when row i is binding at its lower bound,
  //                <= 0 at its upper bound, 0 when slack.
  //   col_dual[j]  reduced cost of structural column j.
  Eigen::VectorXd row_dual;   // m
  Eigen::VectorXd col_dual;   // n
  double dual_objective = 0.0;
  bool degenerate_duals = false;  // zero-reduced-cost nonbasic structural at optimum
  int iterations = 0;
};

class SimplexSolver {
 public:
  struct Options {
    double feas_tol = 1e-8;   // bound violation tolerance
    double cost_tol = 1e-9;   // reduced-cost optimality tolerance
    double pivot_tol = 1e-10; // minimum usable pivot magnitude
    int max_iterations = 20000;
  };

  SimplexSolver() = default;
  explicit SimplexSolver(Options opt) : opt_(opt) {}

  LpSolution solve(const LpProblem& p) const {
    const int n = p.num_cols();
    const int m = p.num_rows();
    check_problem(p);

    // Columns 0..n-1 are structural, n..n+m-1 are logicals: [A | -I] z = 0,
    // so the logical of row i carries the row activity with the row bounds.
    const int total = n + m;
    Eigen::VectorXd lo(total), up(total), cost(total);
    lo.head(n) = p.col_lo;
    up.head(n) = p.col_up;
    lo.tail(m) = p.row_lo;
    up.tail(m) = p.row_up;
    cost.head(n) = p.cost;
    cost.tail(m).setZero();

    State st(total, m);
    for (int i = 0; i < m; ++i) st.basis[i] = n + i;
    for (int j = 0; j < total; ++j) st.in_basis[j] = (j >= n);
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(lo[j])) {
        st.value[j] = lo[j];
        st.at_upper[j] = false;
      } else if (std::isfinite(up[j])) {
        st.value[j] = up[j];
        st.at_upper[j] = true;
      } else {
        st.value[j] = 0.0;  // free variable rests at zero
        st.at_upper[j] = false;
      }
    }

    LpSolution sol;
    sol.x.resize(n);
    sol.row_value.resize(m);
    sol.row_dual.resize(m);
    sol.col_dual.resize(n);

    int iterations = 0;
    // Phase 1: drive the total bound violation of basic variables to zero.
    for (;; ++iterations) {
      if (iterations > opt_.max_iterations) {
        sol.status = LpStatus::IterationLimit;
        sol.iterations = iterations;
        return sol;
      }
      refresh_basics(p, st);
      const double infeas = total_infeasibility(st, lo, up);
      if (infeas <= opt_.feas_tol * static_cast<double>(m + 1)) break;

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(total);
      for (int i = 0; i < m; ++i) {
        const int j = st.basis[i];
        if (st.value[j] < lo[j] - opt_.feas_tol) grad[j] = -1.0;
        else if (st.value[j] > up[j] + opt_.feas_tol) grad[j] = 1.0;
      }
      if (!pivot_step(p, st, lo, up, grad, /*phase1=*/true)) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iterations;
        return sol;
      }
    }

    // Phase 2: optimize the true objective from the feasible basis.
    for (;; ++iterations) {
      if (iterations > opt_.max_iterations) {
        sol.status = LpStatus::IterationLimit;
        sol.iterations = iterations;
        return sol;
      }
      refresh_basics(p, st);
      if (!pivot_step(p, st, lo, up, cost, /*phase1=*/false)) break;  // optimal
      if (st.unbounded) {
        sol.status = LpStatus::Unbounded;
        sol.iterations = iterations;
        return sol;
      }
    }

    // Extract primal values and basis duals.
    refresh_basics(p, st);
    for (int j = 0; j < n; ++j) sol.x[j] = st.value[j];
    sol.row_value = p.a * sol.x;
    sol.objective = p.cost.dot(sol.x);
    sol.iterations = iterations;
    sol.status = LpStatus::Optimal;

    Eigen::MatrixXd bmat(m, m);
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) {
      bmat.col(i) = column(p, st.basis[i]);
      cb[i] = cost[st.basis[i]];
    }
    // Reduced cost of the logical of row i is y_i, which is the row dual.
    const Eigen::VectorXd y = bmat.transpose().partialPivLu().solve(cb);
    sol.row_dual = y;
    for (int j = 0; j < n; ++j) {
      sol.col_dual[j] = st.in_basis[j] ? 0.0 : p.cost[j] - y.dot(p.a.col(j));
      if (st.in_basis[j]) continue;
      const double rc = sol.col_dual[j];
      if (std::abs(rc) <= 10.0 * opt_.cost_tol && up[j] - lo[j] > opt_.feas_tol)
        sol.degenerate_duals = true;
    }
    sol.dual_objective = dual_objective(p, sol);
    return sol;
  }

 private:
  struct State {
    State(int total, int m)
        : value(Eigen::VectorXd::Zero(total)),
          basis(m),
          in_basis(total, false),
          at_upper(total, false) {}
    Eigen::VectorXd value;
    std::vector<int> basis;
    std::vector<char> in_basis;
    std::vector<char> at_upper;  // nonbasic rest position
    bool unbounded = false;
  };

  static void check_problem(const LpProblem& p) {
    if (p.cost.size() != p.a.cols() || p.col_lo.size() != p.a.cols() ||
        p.col_up.size() != p.a.cols() || p.row_lo.size() != p.a.rows() ||
        p.row_up.size() != p.a.rows())
      throw Error(ErrorCode::SolverFailure, "inconsistent LP dimensions");
    for (int j = 0; j < p.num_cols(); ++j)
      if (p.col_lo[j] > p.col_up[j])
        throw Error(ErrorCode::Infeasible, "column bound crossover");
    for (int i = 0; i < p.num_rows(); ++i)
      if (p.row_lo[i] > p.row_up[i])
        throw Error(ErrorCode::Infeasible, "row bound crossover");
  }

  static Eigen::VectorXd column(const LpProblem& p, int j) {
    const int n = p.num_cols();
    const int m = p.num_rows();
    if (j < n) return p.a.col(j);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[j - n] = -1.0;
    return e;
  }

  // Solve B z_B = -N z_N for the basic values.
  static void refresh_basics(const LpProblem& p, State& st) {
    const int n = p.num_cols();
    const int m = p.num_rows();
    Eigen::MatrixXd bmat(m, m);
    for (int i = 0; i < m; ++i) bmat.col(i) = column(p, st.basis[i]);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < n + m; ++j) {
      if (st.in_basis[j] || st.value[j] == 0.0) continue;
      rhs -= column(p, j) * st.value[j];
    }
    const Eigen::VectorXd zb = bmat.partialPivLu().solve(rhs);
    for (int i = 0; i < m; ++i) st.value[st.basis[i]] = zb[i];
  }

  double total_infeasibility(const State& st, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& up) const {
    double w = 0.0;
    for (int idx : st.basis) {
      if (st.value[idx] < lo[idx]) w += lo[idx] - st.value[idx];
      else if (st.value[idx] > up[idx]) w += st.value[idx] - up[idx];
    }
    return w;
  }

  // One Bland pivot for the given gradient. Returns false when no eligible
  // entering column exists (phase optimum). Sets st.unbounded when the ray
  // test fails in phase 2.
  bool pivot_step(const LpProblem& p, State& st, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& up, const Eigen::VectorXd& grad,
                  bool phase1) const {
    const int n = p.num_cols();
    const int m = p.num_rows();
    const int total = n + m;
    st.unbounded = false;

    Eigen::MatrixXd bmat(m, m);
    Eigen::VectorXd gb(m);
    for (int i = 0; i < m; ++i) {
      bmat.col(i) = column(p, st.basis[i]);
      gb[i] = grad[st.basis[i]];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    const Eigen::VectorXd y = lu.transpose().solve(gb);

    int enter = -1;
    double enter_dir = 0.0;
    for (int j = 0; j < total; ++j) {  // Bland: smallest eligible index
      if (st.in_basis[j]) continue;
      if (up[j] - lo[j] <= 0.0) continue;  // fixed column can never improve
      const double rc = grad[j] - y.dot(column(p, j));
      const bool at_lo = std::isfinite(lo[j]) && !st.at_upper[j];
      const bool at_up = std::isfinite(up[j]) && st.at_upper[j];
      const bool is_free = !at_lo && !at_up;
      if ((at_lo || is_free) && rc < -opt_.cost_tol) {
        enter = j;
        enter_dir = 1.0;
        break;
      }
      if ((at_up || is_free) && rc > opt_.cost_tol) {
        enter = j;
        enter_dir = -1.0;
        break;
      }
    }
    if (enter < 0) return false;

    // Basic movement per unit of entering motion: z_B rate = -dir * B^-1 a_e.
    const Eigen::VectorXd w = lu.solve(column(p, enter));
    double theta = kInf;
    int leave_pos = -1;     // position in basis
    bool leave_to_upper = false;
    for (int i = 0; i < m; ++i) {
      const double rate = -enter_dir * w[i];
      if (std::abs(rate) <= opt_.pivot_tol) continue;
      const int j = st.basis[i];
      const double v = st.value[j];
      double cand = kInf;
      bool to_upper = false;
      if (rate > 0.0) {
        // moving up: an infeasible-below basic stops at its lower bound,
        // a feasible one at its upper bound
        if (phase1 && v < lo[j] - opt_.feas_tol) {
          cand = (lo[j] - v) / rate;
          to_upper = false;
        } else if (std::isfinite(up[j])) {
          cand = (up[j] - v) / rate;
          to_upper = true;
        }
      } else {
        if (phase1 && v > up[j] + opt_.feas_tol) {
          cand = (up[j] - v) / rate;
          to_upper = true;
        } else if (std::isfinite(lo[j])) {
          cand = (lo[j] - v) / rate;
          to_upper = false;
        }
      }
      if (cand < -opt_.feas_tol) cand = 0.0;  // degenerate guard
      cand = std::max(cand, 0.0);
      if (cand < theta - opt_.pivot_tol ||
          (cand < theta + opt_.pivot_tol && leave_pos >= 0 &&
           st.basis[i] < st.basis[leave_pos])) {
        theta = cand;
        leave_pos = i;
        leave_to_upper = to_upper;
      }
    }
    // The entering column may just run to its opposite bound.
    const double flip = up[enter] - lo[enter];
    if (std::isfinite(flip) && flip < theta) {
      st.at_upper[enter] = !st.at_upper[enter];
      st.value[enter] = st.at_upper[enter] ? up[enter] : lo[enter];
      return true;
    }
    if (leave_pos < 0) {
      if (phase1)
        throw Error(ErrorCode::SolverFailure, "phase-1 ray without blocking bound");
      st.unbounded = true;
      return true;
    }

    const int leave = st.basis[leave_pos];
    st.value[enter] += enter_dir * theta;
    st.value[leave] = leave_to_upper ? up[leave] : lo[leave];
    st.at_upper[leave] = leave_to_upper;
    st.in_basis[enter] = true;
    st.in_basis[leave] = false;
    st.basis[leave_pos] = enter;
    return true;
  }

  // Lower bound certificate value of the dual at (y, rc); equals the primal
  // objective at a true optimum.
  static double dual_objective(const LpProblem& p, const LpSolution& sol) {
    double g = 0.0;
    const double tiny = 1e-11;
    for (int i = 0; i < p.num_rows(); ++i) {
      const double y = sol.row_dual[i];
      if (y > tiny) g += y * p.row_lo[i];
      else if (y < -tiny) g += y * p.row_up[i];
    }
    for (int j = 0; j < p.num_cols(); ++j) {
      const double rc = sol.col_dual[j];
      if (rc > tiny) g += rc * p.col_lo[j];
      else if (rc < -tiny) g += rc * p.col_up[j];
    }
    return g;
  }

  Options opt_{};
};

}  // namespace socialgrid
