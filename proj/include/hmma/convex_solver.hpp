#pragma once

// Small in-house convex solvers behind one program description:
//   * solve_lp:     dense two-phase simplex with a dual certificate
//   * solve_smooth: log-barrier Newton method for smooth convex constraints
//   * solve_qcqp:   the barrier method with convex quadratic constraints
// All problems are minimizations of a linear objective. Callers are expected
// to pre-scale variables and constraints to O(1) magnitudes.

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace hmma {

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kMaxIters, kNumericalTrouble };
const char* to_string(SolveStatus s);

struct SolverSettings {
  double tol_feas = 1e-8;  // absolute, on scaled constraints
  double tol_opt = 1e-6;   // relative duality gap
  int max_iters = 0;       // 0 picks a size-dependent default
};

enum class RowSense { kLe, kGe, kEq };

struct LinearRow {
  std::vector<int> index;
  std::vector<double> coef;
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;

  double eval(const Eigen::VectorXd& x) const;
};

// f(x_local) <= 0 where x_local gathers the entries listed in `vars`. The
// callback fills grad (size vars) and hess (vars x vars) when non-null.
struct SmoothConstraint {
  std::vector<int> vars;
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)> eval;
};

// 0.5 x'Px + q'x + r <= 0 over `vars`; P must be positive semidefinite.
struct QuadraticConstraint {
  std::vector<int> vars;
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  double r = 0.0;

  double eval(const Eigen::VectorXd& x_local) const { return 0.5 * x_local.dot(P * x_local) + q.dot(x_local) + r; }
};

struct ConvexProgram {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  explicit ConvexProgram(int n = 0);

  int num_vars = 0;
  Eigen::VectorXd cost;  // minimize cost' x
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<LinearRow> rows;
  std::vector<SmoothConstraint> smooth;
  std::vector<QuadraticConstraint> quadratic;

  int add_row(std::vector<int> index, std::vector<double> coef, RowSense sense, double rhs);
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::kNumericalTrouble;
  Eigen::VectorXd x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  // Certified optimality gap: LP duality gap or barrier bound m/t.
  double gap = 0.0;
  // LP only: row multipliers (>= 0 for binding <= rows in a minimization,
  // sign convention y' (A x - b) added to the objective) and the most negative
  // reduced cost.
  Eigen::VectorXd duals;
  double dual_infeasibility = 0.0;
  std::string message;

  bool ok() const { return status == SolveStatus::kOptimal; }
};

SolveOutcome solve_lp(const ConvexProgram& program, const SolverSettings& settings = {});

// Barrier method. `start` is used when strictly feasible; otherwise a phase-1
// problem finds an interior point or proves infeasibility.
SolveOutcome solve_smooth(const ConvexProgram& program, const SolverSettings& settings = {},
                          const Eigen::VectorXd* start = nullptr);
SolveOutcome solve_qcqp(const ConvexProgram& program, const SolverSettings& settings = {},
                        const Eigen::VectorXd* start = nullptr);

// Largest constraint violation at x, recomputed from the raw rows, bounds and
// callbacks only.
double max_violation(const ConvexProgram& program, const Eigen::VectorXd& x);

// Worst relative mismatch between callback gradients and central differences
// over all smooth and quadratic constraints at x.
double gradient_check(const ConvexProgram& program, const Eigen::VectorXd& x, double step = 1e-6);

// Gather x[vars].
Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& vars);

}  // namespace hmma
