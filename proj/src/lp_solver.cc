// Dense two-phase tableau simplex.
//
// The program is rewritten as min c'z, Az = b, z >= 0, b >= 0: bounded
// variables are shifted (finite upper bounds become extra rows), free
// variables are split, and inequality rows get slack or surplus columns.
// Pricing is Dantzig's rule, falling back to Bland's rule during long runs of
// degenerate pivots so cycling cannot occur. Once optimal, the basic solution
// and the duals are recomputed from the original columns with an LU solve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmma/convex_solver.hpp"

namespace hmma {

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr int kDegenerateLimit = 50;
constexpr int kRefactorEvery = 100;
constexpr double kHarrisSlack = 1e-9;

struct StandardForm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double c0 = 0.0;
  int num_structural = 0;
  int num_slack = 0;
  int num_artificial = 0;
  std::vector<int> col_var;      // structural column -> original variable
  std::vector<double> col_sign;  // x_var += sign * z_col
  Eigen::VectorXd offset;        // x = offset + sum sign * z
  std::vector<double> row_sign;  // standard row = row_sign * (original row)
  std::vector<int> row_origin;   // original row index, or -1 for bound rows
  std::vector<int> basis;        // initial basis
};

StandardForm to_standard(const ConvexProgram& p) {
  StandardForm sf;
  const int n = p.num_vars;
  sf.offset = Eigen::VectorXd::Zero(n);
  std::vector<std::vector<std::pair<int, double>>> var_cols(n);
  struct BoundRow {
    int col;
    double rhs;
  };
  std::vector<BoundRow> bound_rows;

  for (int j = 0; j < n; ++j) {
    const double lo = p.lower(j), up = p.upper(j);
    if (std::isfinite(lo)) {
      sf.offset(j) = lo;
      var_cols[j].push_back({static_cast<int>(sf.col_var.size()), 1.0});
      sf.col_var.push_back(j);
      sf.col_sign.push_back(1.0);
      if (std::isfinite(up)) bound_rows.push_back({static_cast<int>(sf.col_var.size()) - 1, up - lo});
    } else if (std::isfinite(up)) {
      sf.offset(j) = up;
      var_cols[j].push_back({static_cast<int>(sf.col_var.size()), -1.0});
      sf.col_var.push_back(j);
      sf.col_sign.push_back(-1.0);
    } else {
      for (double s : {1.0, -1.0}) {
        var_cols[j].push_back({static_cast<int>(sf.col_var.size()), s});
        sf.col_var.push_back(j);
        sf.col_sign.push_back(s);
      }
    }
  }
  sf.num_structural = static_cast<int>(sf.col_var.size());

  const int num_rows = static_cast<int>(p.rows.size() + bound_rows.size());
  int num_slack = static_cast<int>(bound_rows.size());
  for (const auto& row : p.rows) {
    if (row.sense != RowSense::kEq) ++num_slack;
  }
  sf.num_slack = num_slack;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(num_rows, sf.num_structural + num_slack);
  Eigen::VectorXd b(num_rows);
  std::vector<int> slack_col(num_rows, -1);
  std::vector<double> slack_coef(num_rows, 0.0);
  int next_slack = sf.num_structural;

  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const LinearRow& row = p.rows[i];
    double rhs = row.rhs;
    for (std::size_t t = 0; t < row.index.size(); ++t) {
      const int j = row.index[t];
      rhs -= row.coef[t] * sf.offset(j);
      for (const auto& [col, sign] : var_cols[j]) A(i, col) += row.coef[t] * sign;
    }
    b(i) = rhs;
    if (row.sense != RowSense::kEq) {
      slack_col[i] = next_slack++;
      slack_coef[i] = row.sense == RowSense::kLe ? 1.0 : -1.0;
      A(i, slack_col[i]) = slack_coef[i];
    }
    sf.row_origin.push_back(static_cast<int>(i));
  }
  for (std::size_t t = 0; t < bound_rows.size(); ++t) {
    const int i = static_cast<int>(p.rows.size() + t);
    A(i, bound_rows[t].col) = 1.0;
    b(i) = bound_rows[t].rhs;
    slack_col[i] = next_slack++;
    slack_coef[i] = 1.0;
    A(i, slack_col[i]) = 1.0;
    sf.row_origin.push_back(-1);
  }

  sf.row_sign.assign(num_rows, 1.0);
  for (int i = 0; i < num_rows; ++i) {
    if (b(i) < 0.0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
      slack_coef[i] = -slack_coef[i];
      sf.row_sign[i] = -1.0;
    }
  }

  // Artificial columns for rows without a +1 slack.
  std::vector<int> art_rows;
  for (int i = 0; i < num_rows; ++i) {
    if (!(slack_col[i] >= 0 && slack_coef[i] > 0.0)) art_rows.push_back(i);
  }
  sf.num_artificial = static_cast<int>(art_rows.size());
  const int total_cols = sf.num_structural + num_slack + sf.num_artificial;
  sf.A = Eigen::MatrixXd::Zero(num_rows, total_cols);
  sf.A.leftCols(sf.num_structural + num_slack) = A;
  sf.basis.assign(num_rows, -1);
  for (int i = 0; i < num_rows; ++i) {
    if (slack_col[i] >= 0 && slack_coef[i] > 0.0) sf.basis[i] = slack_col[i];
  }
  for (int a = 0; a < sf.num_artificial; ++a) {
    const int col = sf.num_structural + num_slack + a;
    sf.A(art_rows[a], col) = 1.0;
    sf.basis[art_rows[a]] = col;
  }
  sf.b = b;

  sf.c = Eigen::VectorXd::Zero(total_cols);
  for (int col = 0; col < sf.num_structural; ++col) {
    sf.c(col) = p.cost(sf.col_var[col]) * sf.col_sign[col];
  }
  sf.c0 = p.cost.dot(sf.offset);
  return sf;
}

class Simplex {
 public:
  Simplex(const StandardForm& sf, int max_iters) : sf_(sf), max_iters_(max_iters) {
    const int m = static_cast<int>(sf.A.rows());
    const int ncol = static_cast<int>(sf.A.cols());
    T_ = Tableau::Zero(m + 1, ncol + 1);
    T_.topLeftCorner(m, ncol) = sf.A;
    T_.topRightCorner(m, 1) = sf.b;
    basis_ = sf.basis;
    allowed_.assign(ncol, true);
  }

  // Returns kOptimal, kUnbounded or kMaxIters.
  SolveStatus run(const Eigen::VectorXd& cost) {
    price(cost);
    int degenerate = 0;
    const int m = rows();
    const int ncol = cols();
    int since_refactor = 0;
    while (true) {
      if (iterations_ >= max_iters_) return SolveStatus::kMaxIters;
      if (++since_refactor > kRefactorEvery) {
        refactor(cost);
        since_refactor = 0;
      }
      const bool bland = degenerate > kDegenerateLimit;
      int enter = -1;
      double best = -kCostTol;
      for (int j = 0; j < ncol; ++j) {
        if (!allowed_[j]) continue;
        const double d = T_(m, j);
        if (d < best) {
          enter = j;
          best = d;
          if (bland) break;
        }
      }
      if (enter < 0) {
        // Confirm optimality on a freshly factored tableau.
        if (since_refactor <= 1) return SolveStatus::kOptimal;
        refactor(cost);
        since_refactor = 0;
        continue;
      }

      const int leave = bland ? ratio_test_bland(enter) : ratio_test_harris(enter);
      const double best_ratio = leave >= 0 ? T_(leave, ncol) / T_(leave, enter) : 0.0;
      if (leave < 0) return SolveStatus::kUnbounded;
      degenerate = best_ratio <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
      ++iterations_;
    }
  }

  void pivot(int r, int e) {
    T_.row(r) /= T_(r, e);
    const int rhs = cols();
    for (int i = 0; i < T_.rows(); ++i) {
      if (i == r) continue;
      const double f = T_(i, e);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
      // Harris steps may leave basics slightly negative; shift them back.
      if (i < rows() && T_(i, rhs) < 0.0) T_(i, rhs) = 0.0;
    }
    T_.col(e).head(rows()).setZero();
    T_(r, e) = 1.0;
    T_(rows(), e) = 0.0;
    basis_[r] = e;
  }

  double pivot_tol(int enter) const {
    return std::max(kPivotTol, 1e-9 * T_.col(enter).head(rows()).lpNorm<Eigen::Infinity>());
  }

  // Plain minimum ratio, ties to the lowest basic column (anti-cycling).
  int ratio_test_bland(int enter) const {
    const int m = rows();
    const int ncol = cols();
    const double tol = pivot_tol(enter);
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = T_(i, enter);
      if (a <= tol) continue;
      const double r = T_(i, ncol) / a;
      if (leave < 0 || r < best || (r == best && basis_[i] < basis_[leave])) {
        leave = i;
        best = r;
      }
    }
    return leave;
  }

  // Harris two-pass test: among rows within a small feasibility slack of the
  // minimum ratio, take the largest pivot.
  int ratio_test_harris(int enter) const {
    const int m = rows();
    const int ncol = cols();
    const double tol = pivot_tol(enter);
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = T_(i, enter);
      if (a > tol) bound = std::min(bound, (T_(i, ncol) + kHarrisSlack) / a);
    }
    int leave = -1;
    for (int i = 0; i < m; ++i) {
      const double a = T_(i, enter);
      if (a <= tol || T_(i, ncol) / a > bound) continue;
      if (leave < 0 || a > T_(leave, enter) || (a == T_(leave, enter) && basis_[i] < basis_[leave])) leave = i;
    }
    return leave;
  }

  // Rebuilds the tableau from the original columns to shed pivoting drift.
  void refactor(const Eigen::VectorXd& cost) {
    const int m = rows();
    const int ncol = cols();
    Eigen::MatrixXd basis_matrix(m, m);
    for (int i = 0; i < m; ++i) basis_matrix.col(i) = sf_.A.col(basis_[i]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    T_.topLeftCorner(m, ncol) = lu.solve(sf_.A);
    T_.topRightCorner(m, 1) = lu.solve(sf_.b).cwiseMax(0.0);
    price(cost);
  }

  void price(const Eigen::VectorXd& cost) {
    const int m = rows();
    const int ncol = cols();
    T_.row(m).setZero();
    T_.row(m).head(ncol) = cost.transpose();
    for (int i = 0; i < m; ++i) {
      const double cb = cost(basis_[i]);
      if (cb != 0.0) T_.row(m) -= cb * T_.row(i);
    }
  }

  // Pivot basic artificial columns out where possible.
  void expel_artificials(int first_artificial) {
    const int m = rows();
    for (int i = 0; i < m; ++i) {
      if (basis_[i] < first_artificial) continue;
      int best = -1;
      double best_abs = 1e-9;
      for (int j = 0; j < first_artificial; ++j) {
        if (std::abs(T_(i, j)) > best_abs) {
          best = j;
          best_abs = std::abs(T_(i, j));
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  int rows() const { return static_cast<int>(T_.rows()) - 1; }
  int cols() const { return static_cast<int>(T_.cols()) - 1; }
  double objective_value() const { return -T_(rows(), cols()); }
  const std::vector<int>& basis() const { return basis_; }
  std::vector<bool>& allowed() { return allowed_; }
  int iterations() const { return iterations_; }

 private:
  const StandardForm& sf_;
  int max_iters_;
  Tableau T_;
  std::vector<int> basis_;
  std::vector<bool> allowed_;
  int iterations_ = 0;
};

}  // namespace

SolveOutcome solve_lp(const ConvexProgram& p, const SolverSettings& settings) {
  if (!p.smooth.empty() || !p.quadratic.empty()) {
    SolveOutcome bad;
    bad.message = "solve_lp accepts affine constraints only";
    return bad;
  }
  const StandardForm sf = to_standard(p);
  const int m = static_cast<int>(sf.A.rows());
  const int ncol = static_cast<int>(sf.A.cols());
  const int first_art = sf.num_structural + sf.num_slack;
  const int max_iters = settings.max_iters > 0 ? settings.max_iters : 50 * (m + ncol) + 1000;

  SolveOutcome out;
  out.x = sf.offset;
  Simplex simplex(sf, max_iters);

  if (sf.num_artificial > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(ncol);
    phase1.tail(sf.num_artificial).setOnes();
    const SolveStatus s1 = simplex.run(phase1);
    if (s1 != SolveStatus::kOptimal) {
      out.status = s1 == SolveStatus::kMaxIters ? s1 : SolveStatus::kNumericalTrouble;
      out.iterations = simplex.iterations();
      out.message = "phase 1 did not finish";
      return out;
    }
    const double scale = std::max(1.0, sf.b.lpNorm<Eigen::Infinity>());
    if (simplex.objective_value() > 1e-9 * scale) {
      out.status = SolveStatus::kInfeasible;
      out.iterations = simplex.iterations();
      // Residual of the best phase-1 point: sum of artificials.
      out.gap = simplex.objective_value();
      out.message = "phase 1 optimum is positive";
      return out;
    }
    simplex.expel_artificials(first_art);
  }
  for (int j = first_art; j < ncol; ++j) simplex.allowed()[j] = false;

  const SolveStatus s2 = simplex.run(sf.c);
  out.iterations = simplex.iterations();
  if (s2 != SolveStatus::kOptimal) {
    out.status = s2;
    out.message = s2 == SolveStatus::kUnbounded ? "objective unbounded below" : "iteration limit";
    return out;
  }

  // Recompute basic values and duals from the original columns.
  const std::vector<int>& basis = simplex.basis();
  Eigen::MatrixXd Bmat(m, m);
  Eigen::VectorXd cb(m);
  for (int i = 0; i < m; ++i) {
    Bmat.col(i) = sf.A.col(basis[i]);
    cb(i) = sf.c(basis[i]);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Bmat);
  Eigen::VectorXd zb = lu.solve(sf.b);
  // A clearly negative basic value means the final basis is not primal feasible.
  const double basic_infeasibility = std::max(0.0, -zb.minCoeff()) / std::max(1.0, sf.b.lpNorm<Eigen::Infinity>());
  const Eigen::VectorXd y = lu.transpose().solve(cb);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(ncol);
  for (int i = 0; i < m; ++i) z(basis[i]) = std::max(0.0, zb(i));
  Eigen::VectorXd x = sf.offset;
  for (int col = 0; col < sf.num_structural; ++col) x(sf.col_var[col]) += sf.col_sign[col] * z(col);

  const Eigen::VectorXd reduced = sf.c.head(first_art) - sf.A.leftCols(first_art).transpose() * y;
  out.dual_infeasibility = std::max(0.0, -reduced.minCoeff());

  out.duals = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.rows.size()));
  for (int i = 0; i < m; ++i) {
    if (sf.row_origin[i] >= 0) out.duals(sf.row_origin[i]) = -sf.row_sign[i] * y(i);
  }

  out.x = x;
  out.objective = p.cost.dot(x);
  const double dual_objective = sf.b.dot(y) + sf.c0;
  out.gap = std::abs(out.objective - dual_objective);
  out.max_violation = max_violation(p, x);

  const double scale = 1.0 + std::abs(out.objective);
  if (out.max_violation > settings.tol_feas || basic_infeasibility > settings.tol_feas || out.dual_infeasibility > settings.tol_opt * scale ||
      out.gap > settings.tol_opt * scale) {
    out.status = SolveStatus::kNumericalTrouble;
    out.message = "certificate check failed";
  } else {
    out.status = SolveStatus::kOptimal;
  }
  return out;
}

}  // namespace hmma
