#include <algorithm>
#include <cmath>

#include "hmma/convex_solver.hpp"

namespace hmma {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kMaxIters: return "max_iters";
    case SolveStatus::kNumericalTrouble: return "numerical_trouble";
  }
  return "unknown";
}

double LinearRow::eval(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) s += coef[i] * x(index[i]);
  return s;
}

ConvexProgram::ConvexProgram(int n)
    : num_vars(n),
      cost(Eigen::VectorXd::Zero(n)),
      lower(Eigen::VectorXd::Constant(n, -kInf)),
      upper(Eigen::VectorXd::Constant(n, kInf)) {}

int ConvexProgram::add_row(std::vector<int> index, std::vector<double> coef, RowSense sense,
                           double rhs) {
  rows.push_back({std::move(index), std::move(coef), sense, rhs});
  return static_cast<int>(rows.size()) - 1;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& vars) {
  Eigen::VectorXd out(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) out(i) = x(vars[i]);
  return out;
}

double max_violation(const ConvexProgram& p, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (int j = 0; j < p.num_vars; ++j) {
    worst = std::max({worst, p.lower(j) - x(j), x(j) - p.upper(j)});
  }
  for (const auto& row : p.rows) {
    const double ax = row.eval(x);
    switch (row.sense) {
      case RowSense::kLe: worst = std::max(worst, ax - row.rhs); break;
      case RowSense::kGe: worst = std::max(worst, row.rhs - ax); break;
      case RowSense::kEq: worst = std::max(worst, std::abs(ax - row.rhs)); break;
    }
  }
  for (const auto& c : p.smooth) worst = std::max(worst, c.eval(gather(x, c.vars), nullptr, nullptr));
  for (const auto& c : p.quadratic) worst = std::max(worst, c.eval(gather(x, c.vars)));
  if (!std::isfinite(worst)) return std::numeric_limits<double>::infinity();
  return worst;
}

double gradient_check(const ConvexProgram& p, const Eigen::VectorXd& x, double step) {
  double worst = 0.0;
  auto check = [&](const std::vector<int>& vars, const Eigen::VectorXd& grad,
                   const std::function<double(const Eigen::VectorXd&)>& f) {
    Eigen::VectorXd local = gather(x, vars);
    for (Eigen::Index i = 0; i < local.size(); ++i) {
      const double h = step * std::max(1.0, std::abs(local(i)));
      Eigen::VectorXd up = local, down = local;
      up(i) += h;
      down(i) -= h;
      const double fd = (f(up) - f(down)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(grad(i))});
      worst = std::max(worst, std::abs(fd - grad(i)) / scale);
    }
  };
  for (const auto& c : p.smooth) {
    Eigen::VectorXd g(c.vars.size());
    c.eval(gather(x, c.vars), &g, nullptr);
    check(c.vars, g, [&](const Eigen::VectorXd& v) { return c.eval(v, nullptr, nullptr); });
  }
  for (const auto& c : p.quadratic) {
    const Eigen::VectorXd local = gather(x, c.vars);
    const Eigen::VectorXd g = c.P * local + c.q;
    check(c.vars, g, [&](const Eigen::VectorXd& v) { return c.eval(v); });
  }
  return worst;
}

}  // namespace hmma
