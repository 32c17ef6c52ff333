// Log-barrier interior point method for
//   min c'x  s.t.  g_i(x) <= 0
// with affine rows, variable bounds, smooth convex callbacks and convex
// quadratics. Each centering step is a damped Newton method on
// t c'x - sum log(-g_i(x)); the Newton system is assembled sparse and
// factored with a simplicial LDL' whose pattern is analyzed once.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmma/convex_solver.hpp"

namespace hmma {

namespace {

constexpr double kMu = 20.0;
constexpr int kMaxCentering = 200;

struct Term {
  enum Kind { kLinear, kSmooth, kQuadratic } kind;
  std::vector<int> vars;
  // linear: value = coef . x + constant
  std::vector<double> coef;
  double constant = 0.0;
  const SmoothConstraint* smooth = nullptr;
  const QuadraticConstraint* quad = nullptr;
};

class BarrierProblem {
 public:
  // With `phase1`, an extra variable s is appended and every constraint is
  // relaxed to g_i(x) - s <= 0; the objective becomes min s.
  BarrierProblem(const ConvexProgram& p, bool phase1, const Eigen::VectorXd* box_center = nullptr)
      : p_(p), phase1_(phase1) {
    n_ = p.num_vars + (phase1 ? 1 : 0);
    for (int j = 0; j < p.num_vars; ++j) {
      if (std::isfinite(p.lower(j))) terms_.push_back({Term::kLinear, {j}, {-1.0}, p.lower(j)});
      if (std::isfinite(p.upper(j))) terms_.push_back({Term::kLinear, {j}, {1.0}, -p.upper(j)});
    }
    for (const auto& row : p.rows) {
      const double sign = row.sense == RowSense::kGe ? -1.0 : 1.0;
      Term t{Term::kLinear, row.index, row.coef, -sign * row.rhs};
      for (double& c : t.coef) c *= sign;
      terms_.push_back(std::move(t));
    }
    for (const auto& c : p.smooth) {
      Term t{Term::kSmooth, c.vars, {}, 0.0};
      t.smooth = &c;
      terms_.push_back(std::move(t));
    }
    for (const auto& c : p.quadratic) {
      Term t{Term::kQuadratic, c.vars, {}, 0.0};
      t.quad = &c;
      terms_.push_back(std::move(t));
    }
    if (phase1) {
      // A wide box around the start keeps the phase-1 barrier bounded in
      // directions no constraint limits.
      for (int j = 0; j < p.num_vars; ++j) {
        const double r = 1e4 * (1.0 + std::abs((*box_center)(j)));
        terms_.push_back({Term::kLinear, {j}, {1.0}, -((*box_center)(j) + r)});
        terms_.push_back({Term::kLinear, {j}, {-1.0}, (*box_center)(j) - r});
        box_terms_ += 2;
      }
      // Keep s bounded below so the phase-1 problem has a finite optimum.
      terms_.push_back({Term::kLinear, {p.num_vars}, {-1.0}, -1.0});
    }
    cost_ = Eigen::VectorXd::Zero(n_);
    if (phase1) {
      cost_(p.num_vars) = 1.0;
    } else {
      cost_ = p.cost;
    }
    build_pattern();
  }

  int size() const { return n_; }
  int num_terms() const { return static_cast<int>(terms_.size()); }
  const Eigen::VectorXd& cost() const { return cost_; }

  // Constraint value of term i at x, including the phase-1 relaxation.
  double value(int i, const Eigen::VectorXd& x) const {
    const Term& t = terms_[i];
    double v = raw_value(t, x, nullptr, nullptr);
    if (phase1_ && !is_helper(i)) v -= x(p_.num_vars);
    return v;
  }

  double max_value(const Eigen::VectorXd& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < num_terms(); ++i) {
      const double v = value(i, x);
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, v);
    }
    return worst;
  }

  // Barrier objective; +inf outside the strict interior.
  double phi(const Eigen::VectorXd& x, double t) const {
    double f = t * cost_.dot(x);
    for (int i = 0; i < num_terms(); ++i) {
      const double v = value(i, x);
      if (!(v < 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(-v);
    }
    return f;
  }

  void derivatives(const Eigen::VectorXd& x, double t, Eigen::VectorXd& grad,
                   Eigen::SparseMatrix<double>& hess) {
    grad = t * cost_;
    values_.assign(nnz_, 0.0);
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    for (int i = 0; i < num_terms(); ++i) {
      const Term& term = terms_[i];
      const bool relaxed = phase1_ && !is_helper(i);
      const int local_n = static_cast<int>(term.vars.size());
      const int ext_n = local_n + (relaxed ? 1 : 0);
      g.setZero(ext_n);
      const bool curved = term.kind != Term::kLinear;
      H.setZero(curved ? ext_n : 0, curved ? ext_n : 0);
      Eigen::VectorXd g_local(local_n);
      Eigen::MatrixXd H_local;
      double v = raw_value(term, x, &g_local, curved ? &H_local : nullptr);
      g.head(local_n) = g_local;
      if (curved) H.topLeftCorner(local_n, local_n) = H_local;
      if (relaxed) {
        v -= x(p_.num_vars);
        g(local_n) = -1.0;
      }
      const double inv = -1.0 / v;  // v < 0
      const std::vector<int>& slots = slots_[i];
      int k = 0;
      for (int a = 0; a < ext_n; ++a) {
        grad(global_index(term, relaxed, a)) += inv * g(a);
        for (int b = 0; b <= a; ++b) {
          double h = inv * inv * g(a) * g(b);
          if (curved) h += inv * H(a, b);
          values_[slots[k++]] += h;
        }
      }
    }
    for (std::size_t e = 0; e < values_.size(); ++e) hess.valuePtr()[e] = values_[e];
  }

  Eigen::SparseMatrix<double>& pattern() { return pattern_; }

 private:
  // Phase-1 helper terms (box and s bound) are not relaxed by s.
  bool is_helper(int i) const { return phase1_ && i >= num_terms() - 1 - box_terms_; }

  int global_index(const Term& t, bool relaxed, int a) const {
    if (relaxed && a == static_cast<int>(t.vars.size())) return p_.num_vars;
    return t.vars[a];
  }

  double raw_value(const Term& t, const Eigen::VectorXd& x, Eigen::VectorXd* g,
                   Eigen::MatrixXd* H) const {
    switch (t.kind) {
      case Term::kLinear: {
        double v = t.constant;
        for (std::size_t a = 0; a < t.vars.size(); ++a) v += t.coef[a] * x(t.vars[a]);
        if (g) {
          g->resize(t.vars.size());
          for (std::size_t a = 0; a < t.vars.size(); ++a) (*g)(a) = t.coef[a];
        }
        return v;
      }
      case Term::kSmooth: {
        const Eigen::VectorXd local = gather(x, t.vars);
        if (g) g->resize(t.vars.size());
        if (H) H->setZero(t.vars.size(), t.vars.size());
        return t.smooth->eval(local, g, H);
      }
      case Term::kQuadratic: {
        const Eigen::VectorXd local = gather(x, t.vars);
        if (g) *g = t.quad->P * local + t.quad->q;
        if (H) *H = t.quad->P;
        return t.quad->eval(local);
      }
    }
    return 0.0;
  }

  // Lower-triangular sparsity pattern of the Hessian plus, per term, the
  // storage slot of each (a, b) pair with b <= a.
  void build_pattern() {
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < n_; ++j) trip.emplace_back(j, j, 0.0);
    for (int i = 0; i < num_terms(); ++i) {
      const Term& term = terms_[i];
      const bool relaxed = phase1_ && !is_helper(i);
      const int ext_n = static_cast<int>(term.vars.size()) + (relaxed ? 1 : 0);
      for (int a = 0; a < ext_n; ++a) {
        for (int b = 0; b <= a; ++b) {
          int r = global_index(term, relaxed, a), c = global_index(term, relaxed, b);
          if (r < c) std::swap(r, c);
          trip.emplace_back(r, c, 0.0);
        }
      }
    }
    pattern_.resize(n_, n_);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();
    nnz_ = static_cast<int>(pattern_.nonZeros());

    auto slot_of = [&](int r, int c) {
      if (r < c) std::swap(r, c);
      const int* inner = pattern_.innerIndexPtr();
      const int begin = pattern_.outerIndexPtr()[c];
      const int end = pattern_.outerIndexPtr()[c + 1];
      const int* pos = std::lower_bound(inner + begin, inner + end, r);
      return static_cast<int>(pos - inner);
    };
    diag_slot_.resize(n_);
    for (int j = 0; j < n_; ++j) diag_slot_[j] = slot_of(j, j);
    slots_.resize(terms_.size());
    for (int i = 0; i < num_terms(); ++i) {
      const Term& term = terms_[i];
      const bool relaxed = phase1_ && !is_helper(i);
      const int ext_n = static_cast<int>(term.vars.size()) + (relaxed ? 1 : 0);
      for (int a = 0; a < ext_n; ++a) {
        for (int b = 0; b <= a; ++b) {
          slots_[i].push_back(slot_of(global_index(term, relaxed, a), global_index(term, relaxed, b)));
        }
      }
    }
  }

 public:
  const std::vector<int>& diag_slots() const { return diag_slot_; }

 private:
  const ConvexProgram& p_;
  bool phase1_;
  int n_ = 0;
  std::vector<Term> terms_;
  Eigen::VectorXd cost_;
  Eigen::SparseMatrix<double> pattern_;
  int nnz_ = 0;
  int box_terms_ = 0;
  std::vector<std::vector<int>> slots_;
  std::vector<int> diag_slot_;
  std::vector<double> values_;
};

struct BarrierResult {
  SolveStatus status = SolveStatus::kNumericalTrouble;
  Eigen::VectorXd x;
  double gap = 0.0;
  int iterations = 0;
  std::string message;
};

// Runs the barrier method from a strictly feasible x0. With `stop_below`
// finite, returns as soon as the objective drops below it (phase 1).
BarrierResult run_barrier(BarrierProblem& bp, Eigen::VectorXd x, const SolverSettings& settings,
                          double stop_below) {
  BarrierResult res;
  const int n = bp.size();
  const int m = bp.num_terms();
  const int max_newton = settings.max_iters > 0 ? settings.max_iters : 5000;

  Eigen::SparseMatrix<double> H = bp.pattern();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.analyzePattern(H);
  Eigen::VectorXd grad(n), step(n);

  double t = std::max(1.0, static_cast<double>(m) / (1.0 + std::abs(bp.cost().dot(x))) * 1e-2);
  while (true) {
    for (int inner = 0; inner < kMaxCentering; ++inner) {
      if (res.iterations >= max_newton) {
        res.status = SolveStatus::kMaxIters;
        res.x = x;
        res.gap = m / t;
        res.message = "Newton iteration limit";
        return res;
      }
      bp.derivatives(x, t, grad, H);
      double reg = 0.0;
      bool solved = false;
      for (int attempt = 0; attempt < 12 && !solved; ++attempt) {
        Eigen::SparseMatrix<double> Hr = H;
        if (reg > 0.0) {
          for (int j = 0; j < n; ++j) Hr.valuePtr()[bp.diag_slots()[j]] += reg;
        }
        ldlt.factorize(Hr);
        if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
          step = ldlt.solve(-grad);
          solved = step.allFinite();
        }
        double max_diag = 0.0;
        for (int j = 0; j < n; ++j) max_diag = std::max(max_diag, H.valuePtr()[bp.diag_slots()[j]]);
        reg = reg == 0.0 ? 1e-12 * std::max(1.0, max_diag) : reg * 100.0;
      }
      ++res.iterations;
      if (!solved) {
        res.status = SolveStatus::kNumericalTrouble;
        res.x = x;
        res.message = "Newton system could not be factored";
        return res;
      }
      const double decrement = -grad.dot(step);
      if (decrement / 2.0 <= 1e-10) break;

      const double phi0 = bp.phi(x, t);
      double alpha = 1.0;
      Eigen::VectorXd trial = x + step;
      while (!(bp.max_value(trial) < 0.0) && alpha > 1e-20) {
        alpha *= 0.5;
        trial = x + alpha * step;
      }
      while (bp.phi(trial, t) > phi0 - 0.25 * alpha * decrement && alpha > 1e-20) {
        alpha *= 0.5;
        trial = x + alpha * step;
      }
      if (alpha <= 1e-20) break;  // no progress possible at this precision
      x = trial;
      if (!(x.lpNorm<Eigen::Infinity>() < 1e15)) {
        res.status = SolveStatus::kUnbounded;
        res.x = x;
        res.message = "iterates diverged";
        return res;
      }
      if (bp.cost().dot(x) < stop_below) break;
    }
    const double obj = bp.cost().dot(x);
    if (obj < stop_below) {
      res.status = SolveStatus::kOptimal;
      res.x = x;
      res.gap = m / t;
      return res;
    }
    if (m / t <= settings.tol_opt * (1.0 + std::abs(obj))) {
      res.status = SolveStatus::kOptimal;
      res.x = x;
      res.gap = m / t;
      return res;
    }
    t *= kMu;
  }
}

Eigen::VectorXd initial_guess(const ConvexProgram& p, const Eigen::VectorXd* start) {
  Eigen::VectorXd x = start ? *start : Eigen::VectorXd::Zero(p.num_vars);
  for (int j = 0; j < p.num_vars; ++j) {
    const double lo = p.lower(j), up = p.upper(j);
    if (std::isfinite(lo) && std::isfinite(up)) {
      if (!(x(j) > lo && x(j) < up)) x(j) = 0.5 * (lo + up);
    } else if (std::isfinite(lo)) {
      if (!(x(j) > lo)) x(j) = lo + 1.0;
    } else if (std::isfinite(up)) {
      if (!(x(j) < up)) x(j) = up - 1.0;
    }
  }
  return x;
}

}  // namespace

SolveOutcome solve_smooth(const ConvexProgram& p, const SolverSettings& settings,
                          const Eigen::VectorXd* start) {
  SolveOutcome out;
  for (const auto& row : p.rows) {
    if (row.sense == RowSense::kEq) {
      out.message = "equality rows are not supported by the barrier solver";
      return out;
    }
  }
  Eigen::VectorXd x = initial_guess(p, start);
  BarrierProblem main(p, false);
  int iterations = 0;

  if (!(main.max_value(x) < 0.0)) {
    BarrierProblem ph1(p, true, &x);
    Eigen::VectorXd xs(p.num_vars + 1);
    xs.head(p.num_vars) = x;
    const double worst = main.max_value(x);
    if (!std::isfinite(worst)) {
      out.message = "constraint callbacks not finite at the initial point";
      return out;
    }
    xs(p.num_vars) = std::max(worst, 0.0) + 1.0;
    SolverSettings s1 = settings;
    const BarrierResult r1 = run_barrier(ph1, xs, s1, -1e-3 * std::max(1.0, worst));
    iterations += r1.iterations;
    const double s_final = r1.x.size() ? r1.x(p.num_vars) : worst;
    if (r1.status != SolveStatus::kOptimal || s_final >= 0.0 ||
        !(main.max_value(r1.x.head(p.num_vars)) < 0.0)) {
      out.x = r1.x.size() ? Eigen::VectorXd(r1.x.head(p.num_vars)) : x;
      out.iterations = iterations;
      out.max_violation = max_violation(p, out.x);
      if (r1.status == SolveStatus::kOptimal && s_final > settings.tol_feas) {
        out.status = SolveStatus::kInfeasible;
        out.gap = s_final;
        out.message = "phase 1 optimum is positive";
      } else {
        out.status = r1.status == SolveStatus::kOptimal ? SolveStatus::kNumericalTrouble : r1.status;
        out.message = "phase 1 found no interior point";
      }
      return out;
    }
    x = r1.x.head(p.num_vars);
  }

  const BarrierResult r = run_barrier(main, x, settings, -std::numeric_limits<double>::infinity());
  out.iterations = iterations + r.iterations;
  out.x = r.x;
  out.objective = p.cost.dot(r.x);
  out.gap = r.gap;
  out.max_violation = max_violation(p, r.x);
  out.message = r.message;
  out.status = r.status;
  if (out.status == SolveStatus::kOptimal && out.max_violation > settings.tol_feas) {
    out.status = SolveStatus::kNumericalTrouble;
    out.message = "final point violates constraints";
  }
  return out;
}

SolveOutcome solve_qcqp(const ConvexProgram& p, const SolverSettings& settings,
                        const Eigen::VectorXd* start) {
  return solve_smooth(p, settings, start);
}

}  // namespace hmma
