#include "hmma/trajectory_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace hmma {

namespace {

constexpr double kKm = 1000.0;  // decision variables are positions in km

// Accumulates one quadratic constraint over a subset of the global variables.
class QuadBuilder {
 public:
  explicit QuadBuilder(std::vector<int> vars) : vars_(std::move(vars)) {
    for (std::size_t i = 0; i < vars_.size(); ++i) local_[vars_[i]] = static_cast<int>(i);
    P_ = Eigen::MatrixXd::Zero(vars_.size(), vars_.size());
    q_ = Eigen::VectorXd::Zero(vars_.size());
  }

  void add_linear(int var, double c) { q_(local_.at(var)) += c; }
  void add_constant(double c) { r_ += c; }
  // beta * ||(x, y) - w||^2 with beta >= 0, (x, y) the global columns.
  void add_distance(int x, int y, const Eigen::Vector2d& w, double beta) {
    const int ix = local_.at(x), iy = local_.at(y);
    P_(ix, ix) += 2 * beta;
    P_(iy, iy) += 2 * beta;
    q_(ix) -= 2 * beta * w.x();
    q_(iy) -= 2 * beta * w.y();
    r_ += beta * w.squaredNorm();
  }

  QuadraticConstraint build() const {
    QuadraticConstraint c;
    c.vars = vars_;
    c.P = P_;
    c.q = q_;
    c.r = r_;
    return c;
  }

 private:
  std::vector<int> vars_;
  std::map<int, int> local_;
  Eigen::MatrixXd P_;
  Eigen::VectorXd q_;
  double r_ = 0.0;
};

int col_x(int n) { return 2 * n; }
int col_y(int n) { return 2 * n + 1; }

// Adds -weight * bound(q[n]) / eta_ref to a constraint. Slopes are per m^2
// and the variables are in km.
void add_bound(QuadBuilder& qb, const Scenario& s, const AffineBound& b, int n, double weight) {
  double constant = b.value;
  for (int k = 0; k < s.num_users(); ++k) {
    if (b.slope(k) == 0.0) continue;
    constant -= b.slope(k) * b.phi_ref(k);
    const double beta = -weight * b.slope(k) * kKm * kKm;
    qb.add_distance(col_x(n), col_y(n), s.user(k).position / kKm, beta);
  }
  qb.add_constant(-weight * constant);
}

}  // namespace

ExpansionPoint ExpansionPoint::at(const Scenario& s, const Trajectory& t) {
  ExpansionPoint e;
  e.trajectory = t;
  e.phi.resize(s.num_users(), t.num_slots());
  for (int n = 0; n < t.num_slots(); ++n) {
    for (int k = 0; k < s.num_users(); ++k) e.phi(k, n) = (t[n] - s.user(k).position).squaredNorm();
  }
  return e;
}

AffineBound dl_rate_lower_bound(const Scenario& s, const ExpansionPoint& e, const Allocation& a, int k,
                                int n, double omega) {
  const SystemParams& p = s.params();
  const double gamma = p.ref_gain, n0 = p.noise_density_w_per_hz;
  const Eigen::MatrixXd gains = gain_table(s, e.trajectory);
  const double d = p.altitude_m * p.altitude_m + e.phi(k, n);
  const int m = s.group_of(k);

  AffineBound b;
  b.phi_ref = e.phi.col(n);
  b.slope = Eigen::VectorXd::Zero(s.num_users());
  b.value = dl_noma_rate(s, gains, a.bandwidth, a.power, m, k, n, omega) +
            oma_rate(a.bandwidth.dl_oma(k, n), a.power.dl_oma(k, n), gains(k, n), n0) +
            oma_rate(a.bandwidth.dl_oe(k, n), a.power.dl_oe(k, n), gains(k, n), n0);

  const double band = a.bandwidth.dl_noma(m, n);
  const double own = a.power.dl_noma(k, n);
  if (band > 0.0 && own > 0.0) {
    // R = L B log2(1 + gamma P / (N0 B D + gamma I)), I the received interference over gamma/D.
    const std::vector<int> order = sic_order(s, gains, m, n);
    double interference = 0.0;
    bool stronger = true;
    for (int j : order) {
      if (j == k) {
        stronger = false;
        continue;
      }
      interference += (stronger ? 1.0 : omega) * a.power.dl_noma(j, n);
    }
    const double u = n0 * band * d + gamma * interference;
    b.slope(k) -= s.group_size() * band * n0 * band * gamma * own / (M_LN2 * u * (u + gamma * own));
  }
  for (const auto& [bw, pw] : {std::pair{a.bandwidth.dl_oma(k, n), a.power.dl_oma(k, n)},
                               std::pair{a.bandwidth.dl_oe(k, n), a.power.dl_oe(k, n)}}) {
    if (!(bw > 0.0 && pw > 0.0)) continue;
    const double c = pw * gamma / (n0 * bw);
    b.slope(k) -= bw * c / (M_LN2 * d * (d + c));
  }
  return b;
}

AffineBound ul_group_rate_lower_bound(const Scenario& s, const ExpansionPoint& e, const Allocation& a,
                                      int m, int n) {
  const SystemParams& p = s.params();
  const double gamma = p.ref_gain, n0 = p.noise_density_w_per_hz, h2 = p.altitude_m * p.altitude_m;
  const Eigen::MatrixXd gains = gain_table(s, e.trajectory);
  const std::vector<int>& members = s.groups()[m];

  AffineBound b;
  b.phi_ref = e.phi.col(n);
  b.slope = Eigen::VectorXd::Zero(s.num_users());
  b.value = ul_group_sum_rate(s, gains, a.bandwidth, a.power, m, n);
  for (int k : members) b.value += oma_rate(a.bandwidth.ul_oma(k, n), a.power.ul_oma(k, n), gains(k, n), n0);

  const double band = a.bandwidth.ul_noma(m, n);
  if (band > 0.0) {
    // R = L B log2(1 + sum_k c_k / D_k), c_k = gamma P_k / (N0 B).
    double snr = 0.0;
    for (int k : members) snr += a.power.ul_noma(k, n) * gamma / (n0 * band) / (h2 + e.phi(k, n));
    for (int k : members) {
      const double dk = h2 + e.phi(k, n);
      const double c = a.power.ul_noma(k, n) * gamma / (n0 * band);
      b.slope(k) -= s.group_size() * band / M_LN2 * (c / (dk * dk)) / (1.0 + snr);
    }
  }
  for (int k : members) {
    const double bw = a.bandwidth.ul_oma(k, n), pw = a.power.ul_oma(k, n);
    if (!(bw > 0.0 && pw > 0.0)) continue;
    const double dk = h2 + e.phi(k, n);
    const double c = pw * gamma / (n0 * bw);
    b.slope(k) -= bw * c / (M_LN2 * dk * (dk + c));
  }
  return b;
}

double surrogate_eta(const Scenario& s, const Trajectory& t, const Allocation& a, double omega) {
  const RateTable r = total_rates(s, t, a.bandwidth, a.power, omega);
  const Eigen::MatrixXd dl = r.dl_totals();
  const double group_size = s.group_size();
  double eta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.num_users(); ++k) {
    eta = std::min(eta, dl.row(k).mean());
    if (s.user(k).mrr > 0.0) eta = std::min(eta, dl.row(k).minCoeff() / s.user(k).mrr);
  }
  for (int m = 0; m < s.num_groups(); ++m) {
    Eigen::VectorXd g = r.ul_group_sum.row(m).transpose();
    double alpha = 0.0;
    for (int k : s.groups()[m]) {
      g += r.ul_oma.row(k).transpose();
      alpha = std::max(alpha, s.user(k).mrr);
    }
    eta = std::min(eta, g.mean() / group_size);
    if (alpha > 0.0) eta = std::min(eta, g.minCoeff() / group_size / alpha);
  }
  return eta;
}

double displacement_violation(const Scenario& s, const Trajectory& t) {
  return std::max(0.0, t.max_displacement() - max_step_length(s.params()));
}

TrajectoryStep solve_trajectory_step(const Scenario& s, const Trajectory& start, const Allocation& a,
                                     const TrajectoryOptions& o) {
  const SystemParams& p = s.params();
  const int num_slots = start.num_slots();
  const int num_users = s.num_users();
  const double group_size = s.group_size();

  TrajectoryStep out;
  out.trajectory = start;
  out.eta_start = surrogate_eta(s, start, a, o.omega);
  out.eta = out.eta_start;
  const double step = max_step_length(p);
  // Frozen: no room to move, or nothing to improve.
  if (!(step > 1e-9) || !(out.eta_start > 0.0)) return out;
  const double eta_ref = out.eta_start;

  const ExpansionPoint e = ExpansionPoint::at(s, start);
  std::vector<std::vector<AffineBound>> dl(num_users), ul(s.num_groups());
  for (int n = 0; n < num_slots; ++n) {
    for (int k = 0; k < num_users; ++k) dl[k].push_back(dl_rate_lower_bound(s, e, a, k, n, o.omega));
    for (int m = 0; m < s.num_groups(); ++m) ul[m].push_back(ul_group_rate_lower_bound(s, e, a, m, n));
  }

  const int eta_col = 2 * num_slots;
  std::vector<int> all_cols(2 * num_slots + 1);
  for (int i = 0; i <= eta_col; ++i) all_cols[i] = i;

  // Rate constraints do not depend on the trust radius.
  std::vector<QuadraticConstraint> rate_rows;
  for (int k = 0; k < num_users; ++k) {
    QuadBuilder avg(all_cols);
    avg.add_linear(eta_col, 1.0);
    for (int n = 0; n < num_slots; ++n) {
      add_bound(avg, s, dl[k][n], n, 1.0 / (num_slots * eta_ref));
      if (s.user(k).mrr > 0.0) {
        QuadBuilder inst({col_x(n), col_y(n), eta_col});
        inst.add_linear(eta_col, s.user(k).mrr);
        add_bound(inst, s, dl[k][n], n, 1.0 / eta_ref);
        rate_rows.push_back(inst.build());
      }
    }
    rate_rows.push_back(avg.build());
  }
  for (int m = 0; m < s.num_groups(); ++m) {
    double alpha = 0.0;
    for (int k : s.groups()[m]) alpha = std::max(alpha, s.user(k).mrr);
    QuadBuilder avg(all_cols);
    avg.add_linear(eta_col, 1.0);
    for (int n = 0; n < num_slots; ++n) {
      add_bound(avg, s, ul[m][n], n, 1.0 / (num_slots * group_size * eta_ref));
      if (alpha > 0.0) {
        QuadBuilder inst({col_x(n), col_y(n), eta_col});
        inst.add_linear(eta_col, alpha);
        add_bound(inst, s, ul[m][n], n, 1.0 / (group_size * eta_ref));
        rate_rows.push_back(inst.build());
      }
    }
    rate_rows.push_back(avg.build());
  }

  // Segment caps, closing segment included, scaled to a unit right-hand side.
  const double step_km = step / kKm;
  std::vector<QuadraticConstraint> kin_rows;
  for (int n = 0; n < num_slots; ++n) {
    const int next = (n + 1) % num_slots;
    QuadraticConstraint c;
    c.vars = {col_x(n), col_y(n), col_x(next), col_y(next)};
    c.P = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 2; ++i) {
      c.P(i, i) = c.P(i + 2, i + 2) = 2.0 / (step_km * step_km);
      c.P(i, i + 2) = c.P(i + 2, i) = -2.0 / (step_km * step_km);
    }
    c.q = Eigen::VectorXd::Zero(4);
    c.r = -1.0;
    kin_rows.push_back(c);
  }

  // Strictly feasible start: the expansion point pulled slightly toward its centroid.
  Eigen::Matrix2Xd ref = start.waypoints / kKm;
  const Eigen::Vector2d centroid = ref.rowwise().mean();
  Eigen::VectorXd x0(eta_col + 1);
  for (int n = 0; n < num_slots; ++n) {
    const Eigen::Vector2d z = centroid + (1.0 - 1e-6) * (ref.col(n) - centroid);
    x0(col_x(n)) = z.x();
    x0(col_y(n)) = z.y();
  }
  x0(eta_col) = 0.0;
  double eta_room = std::numeric_limits<double>::infinity();
  for (const QuadraticConstraint& c : rate_rows) {
    const double eta_coef = c.q(static_cast<int>(c.vars.size()) - 1);
    eta_room = std::min(eta_room, -c.eval(gather(x0, c.vars)) / eta_coef);
  }
  x0(eta_col) = 0.5 * eta_room;

  double rho = o.trust_radius_m;
  if (!(rho > 0.0)) {
    // The bounds are global minorants, so the region only needs to keep the
    // program bounded: the diagonal of the box around users and waypoints.
    Eigen::Vector2d lo = start.waypoints.rowwise().minCoeff(), hi = start.waypoints.rowwise().maxCoeff();
    for (const UserSpec& u : s.users()) {
      lo = lo.cwiseMin(u.position);
      hi = hi.cwiseMax(u.position);
    }
    rho = std::max(step, (hi - lo).norm());
  }
  for (int attempt = 0; attempt <= o.max_halvings; ++attempt, rho *= 0.5) {
    out.trust_radius_m = rho;
    out.halvings = attempt;
    ConvexProgram prog(eta_col + 1);
    prog.cost(eta_col) = -1.0;
    prog.quadratic = rate_rows;
    prog.quadratic.insert(prog.quadratic.end(), kin_rows.begin(), kin_rows.end());
    const double rho_km = rho / kKm;
    for (int n = 0; n < num_slots; ++n) {
      QuadraticConstraint c;
      c.vars = {col_x(n), col_y(n)};
      c.P = 2.0 / (rho_km * rho_km) * Eigen::MatrixXd::Identity(2, 2);
      c.q = -2.0 / (rho_km * rho_km) * ref.col(n);
      c.r = ref.col(n).squaredNorm() / (rho_km * rho_km) - 1.0;
      prog.quadratic.push_back(c);
    }
    const SolveOutcome sol = solve_qcqp(prog, o.solver, &x0);
    out.solver_iterations += sol.iterations;
    if (!sol.ok()) continue;

    Trajectory cand;
    cand.waypoints.resize(2, num_slots);
    for (int n = 0; n < num_slots; ++n) {
      cand.waypoints(0, n) = sol.x(col_x(n)) * kKm;
      cand.waypoints(1, n) = sol.x(col_y(n)) * kKm;
    }
    // The solver is feasible to tol_feas in scaled units; clip any residual
    // overshoot of the segment cap so the kinematics hold exactly.
    if (displacement_violation(s, cand) > 0.0) {
      const Eigen::Vector2d c = cand.waypoints.rowwise().mean();
      const double shrink = step / cand.max_displacement();
      cand.waypoints = (cand.waypoints.colwise() - c) * shrink;
      cand.waypoints.colwise() += c;
    }
    const double eta_new = surrogate_eta(s, cand, a, o.omega);
    if (eta_new >= eta_ref) {
      out.trajectory = cand;
      out.eta = eta_new;
      out.moved = true;
      return out;
    }
    // Within solver tolerance of the start: the expansion point is already optimal.
    if (eta_new >= eta_ref * (1.0 - 1e-6)) return out;
  }
  out.trust_exhausted = true;
  return out;
}

}  // namespace hmma
