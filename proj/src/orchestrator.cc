#include "hmma/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "hmma/errors.hpp"

namespace hmma {

namespace {

struct SchemeSetup {
  BandwidthOptions bandwidth;
  bool optimize_power = true;
  double plan_omega = 0.0;  // SIC residual assumed while planning
};

SchemeSetup setup_for(Scheme scheme, const Scenario& s, const SolverSettings& solver) {
  SchemeSetup out;
  out.bandwidth.solver = solver;
  switch (scheme) {
    case Scheme::kHmma:
      break;
    case Scheme::kNomaOnly:
      out.bandwidth.restriction = Restriction::kNomaOnly;
      break;
    case Scheme::kOmaOnly:
      out.bandwidth.restriction = Restriction::kOmaOnly;
      break;
    case Scheme::kHmmaNoPa:
      out.optimize_power = false;
      break;
    case Scheme::kEhmma:
      out.optimize_power = false;
      out.plan_omega = s.params().sic_residual;
      out.bandwidth.mode = AccessMode::kEhmma;
      out.bandwidth.omega = out.plan_omega;
      break;
  }
  return out;
}

Allocation allocate_restricted(const Scenario& s, const Trajectory& q, const SchemeSetup& setup,
                               Restriction restriction, const SolverSettings& solver) {
  BandwidthOptions o = setup.bandwidth;
  o.restriction = restriction;
  const BandwidthSolution bw = assign_bandwidth(s, q, o);
  if (!setup.optimize_power) return {bw.plan, equal_density_powers(s, bw.plan, budgets_of(s))};
  const PowerSolution pw = solve_power(s, q, bw.plan, solver);
  return {bw.plan, pw.powers};
}

double evaluate(const Scenario& s, const Trajectory& q, const Allocation& a) {
  return true_eta(s, total_rates(s, q, a.bandwidth, a.power, s.params().sic_residual));
}

double positive(double x) { return std::max(0.0, x); }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kHmma: return "hmma";
    case Scheme::kEhmma: return "ehmma";
    case Scheme::kNomaOnly: return "noma";
    case Scheme::kOmaOnly: return "oma";
    case Scheme::kHmmaNoPa: return "hmma-nopa";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::kHmma, Scheme::kEhmma, Scheme::kNomaOnly, Scheme::kOmaOnly, Scheme::kHmmaNoPa}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("scheme", "unknown scheme '" + name + "' (expected hmma, ehmma, noma, oma or hmma-nopa)");
}

double Feasibility::worst() const {
  return std::max({bandwidth, power, negativity, kinematics, propulsion});
}

double true_eta(const Scenario& s, const RateTable& rates) {
  const Eigen::MatrixXd dl = rates.dl_totals();
  const Eigen::MatrixXd ul = rates.ul_totals();
  double eta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.num_users(); ++k) {
    eta = std::min({eta, dl.row(k).mean(), ul.row(k).mean()});
    const double alpha = s.user(k).mrr;
    if (alpha > 0.0) eta = std::min({eta, dl.row(k).minCoeff() / alpha, ul.row(k).minCoeff() / alpha});
  }
  return eta;
}

double jain_factor(const Eigen::MatrixXd& rates) {
  const double sq = rates.squaredNorm();
  if (!(sq > 0.0)) return 1.0;
  const double per_slot = rates.colwise().sum().squaredNorm();
  return per_slot / (static_cast<double>(rates.rows()) * sq);
}

Metrics compute_metrics(const Scenario& s, const BandwidthPlan& bw, const PowerPlan& pw,
                        const Trajectory& q, double omega) {
  const SystemParams& p = s.params();
  const RateTable r = total_rates(s, q, bw, pw, omega);
  const Eigen::MatrixXd dl = r.dl_totals(), ul = r.ul_totals();
  const double dt = p.slot_duration_s();

  Metrics m;
  m.eta = true_eta(s, r);
  m.fairness = m.jain = jain_factor(dl + ul);
  m.avg_dl_bps = dl.mean();
  m.avg_ul_bps = ul.mean();
  m.throughput_bits = (dl.sum() + ul.sum()) * dt;
  for (int n = 0; n < q.num_slots(); ++n) m.propulsion_energy_j += propulsion_power(p, q.displacement(n) / dt) * dt;
  const double energy = m.propulsion_energy_j + (p.dl_power_w + p.ul_power_w) * p.horizon_s;
  m.energy_efficiency = ratio(m.throughput_bits, energy);

  const double oma_bw = bw.dl_oma.sum() + bw.dl_oe.sum() + bw.ul_oma.sum();
  const double all_bw = oma_bw + bw.dl_noma.sum() + bw.ul_noma.sum();
  m.oma_bandwidth_share = ratio(oma_bw, all_bw);
  const double oma_rate = r.dl_oma.sum() + r.dl_oe.sum() + r.ul_oma.sum();
  m.oma_rate_share = ratio(oma_rate, dl.sum() + ul.sum());
  return m;
}

void normalize_fairness(std::vector<SolveReport*> reports) {
  double best = 0.0;
  for (const SolveReport* r : reports) best = std::max(best, r->metrics.eta);
  for (SolveReport* r : reports) {
    r->metrics.fairness = r->metrics.jain * (best > 0.0 ? r->metrics.eta / best : 1.0);
  }
}

Feasibility verify_feasibility(const Scenario& s, const BandwidthPlan& bw, const PowerPlan& pw,
                               const Trajectory& q) {
  const SystemParams& p = s.params();
  Feasibility f;
  for (int n = 0; n < s.num_slots(); ++n) {
    double total = 0.0;
    for (const Eigen::MatrixXd* m : {&bw.dl_noma, &bw.dl_oma, &bw.dl_oe, &bw.ul_noma, &bw.ul_oma}) {
      total += m->col(n).sum();
      f.negativity = std::max(f.negativity, positive(-m->col(n).minCoeff()) / p.bandwidth_hz);
    }
    f.bandwidth = std::max(f.bandwidth, positive(total / p.bandwidth_hz - 1.0));

    double dl = 0.0, ul = 0.0;
    for (const Eigen::MatrixXd* m : {&pw.dl_noma, &pw.dl_oma, &pw.dl_oe}) {
      dl += m->col(n).sum();
      f.negativity = std::max(f.negativity, positive(-m->col(n).minCoeff()) / p.dl_power_w);
    }
    for (const Eigen::MatrixXd* m : {&pw.ul_noma, &pw.ul_oma}) {
      ul += m->col(n).sum();
      f.negativity = std::max(f.negativity, positive(-m->col(n).minCoeff()) / p.ul_power_w);
    }
    f.power = std::max({f.power, positive(dl / p.dl_power_w - 1.0), positive(ul / p.ul_power_w - 1.0)});

    // Segment q[n] -> q[n+1], wrapping to close the loop.
    const Eigen::Vector2d next = q.waypoints.col((n + 1) % s.num_slots());
    const double step = (next - q.waypoints.col(n)).norm();
    f.kinematics = std::max(f.kinematics, positive(step / (p.max_speed_mps * p.slot_duration_s()) - 1.0));
    const double speed = step / p.slot_duration_s();
    const double prop = p.propulsion.hover_power_w + p.propulsion.cubic_coeff * speed * speed * speed;
    f.propulsion = std::max(f.propulsion, positive(prop / p.max_propulsion_w - 1.0));
  }
  return f;
}

namespace {

// One alternating-optimization chain. `alloc` is the best allocation known at
// trajectory `q`, scored `eta` with exact rates.
constexpr int kInnerSteps = 5;

struct Chain {
  Restriction restriction = Restriction::kNone;
  Trajectory q;
  Allocation alloc;
  double eta = 0.0;
  bool failed = false;
  std::vector<IterationRecord> records;
};

// Trajectory step from (alloc, q), then bandwidth and power again at the new
// trajectory. The step bounds UL rates per group, so the old allocation can
// lose exact per-user rate at the new path while a fresh one gains. The best
// of staying, moving and moving with the fresh allocation is kept, which
// makes the exact-rate trace monotone.
void advance(Chain& chain, const Scenario& s, const SchemeSetup& setup, const TrajectoryOptions& traj_opts,
             const SolverSettings& solver, int iteration) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.start = chain.restriction;
  rec.eta_allocation = chain.eta;

  TrajectoryStep st = solve_trajectory_step(s, chain.q, chain.alloc, traj_opts);
  for (int inner = 1; inner < kInnerSteps && st.moved; ++inner) {
    TrajectoryStep next = solve_trajectory_step(s, st.trajectory, chain.alloc, traj_opts);
    if (!next.moved || next.eta < st.eta * (1.0 + 1e-4)) break;
    st = next;
    st.moved = true;
  }
  rec.trust_radius_m = st.trust_radius_m;
  double eta = chain.eta;
  if (st.moved) {
    const double eta_moved = evaluate(s, st.trajectory, chain.alloc);
    Allocation fresh = allocate_restricted(s, st.trajectory, setup, chain.restriction, solver);
    const double eta_fresh = evaluate(s, st.trajectory, fresh);
    if (eta_fresh >= std::max(eta, eta_moved)) {
      chain.alloc = std::move(fresh);
      chain.q = st.trajectory;
      eta = eta_fresh;
      rec.trajectory_moved = true;
    } else if (eta_moved >= eta) {
      chain.q = st.trajectory;
      eta = eta_moved;
      rec.trajectory_moved = true;
      rec.incumbent_retained = true;
    } else {
      rec.incumbent_retained = true;
    }
  }
  rec.eta = eta;
  chain.eta = eta;
  chain.records.push_back(rec);
}

std::size_t best_chain(const std::vector<Chain>& chains) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < chains.size(); ++c) {
    if (!chains[c].failed && (chains[best].failed || chains[c].eta > chains[best].eta)) best = c;
  }
  return best;
}

}  // namespace

SolveReport run_scheme(const Scenario& s, Scheme scheme, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const SystemParams& p = s.params();
  const double eps = options.convergence_eps.value_or(p.convergence_eps);
  const int max_iters = options.max_iters.value_or(p.max_iters);
  const SchemeSetup setup = setup_for(scheme, s, options.solver);

  TrajectoryOptions traj_opts;
  traj_opts.omega = setup.plan_omega;
  traj_opts.solver = options.solver;

  const Trajectory q0 = options.initial.value_or(initial_trajectory(s));
  std::vector<Restriction> starts{setup.bandwidth.restriction};
  if (options.restricted_starts && setup.bandwidth.restriction == Restriction::kNone) {
    starts.push_back(Restriction::kNomaOnly);
    starts.push_back(Restriction::kOmaOnly);
  }

  auto context = [&](int i, const std::exception& e) {
    return SolverFailure(to_string(scheme) + " iteration " + std::to_string(i) + ": " + e.what());
  };

  // Iteration 1 starts with the allocation at the initial trajectory.
  std::vector<Chain> chains;
  for (std::size_t c = 0; c < starts.size(); ++c) {
    Chain chain;
    chain.restriction = starts[c];
    chain.q = q0;
    try {
      chain.alloc = allocate_restricted(s, q0, setup, starts[c], options.solver);
      chain.eta = evaluate(s, q0, chain.alloc);
    } catch (const SolverFailure& e) {
      // Extra starts are optional; only the scheme's own chain must succeed.
      if (c == 0) throw context(1, e);
      chain.failed = true;
    }
    chains.push_back(std::move(chain));
  }

  if (options.warm_start) {
    const WarmStart& w = *options.warm_start;
    const bool fits = w.trajectory.waypoints.cols() == s.num_slots() && w.bandwidth.dl_oma.rows() == s.num_users() &&
                      w.bandwidth.dl_oma.cols() == s.num_slots() && w.bandwidth.dl_noma.rows() == s.num_groups();
    if (fits && verify_feasibility(s, w.bandwidth, w.power, w.trajectory).ok(options.solver.tol_feas)) {
      Chain chain;
      chain.restriction = setup.bandwidth.restriction;
      chain.q = w.trajectory;
      chain.alloc = {w.bandwidth, w.power};
      chain.eta = evaluate(s, chain.q, chain.alloc);
      chains.push_back(std::move(chain));
    }
  }

  SolveReport report;
  report.scheme = scheme;
  double previous = 0.0;
  for (int i = 1; i <= max_iters; ++i) {
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (chains[c].failed) continue;
      try {
        advance(chains[c], s, setup, traj_opts, options.solver, i);
      } catch (const SolverFailure& e) {
        if (c == 0) throw context(i, e);
        chains[c].failed = true;
      }
    }
    const Chain& best = chains[best_chain(chains)];
    const double eta = best.eta;
    report.eta_trace.push_back(eta);
    report.iterations.push_back(best.records.back());
    const double gain = eta - previous;
    previous = eta;
    if (gain < eps * eta || gain <= 0.0) {
      report.converged = true;
      break;
    }
  }

  const Chain& win = chains[best_chain(chains)];
  report.start = win.restriction;
  report.bandwidth = win.alloc.bandwidth;
  report.power = win.alloc.power;
  report.trajectory = win.q;
  report.rates = total_rates(s, win.q, report.bandwidth, report.power, p.sic_residual);
  report.metrics = compute_metrics(s, report.bandwidth, report.power, win.q, p.sic_residual);
  report.feasibility = verify_feasibility(s, report.bandwidth, report.power, win.q);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

SolveReport run_jul_dl_ra(const Scenario& s, const RunOptions& o) { return run_scheme(s, Scheme::kHmma, o); }

SolveReport run_jul_dl_raep(const Scenario& s, const RunOptions& o) { return run_scheme(s, Scheme::kEhmma, o); }

SolveReport run_baseline(const Scenario& s, Restriction restriction, const RunOptions& o) {
  switch (restriction) {
    case Restriction::kOmaOnly: return run_scheme(s, Scheme::kOmaOnly, o);
    case Restriction::kNomaOnly: return run_scheme(s, Scheme::kNomaOnly, o);
    case Restriction::kNone: break;
  }
  throw ConfigError("scheme", "a baseline needs an OMA-only or NOMA-only restriction");
}

Scenario Experiment::scenario() const {
  if (users) return build_scenario(params, *users, grouping);
  if (num_users < 1) throw ConfigError("num_users", "must be >= 1");
  return build_scenario(params, random_users(num_users, area_side_m, seed, mrr), grouping);
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kUsers: return "K";
    case SweepAxis::kMaxSpeed: return "smax";
    case SweepAxis::kOmega: return "omega";
    case SweepAxis::kHorizon: return "T";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kAlpha, SweepAxis::kUsers, SweepAxis::kMaxSpeed, SweepAxis::kOmega,
                      SweepAxis::kHorizon}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("axis", "unknown axis '" + name + "' (expected alpha, K, smax, omega or T)");
}

Experiment with_axis_value(const Experiment& base, SweepAxis axis, double value) {
  Experiment e = base;
  switch (axis) {
    case SweepAxis::kAlpha:
      if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
      e.mrr = value;
      if (e.users) {
        for (UserSpec& u : *e.users) u.mrr = value;
      }
      break;
    case SweepAxis::kUsers:
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("K", "must be a positive integer");
      if (e.users) throw ConfigError("K", "cannot sweep the user count with explicit user positions");
      e.num_users = static_cast<int>(value);
      break;
    case SweepAxis::kMaxSpeed:
      e.params.max_speed_mps = value;
      break;
    case SweepAxis::kOmega:
      e.params.sic_residual = value;
      break;
    case SweepAxis::kHorizon:
      e.params.horizon_s = value;
      break;
  }
  return e;
}

std::vector<SweepEntry> sweep(const Experiment& base, SweepAxis axis, const std::vector<double>& values,
                              const std::vector<Scheme>& schemes, const RunOptions& options) {
  // Visiting order for continuation; output keeps the caller's order.
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  bool chained = false;
  if (options.sweep_continuation) {
    if (axis == SweepAxis::kAlpha || axis == SweepAxis::kOmega) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
      chained = true;
    } else if (axis == SweepAxis::kMaxSpeed) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      chained = true;
    }
  }

  std::vector<SweepEntry> out(values.size() * schemes.size());
  std::vector<std::optional<WarmStart>> last(schemes.size());
  for (std::size_t i : order) {
    const double v = values[i];
    std::optional<Scenario> scenario;
    std::string setup_error;
    try {
      scenario = with_axis_value(base, axis, v).scenario();
    } catch (const Error& e) {
      setup_error = e.what();
    }
    for (std::size_t j = 0; j < schemes.size(); ++j) {
      SweepEntry entry{v, schemes[j], std::nullopt, setup_error};
      if (scenario) {
        RunOptions o = options;
        if (chained) o.warm_start = last[j];
        try {
          entry.report = run_scheme(*scenario, schemes[j], o);
          if (chained) last[j] = WarmStart{entry.report->trajectory, entry.report->bandwidth, entry.report->power};
        } catch (const Error& e) {
          entry.error = e.what();
        }
      }
      out[i * schemes.size() + j] = std::move(entry);
    }
    std::vector<SolveReport*> group;
    for (std::size_t j = 0; j < schemes.size(); ++j) {
      if (out[i * schemes.size() + j].report) group.push_back(&*out[i * schemes.size() + j].report);
    }
    normalize_fairness(group);
  }
  return out;
}

}  // namespace hmma
