#include "hmma/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hmma/errors.hpp"

namespace hmma {

namespace {

double pow2m1(double r) { return std::expm1(M_LN2 * r); }

double oma_bandwidth(const BandwidthPlan& bw, bool downlink, int k, int n) {
  return downlink ? bw.dl_oma(k, n) + bw.dl_oe(k, n) : bw.ul_oma(k, n);
}

double noma_bandwidth(const BandwidthPlan& bw, bool downlink, int m, int n) {
  return downlink ? bw.dl_noma(m, n) : bw.ul_noma(m, n);
}

const Eigen::MatrixXd& noma_rates(const RatePlan& r, bool downlink) { return downlink ? r.dl_noma : r.ul_noma; }
const Eigen::MatrixXd& oma_rates(const RatePlan& r, bool downlink) { return downlink ? r.dl_oma : r.ul_oma; }

double group_sum_power(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                       const RatePlan& rates, bool downlink, int m, int n) {
  const double n0 = s.params().noise_density_w_per_hz;
  const std::vector<int> order = sic_order(s, gains, m, n);
  double total = 0.0;
  const double band = noma_bandwidth(bw, downlink, m, n);
  if (band > 0.0) {
    Eigen::VectorXd a(order.size()), r(order.size());
    for (std::size_t l = 0; l < order.size(); ++l) {
      a(l) = n0 * band / gains(order[l], n);
      r(l) = noma_rates(rates, downlink)(order[l], n);
    }
    total += noma_sum_power(a, r);
  }
  for (int k : order) {
    const double b = oma_bandwidth(bw, downlink, k, n);
    if (b > 0.0) total += pow2m1(oma_rates(rates, downlink)(k, n)) * n0 * b / gains(k, n);
  }
  return total;
}

// One scaled rate variable of the program: r = scale * x.
struct RateVar {
  int user = 0;
  int slot = 0;
  bool downlink = true;
  bool noma = true;
  double scale = 1.0;   // spectral rate at x = 1, an implied upper bound
  double weight = 0.0;  // bit/s per unit spectral rate
};

// Sum power of one link in one slot as a function of its local variables.
struct SlotPower {
  std::vector<int> vars;                         // global column per local index
  std::vector<std::vector<int>> groups;          // local indices in SIC order
  std::vector<Eigen::VectorXd> group_a;          // N0*B/H in SIC order
  std::vector<std::pair<int, double>> oma;       // (local index, N0*B/H)
  std::vector<double> scale;                     // per local index
  double budget = 0.0;

  // Power in W at local scaled point x; derivatives w.r.t. x.
  double power(const Eigen::VectorXd& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
    const int nl = static_cast<int>(vars.size());
    if (grad) grad->setZero(nl);
    if (hess) hess->setZero(nl, nl);
    double total = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::vector<int>& idx = groups[g];
      const int len = static_cast<int>(idx.size());
      Eigen::VectorXd r(len), gg;
      Eigen::MatrixXd hh;
      for (int l = 0; l < len; ++l) r(l) = scale[idx[l]] * x(idx[l]);
      total += noma_sum_power(group_a[g], r, grad ? &gg : nullptr, hess ? &hh : nullptr);
      for (int i = 0; i < len; ++i) {
        if (grad) (*grad)(idx[i]) += gg(i) * scale[idx[i]];
        if (hess) {
          for (int j = 0; j < len; ++j) (*hess)(idx[i], idx[j]) += hh(i, j) * scale[idx[i]] * scale[idx[j]];
        }
      }
    }
    for (const auto& [i, a] : oma) {
      const double r = scale[i] * x(i);
      total += pow2m1(r) * a;
      const double d = M_LN2 * std::exp2(r) * a;
      if (grad) (*grad)(i) += d * scale[i];
      if (hess) (*hess)(i, i) += M_LN2 * d * scale[i] * scale[i];
    }
    return total;
  }
};

}  // namespace

RatePlan RatePlan::zeros(int num_users, int num_slots) {
  RatePlan r;
  r.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  r.dl_oma = r.dl_noma;
  r.ul_noma = r.dl_noma;
  r.ul_oma = r.dl_noma;
  return r;
}

double noma_sum_power(const Eigen::VectorXd& a, const Eigen::VectorXd& r, Eigen::VectorXd* grad,
                      Eigen::MatrixXd* hess) {
  const int len = static_cast<int>(a.size());
  // suffix(l) = sum_{j >= l} r_j; term l weighs 2^{suffix(l)} by a_l - a_{l-1} >= 0.
  Eigen::VectorXd suffix(len), term(len);
  double acc = 0.0;
  for (int l = len - 1; l >= 0; --l) {
    acc += r(l);
    suffix(l) = acc;
  }
  double value = 0.0;
  for (int l = 0; l < len; ++l) {
    const double d = a(l) - (l > 0 ? a(l - 1) : 0.0);
    value += d * pow2m1(suffix(l));
    term(l) = d * std::exp2(suffix(l));
  }
  if (grad || hess) {
    // prefix(j) = sum_{l <= j} term(l)
    Eigen::VectorXd prefix(len);
    double p = 0.0;
    for (int j = 0; j < len; ++j) prefix(j) = (p += term(j));
    if (grad) *grad = M_LN2 * prefix;
    if (hess) {
      hess->resize(len, len);
      for (int i = 0; i < len; ++i) {
        for (int j = 0; j < len; ++j) (*hess)(i, j) = M_LN2 * M_LN2 * prefix(std::min(i, j));
      }
    }
  }
  return value;
}

double dl_group_sum_power(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                          const RatePlan& rates, int m, int n) {
  return group_sum_power(s, gains, bw, rates, true, m, n);
}

double ul_group_sum_power(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                          const RatePlan& rates, int m, int n) {
  return group_sum_power(s, gains, bw, rates, false, m, n);
}

PowerPlan recover_powers(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                         const RatePlan& rates) {
  const int num_slots = static_cast<int>(gains.cols());
  const double n0 = s.params().noise_density_w_per_hz;
  PowerPlan p = PowerPlan::zeros(s.num_users(), num_slots);
  for (int n = 0; n < num_slots; ++n) {
    for (int m = 0; m < s.num_groups(); ++m) {
      const std::vector<int> order = sic_order(s, gains, m, n);
      const int len = static_cast<int>(order.size());
      if (bw.dl_noma(m, n) > 0.0) {
        // Each user sees the stronger users' signals as interference.
        double prefix = 0.0;
        for (int l = 0; l < len; ++l) {
          const int k = order[l];
          const double pk = pow2m1(rates.dl_noma(k, n)) * (n0 * bw.dl_noma(m, n) / gains(k, n) + prefix);
          p.dl_noma(k, n) = pk;
          prefix += pk;
        }
      }
      if (bw.ul_noma(m, n) > 0.0) {
        // Each user sees the weaker users' received signals as interference.
        double suffix = 0.0;
        for (int l = len - 1; l >= 0; --l) {
          const int k = order[l];
          p.ul_noma(k, n) = std::exp2(suffix) * pow2m1(rates.ul_noma(k, n)) * n0 * bw.ul_noma(m, n) / gains(k, n);
          suffix += rates.ul_noma(k, n);
        }
      }
    }
    for (int k = 0; k < s.num_users(); ++k) {
      const double dl_b = bw.dl_oma(k, n) + bw.dl_oe(k, n);
      if (dl_b > 0.0) {
        // Equal density over OMA and OE bandwidth keeps the two rates additive.
        const double pk = pow2m1(rates.dl_oma(k, n)) * n0 * dl_b / gains(k, n);
        p.dl_oma(k, n) = pk * bw.dl_oma(k, n) / dl_b;
        p.dl_oe(k, n) = pk * bw.dl_oe(k, n) / dl_b;
      }
      if (bw.ul_oma(k, n) > 0.0) {
        p.ul_oma(k, n) = pow2m1(rates.ul_oma(k, n)) * n0 * bw.ul_oma(k, n) / gains(k, n);
      }
    }
  }
  return p;
}

RateTable rates_in_bps(const Scenario& s, const BandwidthPlan& bw, const RatePlan& rates) {
  const int num_users = s.num_users();
  const int num_slots = static_cast<int>(bw.dl_oma.cols());
  const double group_size = s.group_size();
  RateTable t;
  t.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  t.dl_oma = t.dl_noma;
  t.dl_oe = t.dl_noma;
  t.ul_noma = t.dl_noma;
  t.ul_oma = t.dl_noma;
  t.ul_group_sum = Eigen::MatrixXd::Zero(s.num_groups(), num_slots);
  for (int n = 0; n < num_slots; ++n) {
    for (int k = 0; k < num_users; ++k) {
      const int m = s.group_of(k);
      t.dl_noma(k, n) = group_size * bw.dl_noma(m, n) * rates.dl_noma(k, n);
      t.dl_oma(k, n) = bw.dl_oma(k, n) * rates.dl_oma(k, n);
      t.dl_oe(k, n) = bw.dl_oe(k, n) * rates.dl_oma(k, n);
      t.ul_noma(k, n) = group_size * bw.ul_noma(m, n) * rates.ul_noma(k, n);
      t.ul_oma(k, n) = bw.ul_oma(k, n) * rates.ul_oma(k, n);
      t.ul_group_sum(m, n) += t.ul_noma(k, n);
    }
  }
  return t;
}

PowerSolution solve_power(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                          const SolverSettings& settings) {
  return solve_power(s, gains, bw, budgets_of(s), settings);
}

PowerSolution solve_power(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthPlan& bw,
                          LinkBudgets budgets, const SolverSettings& settings) {
  const int num_users = s.num_users();
  const int num_slots = static_cast<int>(gains.cols());
  const double n0 = s.params().noise_density_w_per_hz;
  const double group_size = s.group_size();

  PowerSolution sol;
  sol.rates = RatePlan::zeros(num_users, num_slots);
  sol.powers = PowerPlan::zeros(num_users, num_slots);
  sol.status = SolveStatus::kOptimal;

  // Variables with positive bandwidth and budget; zero-bandwidth rates stay 0.
  std::vector<RateVar> vars;
  std::vector<SlotPower> slots;
  for (bool downlink : {true, false}) {
    const double budget = downlink ? budgets.dl_w : budgets.ul_w;
    if (!(budget > 0.0)) continue;
    for (int n = 0; n < num_slots; ++n) {
      SlotPower sp;
      sp.budget = budget;
      auto add = [&](int k, bool noma, double a_cap, double weight) {
        RateVar v{k, n, downlink, noma, std::log1p(budget / a_cap) / M_LN2, weight};
        sp.vars.push_back(static_cast<int>(vars.size()));
        sp.scale.push_back(v.scale);
        vars.push_back(v);
        return static_cast<int>(sp.vars.size()) - 1;
      };
      for (int m = 0; m < s.num_groups(); ++m) {
        const double band = noma_bandwidth(bw, downlink, m, n);
        if (!(band > 0.0)) continue;
        const std::vector<int> order = sic_order(s, gains, m, n);
        Eigen::VectorXd a(order.size());
        for (std::size_t l = 0; l < order.size(); ++l) a(l) = n0 * band / gains(order[l], n);
        std::vector<int> local;
        for (int k : order) local.push_back(add(k, true, a(0), group_size * band));
        sp.groups.push_back(local);
        sp.group_a.push_back(a);
      }
      for (int k = 0; k < num_users; ++k) {
        const double band = oma_bandwidth(bw, downlink, k, n);
        if (!(band > 0.0)) continue;
        const double a = n0 * band / gains(k, n);
        sp.oma.emplace_back(add(k, false, a, band), a);
      }
      if (!sp.vars.empty()) slots.push_back(std::move(sp));
    }
  }

  // Strictly feasible start: every variable at tau, tau chosen per link so
  // the busiest slot spends half its budget.
  const int nv = static_cast<int>(vars.size());
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nv + 1);
  for (bool downlink : {true, false}) {
    auto worst_share = [&](double tau) {
      double w = 0.0;
      for (const SlotPower& sp : slots) {
        if (vars[sp.vars[0]].downlink != downlink) continue;
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(sp.vars.size(), tau);
        w = std::max(w, sp.power(x, nullptr, nullptr) / sp.budget);
      }
      return w;
    };
    double lo = 0.0, hi = 0.999;
    if (worst_share(hi) > 0.5) {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (worst_share(mid) > 0.5 ? hi : lo) = mid;
      }
    }
    for (int j = 0; j < nv; ++j) {
      if (vars[j].downlink == downlink) x0(j) = lo > 0.0 ? lo : hi;
    }
  }

  // Rate rows read (user, link) -> terms. eta is scaled by its value at x0.
  auto user_rates = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& dl, Eigen::MatrixXd& ul) {
    dl = Eigen::MatrixXd::Zero(num_users, num_slots);
    ul = dl;
    for (int j = 0; j < nv; ++j) {
      (vars[j].downlink ? dl : ul)(vars[j].user, vars[j].slot) += vars[j].weight * vars[j].scale * x(j);
    }
  };
  auto max_min = [&](const Eigen::MatrixXd& dl, const Eigen::MatrixXd& ul) {
    double eta = std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_users; ++k) {
      const double alpha = s.user(k).mrr;
      for (const Eigen::MatrixXd* link : {&dl, &ul}) {
        eta = std::min(eta, link->row(k).mean());
        if (alpha > 0.0) eta = std::min(eta, link->row(k).minCoeff() / alpha);
      }
    }
    return eta;
  };
  Eigen::MatrixXd dl0, ul0;
  user_rates(x0, dl0, ul0);
  const double eta_ref = max_min(dl0, ul0);
  if (!(eta_ref > 0.0)) return sol;  // some requirement can only be met at eta = 0

  ConvexProgram prog(nv + 1);
  const int eta_col = nv;
  prog.cost(eta_col) = -1.0;
  for (int j = 0; j < nv; ++j) {
    prog.lower(j) = 0.0;
    prog.upper(j) = 1.0;
  }
  x0(eta_col) = 0.5;

  std::vector<std::vector<int>> dl_terms(num_users * num_slots), ul_terms(num_users * num_slots);
  for (int j = 0; j < nv; ++j) {
    (vars[j].downlink ? dl_terms : ul_terms)[vars[j].user * num_slots + vars[j].slot].push_back(j);
  }
  for (int k = 0; k < num_users; ++k) {
    const double alpha = s.user(k).mrr;
    for (const auto* terms : {&dl_terms, &ul_terms}) {
      std::vector<int> avg_cols = {eta_col};
      std::vector<double> avg_coef = {1.0};
      for (int n = 0; n < num_slots; ++n) {
        std::vector<int> cols = {eta_col};
        std::vector<double> coef = {alpha};
        for (int j : (*terms)[k * num_slots + n]) {
          const double c = vars[j].weight * vars[j].scale / eta_ref;
          cols.push_back(j);
          coef.push_back(-c);
          avg_cols.push_back(j);
          avg_coef.push_back(-c / num_slots);
        }
        if (alpha > 0.0) prog.add_row(cols, coef, RowSense::kLe, 0.0);
      }
      prog.add_row(avg_cols, avg_coef, RowSense::kLe, 0.0);
    }
  }
  for (const SlotPower& sp : slots) {
    prog.smooth.push_back({sp.vars, [&sp](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
                             const double v = sp.power(x, g, h) / sp.budget;
                             if (g) *g /= sp.budget;
                             if (h) *h /= sp.budget;
                             return v - 1.0;
                           }});
  }

  const SolveOutcome out = solve_smooth(prog, settings, &x0);
  sol.status = out.status;
  sol.iterations = out.iterations;
  sol.max_violation = out.max_violation;
  if (!out.ok()) {
    throw SolverFailure(std::string("power allocation: ") + to_string(out.status) + " " + out.message);
  }
  for (int j = 0; j < nv; ++j) {
    const RateVar& v = vars[j];
    const double r = std::clamp(out.x(j), 0.0, 1.0) * v.scale;
    Eigen::MatrixXd& target = v.downlink ? (v.noma ? sol.rates.dl_noma : sol.rates.dl_oma)
                                         : (v.noma ? sol.rates.ul_noma : sol.rates.ul_oma);
    target(v.user, v.slot) = r;
  }
  sol.powers = recover_powers(s, gains, bw, sol.rates);
  sol.eta = out.x(eta_col) * eta_ref;
  return sol;
}

PowerSolution solve_power(const Scenario& s, const Trajectory& trajectory, const BandwidthPlan& bw,
                          const SolverSettings& settings) {
  return solve_power(s, gain_table(s, trajectory), bw, settings);
}

}  // namespace hmma
