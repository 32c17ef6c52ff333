#include "hmma/bandwidth_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hmma/errors.hpp"

namespace hmma {

namespace {

// Column of every bandwidth variable in the LP, -1 when absent.
struct Layout {
  Eigen::MatrixXi dl_noma, dl_comp, ul_noma, ul_oma;
  int eta = -1;
  int size = 0;
};

Layout make_layout(const Scenario& s, const BandwidthOptions& o, const Eigen::VectorXd& dl_link,
                   const Eigen::VectorXd& ul_link) {
  const int num_slots = static_cast<int>(dl_link.size());
  Layout lay;
  lay.dl_noma = Eigen::MatrixXi::Constant(s.num_groups(), num_slots, -1);
  lay.ul_noma = lay.dl_noma;
  lay.dl_comp = Eigen::MatrixXi::Constant(s.num_users(), num_slots, -1);
  lay.ul_oma = lay.dl_comp;
  const bool noma = o.restriction != Restriction::kOmaOnly;
  const bool oma = o.restriction != Restriction::kNomaOnly;
  int next = 0;
  for (int n = 0; n < num_slots; ++n) {
    if (dl_link(n) > 0.0) {
      for (int m = 0; m < s.num_groups() && noma; ++m) lay.dl_noma(m, n) = next++;
      for (int k = 0; k < s.num_users() && oma; ++k) lay.dl_comp(k, n) = next++;
    }
    if (ul_link(n) > 0.0) {
      for (int m = 0; m < s.num_groups() && noma; ++m) lay.ul_noma(m, n) = next++;
      for (int k = 0; k < s.num_users() && oma; ++k) lay.ul_oma(k, n) = next++;
    }
  }
  lay.eta = next++;
  lay.size = next;
  return lay;
}

// Rate of user k in slot n as (column, bit/s per unit fraction of B) terms.
struct RateTerms {
  std::vector<int> cols;
  std::vector<double> coef;
};

RateTerms rate_terms(const Scenario& s, const Layout& lay, const SpectralCoefficients& c,
                     bool downlink, int k, int n) {
  const int m = s.group_of(k);
  const double band = s.params().bandwidth_hz;
  RateTerms t;
  const int noma_col = downlink ? lay.dl_noma(m, n) : lay.ul_noma(m, n);
  const int oma_col = downlink ? lay.dl_comp(k, n) : lay.ul_oma(k, n);
  if (noma_col >= 0) {
    t.cols.push_back(noma_col);
    t.coef.push_back(band * (downlink ? c.dl_noma(k, n) : c.ul_noma(k, n)));
  }
  if (oma_col >= 0) {
    t.cols.push_back(oma_col);
    t.coef.push_back(band * (downlink ? c.dl_oma(k, n) : c.ul_oma(k, n)));
  }
  return t;
}

// Compensation on the DL is tagged OE when it offsets SIC residual power,
// i.e. the user has weaker group members whose signals it cancels.
bool compensation_is_oe(const Scenario& s, const Eigen::MatrixXd& gains, const BandwidthOptions& o,
                        int k, int n) {
  if (o.mode != AccessMode::kEhmma || !o.allow_oe || !(o.omega > 0.0)) return false;
  const std::vector<int> order = sic_order(s, gains, s.group_of(k), n);
  return order.back() != k;
}

}  // namespace

BandwidthSolution solve_bandwidth_lp(const Scenario& s, const Eigen::MatrixXd& gains,
                                     const BandwidthOptions& o, const Eigen::VectorXd& dl_link,
                                     const Eigen::VectorXd& ul_link, bool cap_links) {
  const int num_slots = static_cast<int>(gains.cols());
  const int num_users = s.num_users();
  const double band = s.params().bandwidth_hz;

  // Coefficients are evaluated with a positive link width everywhere; slots
  // whose link is switched off have no variables there anyway.
  Eigen::VectorXd dl_eval = dl_link, ul_eval = ul_link;
  for (int n = 0; n < num_slots; ++n) {
    if (!(dl_eval(n) > 0.0)) dl_eval(n) = band;
    if (!(ul_eval(n) > 0.0)) ul_eval(n) = band;
  }
  const SpectralCoefficients c = equal_density_coefficients(s, gains, budgets_of(s), o.omega, dl_eval, ul_eval);
  const Layout lay = make_layout(s, o, dl_link, ul_link);

  // eta is normalized by the largest achievable per-unit rate.
  double rate_scale = 0.0;
  for (const auto* m : {&c.dl_noma, &c.dl_oma, &c.ul_noma, &c.ul_oma}) rate_scale = std::max(rate_scale, m->maxCoeff());
  rate_scale *= band;
  if (!(rate_scale > 0.0)) rate_scale = 1.0;

  ConvexProgram lp(lay.size);
  lp.lower.setZero();
  lp.cost(lay.eta) = -1.0;

  for (int k = 0; k < num_users; ++k) {
    const double alpha = s.user(k).mrr;
    for (bool downlink : {true, false}) {
      std::vector<int> avg_cols = {lay.eta};
      std::vector<double> avg_coef = {1.0};
      for (int n = 0; n < num_slots; ++n) {
        const RateTerms t = rate_terms(s, lay, c, downlink, k, n);
        for (std::size_t i = 0; i < t.cols.size(); ++i) {
          avg_cols.push_back(t.cols[i]);
          avg_coef.push_back(-t.coef[i] / (num_slots * rate_scale));
        }
        if (alpha > 0.0) {
          std::vector<int> cols = {lay.eta};
          std::vector<double> coef = {alpha};
          for (std::size_t i = 0; i < t.cols.size(); ++i) {
            cols.push_back(t.cols[i]);
            coef.push_back(-t.coef[i] / rate_scale);
          }
          lp.add_row(cols, coef, RowSense::kLe, 0.0);
        }
      }
      lp.add_row(avg_cols, avg_coef, RowSense::kLe, 0.0);
    }
  }
  for (int n = 0; n < num_slots; ++n) {
    std::vector<int> cols;
    for (const auto* m : {&lay.dl_noma, &lay.ul_noma, &lay.dl_comp, &lay.ul_oma}) {
      for (Eigen::Index r = 0; r < m->rows(); ++r) {
        if ((*m)(r, n) >= 0) cols.push_back((*m)(r, n));
      }
    }
    if (cols.empty()) continue;
    lp.add_row(cols, std::vector<double>(cols.size(), 1.0), RowSense::kLe, 1.0);
    if (!cap_links) continue;
    for (bool downlink : {true, false}) {
      std::vector<int> link_cols;
      for (const auto* m : downlink ? std::vector{&lay.dl_noma, &lay.dl_comp} : std::vector{&lay.ul_noma, &lay.ul_oma}) {
        for (Eigen::Index r = 0; r < m->rows(); ++r) {
          if ((*m)(r, n) >= 0) link_cols.push_back((*m)(r, n));
        }
      }
      if (link_cols.empty()) continue;
      const double width = (downlink ? dl_link(n) : ul_link(n)) / band;
      lp.add_row(link_cols, std::vector<double>(link_cols.size(), 1.0), RowSense::kLe, width);
    }
  }

  const SolveOutcome out = solve_lp(lp, o.solver);
  BandwidthSolution sol;
  sol.status = out.status;
  sol.lp_iterations = out.iterations;
  sol.max_violation = out.max_violation;
  sol.dl_link_hz = dl_link;
  sol.ul_link_hz = ul_link;
  sol.plan = BandwidthPlan::zeros(s.num_groups(), num_users, num_slots);
  if (!out.ok()) return sol;

  auto value = [&](int col) { return col >= 0 ? std::max(0.0, out.x(col)) * band : 0.0; };
  for (int n = 0; n < num_slots; ++n) {
    for (int m = 0; m < s.num_groups(); ++m) {
      sol.plan.dl_noma(m, n) = value(lay.dl_noma(m, n));
      sol.plan.ul_noma(m, n) = value(lay.ul_noma(m, n));
    }
    for (int k = 0; k < num_users; ++k) {
      const double comp = value(lay.dl_comp(k, n));
      if (compensation_is_oe(s, gains, o, k, n)) {
        sol.plan.dl_oe(k, n) = comp;
      } else {
        sol.plan.dl_oma(k, n) = comp;
      }
      sol.plan.ul_oma(k, n) = value(lay.ul_oma(k, n));
    }
  }
  sol.eta = std::max(0.0, out.x(lay.eta)) * rate_scale;
  return sol;
}

BandwidthSolution assign_bandwidth(const Scenario& s, const Eigen::MatrixXd& gains,
                                   const BandwidthOptions& o) {
  const int num_slots = static_cast<int>(gains.cols());
  const Eigen::VectorXd whole = Eigen::VectorXd::Constant(num_slots, s.params().bandwidth_hz);
  const BandwidthSolution first = solve_bandwidth_lp(s, gains, o, whole, whole);
  if (first.status != SolveStatus::kOptimal) {
    throw SolverFailure(std::string("bandwidth step 1: ") + to_string(first.status));
  }
  Eigen::VectorXd dl(num_slots), ul(num_slots);
  for (int n = 0; n < num_slots; ++n) {
    dl(n) = first.plan.dl_link(n);
    ul(n) = first.plan.ul_link(n);
  }
  BandwidthSolution second = solve_bandwidth_lp(s, gains, o, dl, ul, o.cap_step2_links);
  if (second.status != SolveStatus::kOptimal) {
    throw SolverFailure(std::string("bandwidth step 2: ") + to_string(second.status));
  }
  second.step1_eta = first.eta;
  second.lp_iterations += first.lp_iterations;
  return second;
}

BandwidthSolution assign_bandwidth(const Scenario& s, const Trajectory& trajectory,
                                   const BandwidthOptions& o) {
  return assign_bandwidth(s, gain_table(s, trajectory), o);
}

BandwidthResiduals verify_bandwidth_kkt(const BandwidthSolution& sol, const Scenario& s,
                                        const Eigen::MatrixXd& gains, const BandwidthOptions& o) {
  const int num_slots = static_cast<int>(gains.cols());
  const double band = s.params().bandwidth_hz;
  BandwidthResiduals r;
  const BandwidthPlan& p = sol.plan;
  for (int n = 0; n < num_slots; ++n) {
    r.bandwidth_hz = std::max(r.bandwidth_hz, p.slot_total(n) - band);
  }
  for (const auto* m : {&p.dl_noma, &p.dl_oma, &p.dl_oe, &p.ul_noma, &p.ul_oma}) {
    r.bandwidth_hz = std::max(r.bandwidth_hz, -m->minCoeff());
  }

  Eigen::VectorXd dl_eval = sol.dl_link_hz, ul_eval = sol.ul_link_hz;
  for (int n = 0; n < num_slots; ++n) {
    if (!(dl_eval(n) > 0.0)) dl_eval(n) = band;
    if (!(ul_eval(n) > 0.0)) ul_eval(n) = band;
  }
  const RateTable rates = equal_density_rates(s, gains, p, budgets_of(s), o.omega, dl_eval, ul_eval);
  const Eigen::MatrixXd dl = rates.dl_totals(), ul = rates.ul_totals();

  double tightest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.num_users(); ++k) {
    const double alpha = s.user(k).mrr;
    for (const Eigen::MatrixXd* link : {&dl, &ul}) {
      const double avg = link->row(k).mean();
      r.rate_bps = std::max(r.rate_bps, sol.eta - avg);
      tightest = std::min(tightest, avg);
      if (alpha > 0.0) {
        for (int n = 0; n < num_slots; ++n) {
          r.rate_bps = std::max(r.rate_bps, alpha * sol.eta - (*link)(k, n));
          tightest = std::min(tightest, (*link)(k, n) / alpha);
        }
      }
    }
  }
  const double eta_scale = std::max(sol.eta, 1.0);
  r.scaled = std::max(r.bandwidth_hz / band, r.rate_bps / eta_scale);
  r.binding_gap = std::abs(tightest - sol.eta) / eta_scale;
  return r;
}

}  // namespace hmma
