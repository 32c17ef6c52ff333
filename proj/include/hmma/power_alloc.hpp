#pragma once

// Power allocation for HMMA with the bandwidth plan fixed. Working in
// spectral rates r instead of powers makes the problem convex: the total
// power a NOMA group needs to deliver a rate vector is a positive
// combination of exponentials of partial rate sums, and each user's power
// follows in closed form from the rates.

#include <Eigen/Core>

#include "hmma/convex_solver.hpp"
#include "hmma/rate_model.hpp"
#include "hmma/scenario.hpp"

namespace hmma {

// Spectral rate targets, K x N each, in bit/s/Hz. NOMA entries are
// normalized by L times the group bandwidth, OMA entries by the user's
// OMA bandwidth (OE bandwidth included on the DL).
struct RatePlan {
  Eigen::MatrixXd dl_noma, dl_oma, ul_noma, ul_oma;
  static RatePlan zeros(int num_users, int num_slots);
};

// Sum power of one NOMA group. `a` holds N0*B/H per member in SIC order
// (strongest first), `r` the members' spectral rates in the same order.
// The same expression serves both links. Gradient and Hessian are w.r.t. r.
double noma_sum_power(const Eigen::VectorXd& a, const Eigen::VectorXd& r,
                      Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr);

// Group m in slot n: NOMA sum power plus the OMA power of its members.
double dl_group_sum_power(const Scenario& scenario, const Eigen::MatrixXd& gains,
                          const BandwidthPlan& bw, const RatePlan& rates, int m, int n);
double ul_group_sum_power(const Scenario& scenario, const Eigen::MatrixXd& gains,
                          const BandwidthPlan& bw, const RatePlan& rates, int m, int n);

// Per-user powers that deliver `rates` exactly under perfect SIC.
PowerPlan recover_powers(const Scenario& scenario, const Eigen::MatrixXd& gains,
                         const BandwidthPlan& bw, const RatePlan& rates);

// bit/s delivered by a rate plan on the given bandwidth plan.
RateTable rates_in_bps(const Scenario& scenario, const BandwidthPlan& bw, const RatePlan& rates);

struct PowerSolution {
  RatePlan rates;
  PowerPlan powers;
  double eta = 0.0;  // bit/s
  SolveStatus status = SolveStatus::kNumericalTrouble;
  int iterations = 0;
  double max_violation = 0.0;
};

// Max-min rate over spectral targets with per-slot sum-power budgets.
// Throws SolverFailure when the barrier does not converge.
PowerSolution solve_power(const Scenario& scenario, const Eigen::MatrixXd& gains,
                          const BandwidthPlan& bw, const SolverSettings& settings = {});
PowerSolution solve_power(const Scenario& scenario, const Trajectory& trajectory,
                          const BandwidthPlan& bw, const SolverSettings& settings = {});
// Same with explicit per-link budgets; a zero budget pins that link's rates to 0.
PowerSolution solve_power(const Scenario& scenario, const Eigen::MatrixXd& gains,
                          const BandwidthPlan& bw, LinkBudgets budgets, const SolverSettings& settings = {});

}  // namespace hmma
