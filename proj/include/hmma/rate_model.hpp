#pragma once

// Achievable-rate expressions for hybrid NOMA/OMA in both links. Everything
// here is a pure function of allocations and channel gains; bandwidths are in
// Hz, powers in W, rates in bit/s.

#include <Eigen/Core>

#include <vector>

#include "hmma/scenario.hpp"

namespace hmma {

// Per-slot bandwidth assignment. NOMA entries are per group (M x N), OMA and
// SIC-error-compensation (OE, E-HMMA only) entries per user (K x N).
struct BandwidthPlan {
  Eigen::MatrixXd dl_noma;
  Eigen::MatrixXd dl_oma;
  Eigen::MatrixXd dl_oe;
  Eigen::MatrixXd ul_noma;
  Eigen::MatrixXd ul_oma;

  static BandwidthPlan zeros(int num_groups, int num_users, int num_slots);

  double dl_link(int n) const { return dl_noma.col(n).sum() + dl_oma.col(n).sum() + dl_oe.col(n).sum(); }
  double ul_link(int n) const { return ul_noma.col(n).sum() + ul_oma.col(n).sum(); }
  double slot_total(int n) const { return dl_link(n) + ul_link(n); }
};

// Per-slot transmit powers. NOMA powers are stored per user (K x N): the
// entry for user k is P^{NO}_{m,n,l} of its group m.
struct PowerPlan {
  Eigen::MatrixXd dl_noma;
  Eigen::MatrixXd dl_oma;
  Eigen::MatrixXd dl_oe;
  Eigen::MatrixXd ul_noma;
  Eigen::MatrixXd ul_oma;

  static PowerPlan zeros(int num_users, int num_slots);

  double dl_total(int n) const { return dl_noma.col(n).sum() + dl_oma.col(n).sum() + dl_oe.col(n).sum(); }
  double ul_total(int n) const { return ul_noma.col(n).sum() + ul_oma.col(n).sum(); }
};

struct RateTable {
  Eigen::MatrixXd dl_noma;  // K x N
  Eigen::MatrixXd dl_oma;
  Eigen::MatrixXd dl_oe;
  Eigen::MatrixXd ul_noma;
  Eigen::MatrixXd ul_oma;
  Eigen::MatrixXd ul_group_sum;  // M x N, NOMA group sum rate

  double dl_total(int k, int n) const { return dl_noma(k, n) + dl_oma(k, n) + dl_oe(k, n); }
  double ul_total(int k, int n) const { return ul_noma(k, n) + ul_oma(k, n); }
  Eigen::MatrixXd dl_totals() const { return dl_noma + dl_oma + dl_oe; }
  Eigen::MatrixXd ul_totals() const { return ul_noma + ul_oma; }
};

struct LinkBudgets {
  double dl_w = 0.0;
  double ul_w = 0.0;
};

inline LinkBudgets budgets_of(const Scenario& s) {
  return {s.params().dl_power_w, s.params().ul_power_w};
}

// Members of group m at slot n ordered by decreasing gain, ties by user id.
std::vector<int> sic_order(const Scenario& scenario, const Eigen::MatrixXd& gains, int m, int n);

// B log2(1 + P H / (N0 B)), continuously extended to 0 at B = 0.
double oma_rate(double bandwidth_hz, double power_w, double gain, double noise_density);

// DL NOMA rate of user k in group m. Stronger members interfere; weaker
// members leave an omega-fraction of residual power after SIC.
double dl_noma_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                    const BandwidthPlan& bw, const PowerPlan& pw, int m, int k, int n,
                    double omega);
// UL NOMA rate of user k: weaker members (decoded later at the UAV) interfere.
double ul_noma_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                    const BandwidthPlan& bw, const PowerPlan& pw, int m, int k, int n);
// Interference-free UL NOMA sum rate of group m.
double ul_group_sum_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                         const BandwidthPlan& bw, const PowerPlan& pw, int m, int n);

RateTable total_rates(const Scenario& scenario, const Eigen::MatrixXd& gains,
                      const BandwidthPlan& bw, const PowerPlan& pw, double omega);
RateTable total_rates(const Scenario& scenario, const Trajectory& trajectory,
                      const BandwidthPlan& bw, const PowerPlan& pw, double omega);

// Group UL total: NOMA sum rate plus members' OMA rates.
double ul_group_total(const Scenario& scenario, const RateTable& rates, int m, int n);

// Spectral efficiencies (bit/s per Hz of the matching bandwidth variable)
// under equal power density. NOMA entries include the factor L. OMA entries
// apply to both OMA and OE bandwidth.
struct SpectralCoefficients {
  Eigen::MatrixXd dl_noma;  // K x N
  Eigen::MatrixXd dl_oma;
  Eigen::MatrixXd ul_noma;
  Eigen::MatrixXd ul_oma;
};

// dl_link_hz / ul_link_hz hold the per-slot link bandwidth the power is
// assumed to be spread over. Entries must be positive.
SpectralCoefficients equal_density_coefficients(const Scenario& scenario,
                                                const Eigen::MatrixXd& gains,
                                                LinkBudgets budgets, double omega,
                                                const Eigen::VectorXd& dl_link_hz,
                                                const Eigen::VectorXd& ul_link_hz);

RateTable equal_density_rates(const Scenario& scenario, const Eigen::MatrixXd& gains,
                              const BandwidthPlan& bw, LinkBudgets budgets, double omega,
                              const Eigen::VectorXd& dl_link_hz, const Eigen::VectorXd& ul_link_hz);

// Powers proportional to bandwidth: P = Pt * b / B_link (NOMA scaled by theta).
// Slots whose link bandwidth is zero get zero power.
PowerPlan equal_density_powers(const Scenario& scenario, const BandwidthPlan& bw,
                               LinkBudgets budgets, const Eigen::VectorXd& dl_link_hz,
                               const Eigen::VectorXd& ul_link_hz);
// Same, spreading each link budget over the link's actual assigned bandwidth.
PowerPlan equal_density_powers(const Scenario& scenario, const BandwidthPlan& bw,
                               LinkBudgets budgets);

}  // namespace hmma
