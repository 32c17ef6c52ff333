#include "hmma/rate_model.hpp"

#include <algorithm>
#include <cmath>

namespace hmma {

BandwidthPlan BandwidthPlan::zeros(int num_groups, int num_users, int num_slots) {
  BandwidthPlan p;
  p.dl_noma = Eigen::MatrixXd::Zero(num_groups, num_slots);
  p.dl_oma = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.dl_oe = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.ul_noma = Eigen::MatrixXd::Zero(num_groups, num_slots);
  p.ul_oma = Eigen::MatrixXd::Zero(num_users, num_slots);
  return p;
}

PowerPlan PowerPlan::zeros(int num_users, int num_slots) {
  PowerPlan p;
  p.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.dl_oma = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.dl_oe = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.ul_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  p.ul_oma = Eigen::MatrixXd::Zero(num_users, num_slots);
  return p;
}

std::vector<int> sic_order(const Scenario& scenario, const Eigen::MatrixXd& gains, int m, int n) {
  std::vector<int> order = scenario.groups()[m];
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (gains(a, n) != gains(b, n)) return gains(a, n) > gains(b, n);
    return scenario.user(a).id < scenario.user(b).id;
  });
  return order;
}

double oma_rate(double bandwidth_hz, double power_w, double gain, double noise_density) {
  if (bandwidth_hz <= 0.0) return 0.0;
  return bandwidth_hz * std::log1p(power_w * gain / (noise_density * bandwidth_hz)) / M_LN2;
}

double dl_noma_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                    const BandwidthPlan& bw, const PowerPlan& pw, int m, int k, int n,
                    double omega) {
  const double band = bw.dl_noma(m, n);
  if (band <= 0.0) return 0.0;
  const std::vector<int> order = sic_order(scenario, gains, m, n);
  const double h = gains(k, n);
  double interference = 0.0;
  double residual = 0.0;
  bool past_self = false;
  for (int j : order) {
    if (j == k) {
      past_self = true;
      continue;
    }
    if (!past_self) {
      interference += pw.dl_noma(j, n) * h;
    } else {
      residual += pw.dl_noma(j, n) * h;
    }
  }
  const double noise = scenario.params().noise_density_w_per_hz * band;
  const double sinr = pw.dl_noma(k, n) * h / (interference + omega * residual + noise);
  return scenario.group_size() * band * std::log1p(sinr) / M_LN2;
}

double ul_noma_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                    const BandwidthPlan& bw, const PowerPlan& pw, int m, int k, int n) {
  const double band = bw.ul_noma(m, n);
  if (band <= 0.0) return 0.0;
  const std::vector<int> order = sic_order(scenario, gains, m, n);
  double interference = 0.0;
  bool past_self = false;
  for (int j : order) {
    if (j == k) {
      past_self = true;
      continue;
    }
    if (past_self) interference += pw.ul_noma(j, n) * gains(j, n);
  }
  const double noise = scenario.params().noise_density_w_per_hz * band;
  const double sinr = pw.ul_noma(k, n) * gains(k, n) / (interference + noise);
  return scenario.group_size() * band * std::log1p(sinr) / M_LN2;
}

double ul_group_sum_rate(const Scenario& scenario, const Eigen::MatrixXd& gains,
                         const BandwidthPlan& bw, const PowerPlan& pw, int m, int n) {
  const double band = bw.ul_noma(m, n);
  if (band <= 0.0) return 0.0;
  double received = 0.0;
  for (int k : scenario.groups()[m]) received += pw.ul_noma(k, n) * gains(k, n);
  const double noise = scenario.params().noise_density_w_per_hz * band;
  return scenario.group_size() * band * std::log1p(received / noise) / M_LN2;
}

RateTable total_rates(const Scenario& scenario, const Eigen::MatrixXd& gains,
                      const BandwidthPlan& bw, const PowerPlan& pw, double omega) {
  const int num_users = scenario.num_users();
  const int num_groups = scenario.num_groups();
  const int num_slots = static_cast<int>(gains.cols());
  const double n0 = scenario.params().noise_density_w_per_hz;

  RateTable t;
  t.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  t.dl_oma = t.dl_noma;
  t.dl_oe = t.dl_noma;
  t.ul_noma = t.dl_noma;
  t.ul_oma = t.dl_noma;
  t.ul_group_sum = Eigen::MatrixXd::Zero(num_groups, num_slots);

  for (int n = 0; n < num_slots; ++n) {
    for (int m = 0; m < num_groups; ++m) {
      for (int k : scenario.groups()[m]) {
        t.dl_noma(k, n) = dl_noma_rate(scenario, gains, bw, pw, m, k, n, omega);
        t.ul_noma(k, n) = ul_noma_rate(scenario, gains, bw, pw, m, k, n);
      }
      t.ul_group_sum(m, n) = ul_group_sum_rate(scenario, gains, bw, pw, m, n);
    }
    for (int k = 0; k < num_users; ++k) {
      t.dl_oma(k, n) = oma_rate(bw.dl_oma(k, n), pw.dl_oma(k, n), gains(k, n), n0);
      t.dl_oe(k, n) = oma_rate(bw.dl_oe(k, n), pw.dl_oe(k, n), gains(k, n), n0);
      t.ul_oma(k, n) = oma_rate(bw.ul_oma(k, n), pw.ul_oma(k, n), gains(k, n), n0);
    }
  }
  return t;
}

RateTable total_rates(const Scenario& scenario, const Trajectory& trajectory,
                      const BandwidthPlan& bw, const PowerPlan& pw, double omega) {
  return total_rates(scenario, gain_table(scenario, trajectory), bw, pw, omega);
}

double ul_group_total(const Scenario& scenario, const RateTable& rates, int m, int n) {
  double total = rates.ul_group_sum(m, n);
  for (int k : scenario.groups()[m]) total += rates.ul_oma(k, n);
  return total;
}

SpectralCoefficients equal_density_coefficients(const Scenario& scenario,
                                                const Eigen::MatrixXd& gains,
                                                LinkBudgets budgets, double omega,
                                                const Eigen::VectorXd& dl_link_hz,
                                                const Eigen::VectorXd& ul_link_hz) {
  const int num_users = scenario.num_users();
  const int num_slots = static_cast<int>(gains.cols());
  const double n0 = scenario.params().noise_density_w_per_hz;
  const double group_size = scenario.group_size();

  SpectralCoefficients c;
  c.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  c.dl_oma = c.dl_noma;
  c.ul_noma = c.dl_noma;
  c.ul_oma = c.dl_noma;

  for (int n = 0; n < num_slots; ++n) {
    const double dl_noise = n0 * dl_link_hz(n);
    const double ul_noise = n0 * ul_link_hz(n);
    for (int m = 0; m < scenario.num_groups(); ++m) {
      const std::vector<int> order = sic_order(scenario, gains, m, n);
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int k = order[pos];
        const double h = gains(k, n);
        const double own = scenario.user(k).theta;
        double stronger = 0.0, weaker = 0.0, weaker_rx = 0.0;
        for (std::size_t j = 0; j < order.size(); ++j) {
          if (j < pos) stronger += scenario.user(order[j]).theta;
          if (j > pos) {
            weaker += scenario.user(order[j]).theta;
            weaker_rx += scenario.user(order[j]).theta * gains(order[j], n);
          }
        }
        const double dl_sinr = own * budgets.dl_w * h /
                               (stronger * budgets.dl_w * h + omega * weaker * budgets.dl_w * h + dl_noise);
        const double ul_sinr = own * budgets.ul_w * h / (weaker_rx * budgets.ul_w + ul_noise);
        c.dl_noma(k, n) = group_size * std::log1p(dl_sinr) / M_LN2;
        c.ul_noma(k, n) = group_size * std::log1p(ul_sinr) / M_LN2;
      }
    }
    for (int k = 0; k < num_users; ++k) {
      c.dl_oma(k, n) = std::log1p(budgets.dl_w * gains(k, n) / dl_noise) / M_LN2;
      c.ul_oma(k, n) = std::log1p(budgets.ul_w * gains(k, n) / ul_noise) / M_LN2;
    }
  }
  return c;
}

RateTable equal_density_rates(const Scenario& scenario, const Eigen::MatrixXd& gains,
                              const BandwidthPlan& bw, LinkBudgets budgets, double omega,
                              const Eigen::VectorXd& dl_link_hz, const Eigen::VectorXd& ul_link_hz) {
  const SpectralCoefficients c =
      equal_density_coefficients(scenario, gains, budgets, omega, dl_link_hz, ul_link_hz);
  const int num_users = scenario.num_users();
  const int num_slots = static_cast<int>(gains.cols());

  RateTable t;
  t.dl_noma = Eigen::MatrixXd::Zero(num_users, num_slots);
  t.dl_oma = t.dl_noma;
  t.dl_oe = t.dl_noma;
  t.ul_noma = t.dl_noma;
  t.ul_oma = t.dl_noma;
  t.ul_group_sum = Eigen::MatrixXd::Zero(scenario.num_groups(), num_slots);
  for (int n = 0; n < num_slots; ++n) {
    for (int k = 0; k < num_users; ++k) {
      const int m = scenario.group_of(k);
      t.dl_noma(k, n) = c.dl_noma(k, n) * bw.dl_noma(m, n);
      t.dl_oma(k, n) = c.dl_oma(k, n) * bw.dl_oma(k, n);
      t.dl_oe(k, n) = c.dl_oma(k, n) * bw.dl_oe(k, n);
      t.ul_noma(k, n) = c.ul_noma(k, n) * bw.ul_noma(m, n);
      t.ul_oma(k, n) = c.ul_oma(k, n) * bw.ul_oma(k, n);
      t.ul_group_sum(m, n) += t.ul_noma(k, n);
    }
  }
  return t;
}

PowerPlan equal_density_powers(const Scenario& scenario, const BandwidthPlan& bw,
                               LinkBudgets budgets, const Eigen::VectorXd& dl_link_hz,
                               const Eigen::VectorXd& ul_link_hz) {
  const int num_users = scenario.num_users();
  const int num_slots = static_cast<int>(bw.dl_oma.cols());
  PowerPlan p = PowerPlan::zeros(num_users, num_slots);
  for (int n = 0; n < num_slots; ++n) {
    const double dl_density = dl_link_hz(n) > 0.0 ? budgets.dl_w / dl_link_hz(n) : 0.0;
    const double ul_density = ul_link_hz(n) > 0.0 ? budgets.ul_w / ul_link_hz(n) : 0.0;
    for (int k = 0; k < num_users; ++k) {
      const int m = scenario.group_of(k);
      const double theta = scenario.user(k).theta;
      p.dl_noma(k, n) = theta * dl_density * bw.dl_noma(m, n);
      p.dl_oma(k, n) = dl_density * bw.dl_oma(k, n);
      p.dl_oe(k, n) = dl_density * bw.dl_oe(k, n);
      p.ul_noma(k, n) = theta * ul_density * bw.ul_noma(m, n);
      p.ul_oma(k, n) = ul_density * bw.ul_oma(k, n);
    }
  }
  return p;
}

PowerPlan equal_density_powers(const Scenario& scenario, const BandwidthPlan& bw,
                               LinkBudgets budgets) {
  const int num_slots = static_cast<int>(bw.dl_oma.cols());
  Eigen::VectorXd dl(num_slots), ul(num_slots);
  for (int n = 0; n < num_slots; ++n) {
    dl(n) = bw.dl_link(n);
    ul(n) = bw.ul_link(n);
  }
  return equal_density_powers(scenario, bw, budgets, dl, ul);
}

}  // namespace hmma
