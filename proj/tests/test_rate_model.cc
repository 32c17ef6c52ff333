#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hmma/rate_model.hpp"
#include "support.hpp"

using namespace hmma;

namespace {

struct Pair {
  Scenario s = test::make_scenario({{0, 0}, {500, 0}}, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd(2, 1);
  BandwidthPlan bw = BandwidthPlan::zeros(1, 2, 1);
  PowerPlan pw = PowerPlan::zeros(2, 1);
  Pair(double h_strong, double h_weak) { gains << h_strong, h_weak; }
};

// Perfect-SIC DL NOMA rate written out directly.
double dl_reference(const std::vector<double>& p, const std::vector<double>& h, int k, double band,
                    double n0, int group_size) {
  // Accumulate stronger users' power in decoding order.
  std::vector<int> idx(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) idx[j] = static_cast<int>(j);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return h[a] > h[b] || (h[a] == h[b] && a < b); });
  double interference = 0.0;
  for (int j : idx) {
    if (j == k) break;
    interference += p[j] * h[k];
  }
  return group_size * band * std::log1p(p[k] * h[k] / (interference + n0 * band)) / M_LN2;
}

}  // namespace

TEST_CASE("DL NOMA rate: worked instances") {
  Pair c(1e-9, 2.5e-10);
  c.bw.dl_noma(0, 0) = 1e6;
  c.pw.dl_noma(0, 0) = 1.0;
  c.pw.dl_noma(1, 0) = 0.0;
  const double expected = 2e6 * std::log2(1.1);
  CHECK(test::rel_err(dl_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 0, 0, 0.0), expected) < 1e-14);
  CHECK(dl_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 0, 0, 0.0) == doctest::Approx(2.75007e5).epsilon(1e-4));
  CHECK(dl_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 1, 0, 0.0) == 0.0);

  c.pw.dl_noma(1, 0) = 4.0;
  const double with_residual = 2e6 * std::log2(13.0 / 12.0);
  CHECK(test::rel_err(dl_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 0, 0, 0.5), with_residual) < 1e-14);
}

TEST_CASE("OMA rate") {
  const double expected = 1e6 * std::log2(1.01);
  CHECK(test::rel_err(oma_rate(1e6, 0.1, 1e-9, 1e-14), expected) < 1e-14);
  CHECK(oma_rate(1e6, 0.1, 1e-9, 1e-14) == doctest::Approx(1.4355e4).epsilon(1e-4));
  CHECK(oma_rate(0.0, 0.1, 1e-9, 1e-14) == 0.0);
  CHECK(oma_rate(1e6, 0.0, 1e-9, 1e-14) == 0.0);
  CHECK(oma_rate(1e-30, 0.1, 1e-9, 1e-14) < 1e-20);
}

TEST_CASE("UL NOMA rate and group sum") {
  Pair c(1e-9, 2.5e-10);
  c.bw.ul_noma(0, 0) = 1e6;
  c.pw.ul_noma(0, 0) = 0.5;
  c.pw.ul_noma(1, 0) = 0.5;
  const double strong = 2e6 * std::log2(1.0 + 0.5e-9 / (0.5 * 2.5e-10 + 1e-8));
  CHECK(test::rel_err(ul_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 0, 0), strong) < 1e-14);
  CHECK(strong == doctest::Approx(2e6 * std::log2(1.0 + 0.0493827)).epsilon(1e-6));
  const double weak = 2e6 * std::log2(1.0 + 0.5 * 2.5e-10 / 1e-8);
  CHECK(test::rel_err(ul_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 1, 0), weak) < 1e-14);
  const double sum = 2e6 * std::log2(1.0 + (0.5e-9 + 0.5 * 2.5e-10) / 1e-8);
  CHECK(test::rel_err(ul_group_sum_rate(c.s, c.gains, c.bw, c.pw, 0, 0), sum) < 1e-14);

  c.pw.ul_noma.setZero();
  CHECK(ul_noma_rate(c.s, c.gains, c.bw, c.pw, 0, 0, 0) == 0.0);
  CHECK(ul_group_sum_rate(c.s, c.gains, c.bw, c.pw, 0, 0) == 0.0);
}

TEST_CASE("SIC order: strongest first, ties by id") {
  const Scenario s = test::make_scenario({{0, 0}, {1, 0}, {2, 0}}, 3);
  Eigen::MatrixXd g(3, 1);
  g << 1e-10, 5e-10, 1e-10;
  const std::vector<int> order = sic_order(s, g, 0, 0);
  CHECK(order == std::vector<int>{1, 0, 2});
}

TEST_CASE("UL telescoping identity on random instances") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> logu(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int L = 1 + trial % 4;
    std::vector<Eigen::Vector2d> pos(L, Eigen::Vector2d::Zero());
    const Scenario s = test::make_scenario(pos, L);
    Eigen::MatrixXd g(L, 1);
    BandwidthPlan bw = BandwidthPlan::zeros(1, L, 1);
    PowerPlan pw = PowerPlan::zeros(L, 1);
    bw.ul_noma(0, 0) = std::pow(10.0, 5.5 + logu(rng));
    for (int k = 0; k < L; ++k) {
      g(k, 0) = std::pow(10.0, -10.0 + 1.5 * logu(rng));
      pw.ul_noma(k, 0) = std::pow(10.0, 2.0 * logu(rng));
    }
    double total = 0.0;
    for (int k = 0; k < L; ++k) total += ul_noma_rate(s, g, bw, pw, 0, k, 0);
    worst = std::max(worst, test::rel_err(total, ul_group_sum_rate(s, g, bw, pw, 0, 0)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("imperfect SIC: omega = 0 is bit-exact perfect SIC, rates fall with omega") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 2 + trial % 3;
    const Scenario s = test::make_scenario(std::vector<Eigen::Vector2d>(L, Eigen::Vector2d::Zero()), L);
    Eigen::MatrixXd g(L, 1);
    BandwidthPlan bw = BandwidthPlan::zeros(1, L, 1);
    PowerPlan pw = PowerPlan::zeros(L, 1);
    bw.dl_noma(0, 0) = 1e5 + 1e6 * u(rng);
    std::vector<double> p(L), h(L);
    for (int k = 0; k < L; ++k) {
      h[k] = g(k, 0) = 1e-10 * (0.1 + u(rng));
      p[k] = pw.dl_noma(k, 0) = u(rng);
    }
    for (int k = 0; k < L; ++k) {
      const double ref = dl_reference(p, h, k, bw.dl_noma(0, 0), 1e-14, L);
      CHECK(dl_noma_rate(s, g, bw, pw, 0, k, 0, 0.0) == ref);
      double prev = ref;
      for (double w : {0.01, 0.1, 0.5, 1.0}) {
        const double r = dl_noma_rate(s, g, bw, pw, 0, k, 0, w);
        CHECK(r <= prev);
        prev = r;
      }
    }
  }
}

TEST_CASE("total rates decompose exactly") {
  SystemParams p;
  const Scenario s = build_scenario(p, random_users(6, 1500.0, 9, 0.3));
  const Trajectory t = initial_trajectory(s);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BandwidthPlan bw = BandwidthPlan::zeros(3, 6, p.num_slots);
  PowerPlan pw = PowerPlan::zeros(6, p.num_slots);
  for (auto* m : {&bw.dl_noma, &bw.dl_oma, &bw.ul_noma, &bw.ul_oma}) *m = m->unaryExpr([&](double) { return 1e5 * u(rng); });
  for (auto* m : {&pw.dl_noma, &pw.dl_oma, &pw.ul_noma, &pw.ul_oma}) *m = m->unaryExpr([&](double) { return 0.01 * u(rng); });

  const RateTable r = total_rates(s, t, bw, pw, 0.0);
  const Eigen::MatrixXd dl = r.dl_totals();
  for (int k = 0; k < 6; ++k) {
    for (int n = 0; n < p.num_slots; ++n) {
      CHECK(dl(k, n) == r.dl_noma(k, n) + r.dl_oma(k, n) + r.dl_oe(k, n));
      CHECK(r.ul_total(k, n) == r.ul_noma(k, n) + r.ul_oma(k, n));
    }
  }

  // OE-free E-HMMA at omega = 0 is HMMA.
  BandwidthPlan with_oe = bw;
  with_oe.dl_oe.setZero();
  const RateTable r2 = total_rates(s, t, with_oe, pw, 0.0);
  CHECK((r2.dl_totals() - dl).cwiseAbs().maxCoeff() == 0.0);

  // No OMA bandwidth: totals are pure NOMA.
  BandwidthPlan noma_only = bw;
  noma_only.dl_oma.setZero();
  noma_only.ul_oma.setZero();
  const RateTable r3 = total_rates(s, t, noma_only, pw, 0.0);
  CHECK((r3.dl_totals() - r3.dl_noma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r3.ul_totals() - r3.ul_noma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("equal-density rates agree with substituted powers and are linear in bandwidth") {
  SystemParams p;
  p.sic_residual = 0.03;
  const Scenario s = build_scenario(p, random_users(6, 1500.0, 21, 0.3));
  const Trajectory t = initial_trajectory(s);
  const Eigen::MatrixXd g = gain_table(s, t);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BandwidthPlan bw = BandwidthPlan::zeros(3, 6, p.num_slots);
  for (auto* m : {&bw.dl_noma, &bw.dl_oma, &bw.dl_oe, &bw.ul_noma, &bw.ul_oma}) *m = m->unaryExpr([&](double) { return 1e5 * u(rng); });
  Eigen::VectorXd dl(p.num_slots), ul(p.num_slots);
  for (int n = 0; n < p.num_slots; ++n) {
    dl(n) = bw.dl_link(n);
    ul(n) = bw.ul_link(n);
  }
  for (double omega : {0.0, 0.03}) {
    const RateTable ed = equal_density_rates(s, g, bw, budgets_of(s), omega, dl, ul);
    const PowerPlan pw = equal_density_powers(s, bw, budgets_of(s));
    const RateTable tr = total_rates(s, g, bw, pw, omega);
    for (int k = 0; k < 6; ++k) {
      for (int n = 0; n < p.num_slots; ++n) {
        CHECK(test::rel_err(ed.dl_total(k, n), tr.dl_total(k, n)) < 1e-10);
        CHECK(test::rel_err(ed.ul_total(k, n), tr.ul_total(k, n)) < 1e-10);
      }
    }
  }
  BandwidthPlan twice = bw;
  for (auto* m : {&twice.dl_noma, &twice.dl_oma, &twice.dl_oe, &twice.ul_noma, &twice.ul_oma}) *m *= 2.0;
  const RateTable a = equal_density_rates(s, g, bw, budgets_of(s), 0.0, dl, ul);
  const RateTable b = equal_density_rates(s, g, twice, budgets_of(s), 0.0, dl, ul);
  CHECK(((b.dl_totals() - 2.0 * a.dl_totals()).cwiseAbs().maxCoeff()) <= 1e-9 * a.dl_totals().maxCoeff());
  CHECK(((b.ul_totals() - 2.0 * a.ul_totals()).cwiseAbs().maxCoeff()) <= 1e-9 * a.ul_totals().maxCoeff());
}
