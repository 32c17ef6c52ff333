#pragma once

// Bandwidth assignment under equal power density. With power spread evenly
// over each link's bandwidth, every rate is linear in the bandwidth
// variables, so the max-min problem is an LP in (B, eta). The two-step scheme
// first assumes each link may use the whole band to find per-slot link
// splits, then re-solves with those splits inside the SINR terms.

#include <Eigen/Core>

#include "hmma/convex_solver.hpp"
#include "hmma/rate_model.hpp"
#include "hmma/scenario.hpp"

namespace hmma {

enum class AccessMode { kHmma, kEhmma };
// Baselines restrict the HMMA variable set.
enum class Restriction { kNone, kOmaOnly, kNomaOnly };

struct BandwidthOptions {
  AccessMode mode = AccessMode::kHmma;
  Restriction restriction = Restriction::kNone;
  double omega = 0.0;     // SIC residual assumed by the rate model
  bool allow_oe = true;   // E-HMMA: compensation may be labelled OE
  // Step 2 keeps each link within its step-1 width, so the power density
  // assumed in the SINR terms is actually attainable.
  bool cap_step2_links = true;
  SolverSettings solver;
};

struct BandwidthSolution {
  BandwidthPlan plan;
  double eta = 0.0;        // LP value under the equal-density model, bit/s
  double step1_eta = 0.0;  // value of the first step (two-step runs only)
  Eigen::VectorXd dl_link_hz;  // link bandwidths assumed by the SINR terms
  Eigen::VectorXd ul_link_hz;
  SolveStatus status = SolveStatus::kNumericalTrouble;
  double max_violation = 0.0;  // scaled LP residual
  int lp_iterations = 0;
};

// One LP with the given per-slot link bandwidths in the SINR terms. A slot
// whose link bandwidth is 0 gets no variables on that link. With cap_links
// each link's assignment is also bounded by its given width.
BandwidthSolution solve_bandwidth_lp(const Scenario& scenario, const Eigen::MatrixXd& gains,
                                     const BandwidthOptions& options,
                                     const Eigen::VectorXd& dl_link_hz,
                                     const Eigen::VectorXd& ul_link_hz, bool cap_links = false);

// Two-step scheme. Throws SolverFailure when either LP is not solved.
BandwidthSolution assign_bandwidth(const Scenario& scenario, const Eigen::MatrixXd& gains,
                                   const BandwidthOptions& options);
BandwidthSolution assign_bandwidth(const Scenario& scenario, const Trajectory& trajectory,
                                   const BandwidthOptions& options);

struct BandwidthResiduals {
  double bandwidth_hz = 0.0;   // worst excess over B per slot, or negativity
  double rate_bps = 0.0;       // worst shortfall of an average/instantaneous rate constraint
  double scaled = 0.0;         // max(bandwidth_hz / B, rate_bps / eta scale)
  double binding_gap = 0.0;    // relative gap between eta and the tightest constraint
  bool feasible(double tol) const { return scaled <= tol; }
};

// Recomputes every LP constraint from the rate formulas.
BandwidthResiduals verify_bandwidth_kkt(const BandwidthSolution& solution, const Scenario& scenario,
                                        const Eigen::MatrixXd& gains, const BandwidthOptions& options);

}  // namespace hmma
