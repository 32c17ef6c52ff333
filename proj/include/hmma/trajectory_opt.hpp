#pragma once

// One successive-convex-approximation step of trajectory design. Every rate
// is convex in the squared UAV-user distance D = h^2 + ||q - w||^2, so its
// tangent in D is a global lower bound; composed with the convex D(q) that
// tangent is concave in q, and the max-min problem over q becomes a convex
// QCQP. UL NOMA rates are bounded per group because the per-user UL rate is
// not convex in the interferers' distances.

#include <Eigen/Core>

#include <vector>

#include "hmma/convex_solver.hpp"
#include "hmma/rate_model.hpp"
#include "hmma/scenario.hpp"

namespace hmma {

struct ExpansionPoint {
  Trajectory trajectory;
  Eigen::MatrixXd phi;  // K x N squared horizontal distances, m^2

  static ExpansionPoint at(const Scenario& scenario, const Trajectory& trajectory);
};

// value + slope . (phi - phi_ref), over the K squared distances of one slot.
struct AffineBound {
  double value = 0.0;       // bit/s at the expansion point
  Eigen::VectorXd phi_ref;  // K
  Eigen::VectorXd slope;    // K, bit/s per m^2, all <= 0

  double eval(const Eigen::VectorXd& phi) const { return value + slope.dot(phi - phi_ref); }
};

struct Allocation {
  BandwidthPlan bandwidth;
  PowerPlan power;
};

// DL rate of user k in slot n (NOMA, OMA and OE parts), SIC order frozen at
// the expansion point.
AffineBound dl_rate_lower_bound(const Scenario& scenario, const ExpansionPoint& expansion,
                                const Allocation& alloc, int k, int n, double omega);
// UL NOMA group sum rate plus the members' OMA rates.
AffineBound ul_group_rate_lower_bound(const Scenario& scenario, const ExpansionPoint& expansion,
                                      const Allocation& alloc, int m, int n);

// Objective of the step evaluated with exact rates: min over users of the DL
// average and instantaneous ratios, and over groups of the UL group rate per
// member (average, and instantaneous against the group's largest alpha).
double surrogate_eta(const Scenario& scenario, const Trajectory& trajectory, const Allocation& alloc,
                     double omega);

struct TrajectoryOptions {
  double omega = 0.0;
  double trust_radius_m = -1.0;  // initial; negative means the users' and path's bounding-box diagonal
  int max_halvings = 5;
  SolverSettings solver;
};

struct TrajectoryStep {
  Trajectory trajectory;
  double eta = 0.0;           // surrogate_eta at the returned trajectory
  double eta_start = 0.0;     // surrogate_eta at the expansion point
  double trust_radius_m = 0.0;
  int halvings = 0;
  bool moved = false;         // false when the expansion point is returned
  bool trust_exhausted = false;
  int solver_iterations = 0;
};

TrajectoryStep solve_trajectory_step(const Scenario& scenario, const Trajectory& expansion,
                                     const Allocation& alloc, const TrajectoryOptions& options = {});

// Largest violation of the displacement cap over all segments, closing one included (m).
double displacement_violation(const Scenario& scenario, const Trajectory& trajectory);

}  // namespace hmma
