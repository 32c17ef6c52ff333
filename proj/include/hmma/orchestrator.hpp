#pragma once

// Alternating optimization: bandwidth, then power (HMMA family), then one
// trajectory step, repeated until the max-min rate stops improving. Every
// iterate is scored with the exact rate formulas and a candidate is only
// accepted when that score does not drop.

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "hmma/bandwidth_alloc.hpp"
#include "hmma/convex_solver.hpp"
#include "hmma/power_alloc.hpp"
#include "hmma/rate_model.hpp"
#include "hmma/scenario.hpp"
#include "hmma/trajectory_opt.hpp"

namespace hmma {

enum class Scheme {
  kHmma,      // hybrid NOMA/OMA with optimized power, planned for perfect SIC
  kEhmma,     // hybrid with OE compensation and equal power density
  kNomaOnly,  // HMMA restricted to NOMA bandwidth
  kOmaOnly,   // HMMA restricted to OMA bandwidth
  kHmmaNoPa,  // HMMA with equal power density instead of the power step
};

std::string to_string(Scheme scheme);
// Accepts hmma, ehmma, noma, oma, hmma-nopa. Throws ConfigError otherwise.
Scheme parse_scheme(const std::string& name);

struct Metrics {
  double eta = 0.0;             // bit/s, min average rate and instantaneous ratio
  double avg_dl_bps = 0.0;      // mean over users and slots
  double avg_ul_bps = 0.0;
  double jain = 0.0;            // per-slot Jain factor averaged over slots, in (0, 1]
  double fairness = 0.0;        // jain scaled by eta / (best eta among compared runs)
  double energy_efficiency = 0.0;  // bit/J
  double throughput_bits = 0.0;
  double propulsion_energy_j = 0.0;
  double oma_bandwidth_share = 0.0;  // OMA + OE share of assigned bandwidth
  double oma_rate_share = 0.0;       // OMA + OE share of delivered rate
};

struct Feasibility {
  double bandwidth = 0.0;    // per-slot excess over B, relative to B
  double power = 0.0;        // per-slot excess over each link budget, relative
  double negativity = 0.0;   // most negative allocation entry, relative
  double kinematics = 0.0;   // segment excess over the step cap, relative
  double propulsion = 0.0;   // propulsion power excess over its cap, relative
  double worst() const;
  bool ok(double tol) const { return worst() <= tol; }
};

struct IterationRecord {
  int iteration = 0;
  double eta = 0.0;             // accepted, exact rates
  double eta_allocation = 0.0;     // before the trajectory step
  bool incumbent_retained = false; // the re-allocation after the step was not better
  Restriction start = Restriction::kNone;  // chain that produced this record
  bool trajectory_moved = false;
  double trust_radius_m = 0.0;
};

struct SolveReport {
  Scheme scheme = Scheme::kHmma;
  std::vector<double> eta_trace;
  std::vector<IterationRecord> iterations;
  BandwidthPlan bandwidth;
  PowerPlan power;
  Trajectory trajectory;
  RateTable rates;  // exact rates of the final plans
  Metrics metrics;
  Feasibility feasibility;
  bool converged = false;  // stopped by the improvement threshold
  Restriction start = Restriction::kNone;  // chain the final plans come from
  double wall_seconds = 0.0;
};

// A final plan from a neighbouring problem, used as an extra starting chain.
struct WarmStart {
  Trajectory trajectory;
  BandwidthPlan bandwidth;
  PowerPlan power;
};

struct RunOptions {
  SolverSettings solver;
  std::optional<double> convergence_eps;  // overrides the scenario value
  std::optional<int> max_iters;
  std::optional<Trajectory> initial;      // defaults to initial_trajectory()
  // Hybrid schemes also run chains that start from the all-NOMA and all-OMA
  // plans and report the best chain. The alternation is a local method, so
  // this keeps the hybrid result at least as good as either restricted one.
  bool restricted_starts = true;
  // Adds a chain from this plan when it fits the scenario and is feasible.
  std::optional<WarmStart> warm_start;
  // Sweeps along alpha, omega and smax seed each point with the neighbouring
  // point's plan, visiting values so that plan stays feasible and scores no
  // lower (alpha and omega downward, smax upward).
  bool sweep_continuation = true;
};

SolveReport run_scheme(const Scenario& scenario, Scheme scheme, const RunOptions& options = {});
SolveReport run_jul_dl_ra(const Scenario& scenario, const RunOptions& options = {});
SolveReport run_jul_dl_raep(const Scenario& scenario, const RunOptions& options = {});
SolveReport run_baseline(const Scenario& scenario, Restriction restriction, const RunOptions& options = {});

// Exact max-min objective: min over users and links of the average rate and,
// for alpha_k > 0, of R_{k,n} / alpha_k.
double true_eta(const Scenario& scenario, const RateTable& rates);

Metrics compute_metrics(const Scenario& scenario, const BandwidthPlan& bw, const PowerPlan& pw,
                        const Trajectory& trajectory, double omega);
// Jain factor averaged over slots for a K x N rate table; 1 when all rates are 0.
double jain_factor(const Eigen::MatrixXd& rates);
// Fills Metrics::fairness across runs compared on the same scenario.
void normalize_fairness(std::vector<SolveReport*> reports);

Feasibility verify_feasibility(const Scenario& scenario, const BandwidthPlan& bw, const PowerPlan& pw,
                               const Trajectory& trajectory);

// Experiment template: parameters plus either explicit users or a seeded drop.
struct Experiment {
  SystemParams params;
  int num_users = 6;
  double area_side_m = 1500.0;
  double mrr = 0.0;
  unsigned long long seed = 1;
  std::optional<std::vector<UserSpec>> users;  // positions (and optional groups) given explicitly
  GroupingRule grouping = GroupingRule::kStrongWeak;
  Scenario scenario() const;
};

enum class SweepAxis { kAlpha, kUsers, kMaxSpeed, kOmega, kHorizon };
std::string to_string(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);  // alpha, K, smax, omega, T
Experiment with_axis_value(const Experiment& base, SweepAxis axis, double value);

struct SweepEntry {
  double value = 0.0;
  Scheme scheme = Scheme::kHmma;
  std::optional<SolveReport> report;
  std::string error;  // set when the run failed; the sweep continues
};

std::vector<SweepEntry> sweep(const Experiment& base, SweepAxis axis, const std::vector<double>& values,
                              const std::vector<Scheme>& schemes, const RunOptions& options = {});

}  // namespace hmma
