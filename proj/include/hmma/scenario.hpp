#pragma once

// Problem instance: ground users, UAV kinematics, spectrum and power budgets,
// the line-of-sight air-to-ground channel, and NOMA user grouping.

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace hmma {

// Convex propulsion surrogate P(S) = hover + cubic * S^3.
struct PropulsionModel {
  double hover_power_w = 100.0;
  double cubic_coeff = 0.009;  // W s^3 / m^3
};

struct SystemParams {
  int group_size = 2;                  // L, users sharing one NOMA resource
  double horizon_s = 50.0;             // T
  int num_slots = 20;                  // N
  double bandwidth_hz = 2e6;           // B, shared by UL and DL
  double altitude_m = 100.0;           // h
  double ref_gain = 1e-5;              // gamma0 at 1 m, linear
  double noise_density_w_per_hz = 1e-14;
  double dl_power_w = 0.19952623149688797;  // 23 dBm
  double ul_power_w = 1.0;                  // 30 dBm
  double max_speed_mps = 50.0;
  double max_propulsion_w = 1000.0;
  PropulsionModel propulsion;
  double sic_residual = 0.0;           // omega
  double convergence_eps = 1e-3;       // relative improvement threshold
  int max_iters = 20;

  double slot_duration_s() const { return horizon_s / num_slots; }
};

struct UserSpec {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double mrr = 0.0;    // alpha
  int group = -1;      // assigned by group_users when negative
  double theta = -1.0; // NOMA power share inside the group; defaulted when negative
};

enum class GroupingRule { kStrongWeak, kById };

// Cyclic UAV path. Column n is q[n]; the segment q[N-1] -> q[0] closes the loop.
struct Trajectory {
  Eigen::Matrix2Xd waypoints;

  int num_slots() const { return static_cast<int>(waypoints.cols()); }
  Eigen::Vector2d operator[](int n) const { return waypoints.col(n); }
  // Length of the segment leaving slot n (wrapping to slot 0).
  double displacement(int n) const;
  double max_displacement() const;
};

class Scenario {
 public:
  // Users must already carry a group index and theta; see build_scenario.
  Scenario(SystemParams params, std::vector<UserSpec> users);

  const SystemParams& params() const { return params_; }
  const std::vector<UserSpec>& users() const { return users_; }
  const UserSpec& user(int k) const { return users_[k]; }
  // Member user indices of each group, in user-index order.
  const std::vector<std::vector<int>>& groups() const { return groups_; }

  int num_users() const { return static_cast<int>(users_.size()); }
  int num_groups() const { return static_cast<int>(groups_.size()); }
  int group_size() const { return params_.group_size; }
  int num_slots() const { return params_.num_slots; }
  int group_of(int k) const { return users_[k].group; }

  Scenario with_params(const SystemParams& params) const { return Scenario(params, users_); }
  Scenario with_users(std::vector<UserSpec> users) const { return Scenario(params_, std::move(users)); }

 private:
  SystemParams params_;
  std::vector<UserSpec> users_;
  std::vector<std::vector<int>> groups_;
};

// Validates scalar parameters only (no users). Throws InvalidScenario.
void validate_params(const SystemParams& params);

double channel_gain(const SystemParams& params, const Eigen::Vector2d& uav,
                    const Eigen::Vector2d& user);
double channel_gain(const Scenario& scenario, const Trajectory& trajectory, int k, int n);
// K x N table of gains H_{k,n}.
Eigen::MatrixXd gain_table(const Scenario& scenario, const Trajectory& trajectory);

double propulsion_power(const SystemParams& params, double speed_mps);
// Per-slot speed cap implied by both the speed limit and the propulsion budget.
double max_feasible_speed(const SystemParams& params);
inline double max_feasible_speed(const Scenario& s) { return max_feasible_speed(s.params()); }
// Maximum per-slot displacement.
double max_step_length(const SystemParams& params);

Trajectory initial_trajectory(const SystemParams& params,
                              const std::vector<Eigen::Vector2d>& user_positions);
Trajectory initial_trajectory(const Scenario& scenario);

struct Grouping {
  std::vector<int> group_of;     // per user index
  std::vector<double> theta;     // per user index
};

// Default in-group power shares by strength rank (rank 0 strongest):
// theta_l proportional to 4^l, giving (0.2, 0.8) for pairs.
std::vector<double> default_theta(int group_size);

// Strong-weak interleaved (snake) pairing by mean gain over `reference`, or
// consecutive ids. Throws BadCardinality when K is not a multiple of L.
Grouping group_users(const SystemParams& params, const std::vector<UserSpec>& users,
                     const Trajectory& reference, GroupingRule rule);

// Fills missing groups / thetas (using the initial trajectory as reference)
// and validates.
Scenario build_scenario(const SystemParams& params, std::vector<UserSpec> users,
                        GroupingRule rule = GroupingRule::kStrongWeak);

// K users uniformly dropped in [0, side]^2 with a fixed seed.
std::vector<UserSpec> random_users(int num_users, double side_m, unsigned long long seed,
                                   double mrr);

}  // namespace hmma
