#include "hmma/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "hmma/errors.hpp"

namespace hmma {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidScenario(what);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

double Trajectory::displacement(int n) const {
  const int next = (n + 1) % num_slots();
  return (waypoints.col(next) - waypoints.col(n)).norm();
}

double Trajectory::max_displacement() const {
  double worst = 0.0;
  for (int n = 0; n < num_slots(); ++n) worst = std::max(worst, displacement(n));
  return worst;
}

void validate_params(const SystemParams& p) {
  require(p.group_size >= 1, "group_size must be >= 1");
  require(p.num_slots >= 2, "num_slots must be >= 2");
  require(positive_finite(p.horizon_s), "horizon must be positive");
  require(positive_finite(p.bandwidth_hz), "bandwidth must be positive");
  require(std::isfinite(p.altitude_m) && p.altitude_m > 0.0, "altitude must be positive");
  require(positive_finite(p.ref_gain), "reference gain must be positive");
  require(positive_finite(p.noise_density_w_per_hz), "noise density must be positive");
  require(positive_finite(p.dl_power_w), "DL power budget must be positive");
  require(positive_finite(p.ul_power_w), "UL power budget must be positive");
  require(std::isfinite(p.max_speed_mps) && p.max_speed_mps >= 0.0, "max speed must be >= 0");
  require(positive_finite(p.max_propulsion_w), "max propulsion power must be positive");
  require(std::isfinite(p.propulsion.hover_power_w) && p.propulsion.hover_power_w >= 0.0,
          "hover power must be >= 0");
  require(positive_finite(p.propulsion.cubic_coeff), "propulsion coefficient must be positive");
  require(p.sic_residual >= 0.0 && p.sic_residual <= 1.0, "sic_residual must lie in [0, 1]");
  require(positive_finite(p.convergence_eps), "convergence eps must be positive");
  require(p.max_iters >= 1, "max_iters must be >= 1");
}

Scenario::Scenario(SystemParams params, std::vector<UserSpec> users)
    : params_(params), users_(std::move(users)) {
  validate_params(params_);
  const int num_users = static_cast<int>(users_.size());
  const int group_size = params_.group_size;
  require(num_users >= 1, "at least one user is required");
  if (num_users % group_size != 0) {
    throw BadCardinality("K = " + std::to_string(num_users) +
                         " is not a multiple of L = " + std::to_string(group_size));
  }
  const int num_groups = num_users / group_size;
  groups_.assign(num_groups, {});

  std::set<int> ids;
  for (int k = 0; k < num_users; ++k) {
    const UserSpec& u = users_[k];
    require(ids.insert(u.id).second, "duplicate user id " + std::to_string(u.id));
    require(u.position.allFinite(), "user " + std::to_string(u.id) + " position not finite");
    require(u.mrr >= 0.0 && u.mrr <= 1.0,
            "user " + std::to_string(u.id) + " mrr must lie in [0, 1]");
    require(u.group >= 0 && u.group < num_groups,
            "user " + std::to_string(u.id) + " has no valid group");
    require(std::isfinite(u.theta) && u.theta >= 0.0,
            "user " + std::to_string(u.id) + " theta must be >= 0");
    groups_[u.group].push_back(k);
  }
  for (int m = 0; m < num_groups; ++m) {
    require(static_cast<int>(groups_[m].size()) == group_size,
            "group " + std::to_string(m) + " does not have L members");
    double sum = 0.0;
    for (int k : groups_[m]) sum += users_[k].theta;
    require(std::abs(sum - 1.0) <= 1e-12, "theta of group " + std::to_string(m) + " must sum to 1");
  }
}

double channel_gain(const SystemParams& params, const Eigen::Vector2d& uav,
                    const Eigen::Vector2d& user) {
  const double h = params.altitude_m;
  return params.ref_gain / (h * h + (uav - user).squaredNorm());
}

double channel_gain(const Scenario& scenario, const Trajectory& trajectory, int k, int n) {
  return channel_gain(scenario.params(), trajectory.waypoints.col(n), scenario.user(k).position);
}

Eigen::MatrixXd gain_table(const Scenario& scenario, const Trajectory& trajectory) {
  const int num_users = scenario.num_users();
  const int num_slots = trajectory.num_slots();
  Eigen::MatrixXd gains(num_users, num_slots);
  for (int n = 0; n < num_slots; ++n) {
    for (int k = 0; k < num_users; ++k) gains(k, n) = channel_gain(scenario, trajectory, k, n);
  }
  return gains;
}

double propulsion_power(const SystemParams& params, double speed_mps) {
  return params.propulsion.hover_power_w + params.propulsion.cubic_coeff * speed_mps * speed_mps * speed_mps;
}

double max_feasible_speed(const SystemParams& params) {
  const double headroom = params.max_propulsion_w - params.propulsion.hover_power_w;
  if (!(headroom > 0.0)) {
    throw InfeasiblePropulsion("max propulsion power does not exceed the hover power");
  }
  return std::min(params.max_speed_mps, std::cbrt(headroom / params.propulsion.cubic_coeff));
}

double max_step_length(const SystemParams& params) {
  return max_feasible_speed(params) * params.slot_duration_s();
}

Trajectory initial_trajectory(const SystemParams& params,
                              const std::vector<Eigen::Vector2d>& user_positions) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& w : user_positions) centroid += w;
  centroid /= static_cast<double>(user_positions.size());

  double mean_sq = 0.0;
  for (const auto& w : user_positions) mean_sq += (w - centroid).squaredNorm();
  const double r_geo = std::sqrt(mean_sq / static_cast<double>(user_positions.size()));

  const double two_pi = 2.0 * M_PI;
  const double radius = std::min({r_geo, params.max_speed_mps * params.horizon_s / two_pi,
                                  max_feasible_speed(params) * params.horizon_s / two_pi});

  Trajectory traj;
  traj.waypoints.resize(2, params.num_slots);
  for (int n = 0; n < params.num_slots; ++n) {
    const double angle = two_pi * n / params.num_slots;
    traj.waypoints.col(n) = centroid + radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return traj;
}

Trajectory initial_trajectory(const Scenario& scenario) {
  std::vector<Eigen::Vector2d> positions;
  for (const auto& u : scenario.users()) positions.push_back(u.position);
  return initial_trajectory(scenario.params(), positions);
}

std::vector<double> default_theta(int group_size) {
  std::vector<double> theta(group_size);
  double weight = 1.0;
  double total = 0.0;
  for (int l = 0; l < group_size; ++l) {
    theta[l] = weight;
    total += weight;
    weight *= 4.0;
  }
  for (double& t : theta) t /= total;
  return theta;
}

Grouping group_users(const SystemParams& params, const std::vector<UserSpec>& users,
                     const Trajectory& reference, GroupingRule rule) {
  const int num_users = static_cast<int>(users.size());
  const int group_size = params.group_size;
  if (group_size < 1 || num_users == 0 || num_users % group_size != 0) {
    throw BadCardinality("K = " + std::to_string(num_users) +
                         " is not a multiple of L = " + std::to_string(group_size));
  }
  const int num_groups = num_users / group_size;

  std::vector<double> mean_gain(num_users, 0.0);
  for (int k = 0; k < num_users; ++k) {
    for (int n = 0; n < reference.num_slots(); ++n) {
      mean_gain[k] += channel_gain(params, reference.waypoints.col(n), users[k].position);
    }
    mean_gain[k] /= reference.num_slots();
  }
  auto stronger = [&](int a, int b) {
    if (mean_gain[a] != mean_gain[b]) return mean_gain[a] > mean_gain[b];
    return users[a].id < users[b].id;
  };

  Grouping out;
  out.group_of.assign(num_users, -1);
  out.theta.assign(num_users, 0.0);

  if (rule == GroupingRule::kStrongWeak) {
    std::vector<int> ranked(num_users);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::sort(ranked.begin(), ranked.end(), stronger);
    for (int r = 0; r < num_users; ++r) {
      const int layer = r / num_groups;
      const int pos = r % num_groups;
      out.group_of[ranked[r]] = (layer % 2 == 0) ? pos : num_groups - 1 - pos;
    }
  } else {
    std::vector<int> by_id(num_users);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](int a, int b) { return users[a].id < users[b].id; });
    for (int r = 0; r < num_users; ++r) out.group_of[by_id[r]] = r / group_size;
  }

  const std::vector<double> shares = default_theta(group_size);
  for (int m = 0; m < num_groups; ++m) {
    std::vector<int> members;
    for (int k = 0; k < num_users; ++k) {
      if (out.group_of[k] == m) members.push_back(k);
    }
    std::sort(members.begin(), members.end(), stronger);
    for (int l = 0; l < group_size; ++l) out.theta[members[l]] = shares[l];
  }
  return out;
}

Scenario build_scenario(const SystemParams& params, std::vector<UserSpec> users,
                        GroupingRule rule) {
  validate_params(params);
  const bool need_groups =
      std::any_of(users.begin(), users.end(), [](const UserSpec& u) { return u.group < 0; });
  const bool need_theta =
      std::any_of(users.begin(), users.end(), [](const UserSpec& u) { return u.theta < 0.0; });
  if (need_groups || need_theta) {
    std::vector<Eigen::Vector2d> positions;
    for (const auto& u : users) positions.push_back(u.position);
    const Trajectory reference = initial_trajectory(params, positions);
    if (need_groups) {
      const Grouping g = group_users(params, users, reference, rule);
      for (std::size_t k = 0; k < users.size(); ++k) {
        users[k].group = g.group_of[k];
        if (users[k].theta < 0.0) users[k].theta = g.theta[k];
      }
    } else {
      // Groups given explicitly: default thetas by in-group mean-gain rank.
      std::vector<double> mean_gain(users.size(), 0.0);
      for (std::size_t k = 0; k < users.size(); ++k) {
        for (int n = 0; n < reference.num_slots(); ++n) {
          mean_gain[k] += channel_gain(params, reference.waypoints.col(n), users[k].position);
        }
      }
      const std::vector<double> shares = default_theta(params.group_size);
      int max_group = 0;
      for (const auto& u : users) max_group = std::max(max_group, u.group);
      for (int m = 0; m <= max_group; ++m) {
        std::vector<int> members;
        for (std::size_t k = 0; k < users.size(); ++k) {
          if (users[k].group == m) members.push_back(static_cast<int>(k));
        }
        std::sort(members.begin(), members.end(), [&](int a, int b) {
          if (mean_gain[a] != mean_gain[b]) return mean_gain[a] > mean_gain[b];
          return users[a].id < users[b].id;
        });
        for (std::size_t l = 0; l < members.size() && l < shares.size(); ++l) {
          if (users[members[l]].theta < 0.0) users[members[l]].theta = shares[l];
        }
      }
    }
  }
  return Scenario(params, std::move(users));
}

std::vector<UserSpec> random_users(int num_users, double side_m, unsigned long long seed,
                                   double mrr) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side_m);
  std::vector<UserSpec> users(num_users);
  for (int k = 0; k < num_users; ++k) {
    users[k].id = k;
    const double x = coord(rng);
    const double y = coord(rng);
    users[k].position = Eigen::Vector2d(x, y);
    users[k].mrr = mrr;
  }
  return users;
}

}  // namespace hmma
