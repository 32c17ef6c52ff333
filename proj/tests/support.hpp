#pragma once

#include <random>
#include <vector>

#include "hmma/scenario.hpp"

namespace hmma::test {

// One scenario with explicit groups and thetas, users in index order.
inline Scenario make_scenario(const std::vector<Eigen::Vector2d>& positions, int group_size,
                              SystemParams params = {}, double mrr = 0.0) {
  params.group_size = group_size;
  std::vector<UserSpec> users;
  const std::vector<double> theta = default_theta(group_size);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    UserSpec u;
    u.id = static_cast<int>(k);
    u.position = positions[k];
    u.mrr = mrr;
    u.group = static_cast<int>(k) / group_size;
    u.theta = theta[k % group_size];
    users.push_back(u);
  }
  return Scenario(params, users);
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace hmma::test
