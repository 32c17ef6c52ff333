#include "hmma/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hmma/errors.hpp"
#include "json.hpp"

namespace hmma {

namespace {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Reads one object section, tracking which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(key_path(key), "must be finite");
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key), "must be an integer");
    out = v.get<int>();
  }

  // A quantity given either in linear units or in decibels, not both.
  void either(const std::string& linear, const std::string& db, double& out, double (*convert)(double)) {
    if (has(linear) && has(db)) {
      throw ConfigError(key_path(db), "conflicts with " + key_path(linear) + "; give one of them");
    }
    number(linear, out);
    if (has(db)) {
      double v = 0.0;
      number(db, v);
      out = convert(v);
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

void read_system(Section& s, SystemParams& p) {
  s.integer("group_size", p.group_size);
  s.number("horizon_s", p.horizon_s);
  s.integer("num_slots", p.num_slots);
  s.number("bandwidth_hz", p.bandwidth_hz);
  s.number("altitude_m", p.altitude_m);
  s.either("ref_gain", "ref_gain_db", p.ref_gain, db_to_linear);
  s.either("noise_w_per_hz", "noise_dbm_per_hz", p.noise_density_w_per_hz, dbm_to_watt);
  s.either("dl_power_w", "dl_power_dbm", p.dl_power_w, dbm_to_watt);
  s.either("ul_power_w", "ul_power_dbm", p.ul_power_w, dbm_to_watt);
  s.number("max_speed_mps", p.max_speed_mps);
  s.number("max_propulsion_w", p.max_propulsion_w);
  s.number("hover_power_w", p.propulsion.hover_power_w);
  s.number("propulsion_cubic", p.propulsion.cubic_coeff);
  s.number("sic_residual", p.sic_residual);
  s.number("convergence_eps", p.convergence_eps);
  s.integer("max_iters", p.max_iters);
  s.finish();

  auto key = [&](const char* k) { return s.key_path(k); };
  require(p.group_size >= 1, key("group_size"), "must be >= 1");
  require(p.horizon_s > 0.0, key("horizon_s"), "must be > 0");
  require(p.num_slots >= 1, key("num_slots"), "must be >= 1");
  require(p.bandwidth_hz > 0.0, key("bandwidth_hz"), "must be > 0");
  require(p.altitude_m > 0.0, key("altitude_m"), "must be > 0");
  require(p.ref_gain > 0.0, key("ref_gain"), "must be > 0");
  require(p.noise_density_w_per_hz > 0.0, key("noise_w_per_hz"), "must be > 0");
  require(p.dl_power_w > 0.0, key("dl_power_w"), "must be > 0");
  require(p.ul_power_w > 0.0, key("ul_power_w"), "must be > 0");
  require(p.max_speed_mps > 0.0, key("max_speed_mps"), "must be > 0");
  require(p.propulsion.hover_power_w >= 0.0, key("hover_power_w"), "must be >= 0");
  require(p.propulsion.cubic_coeff > 0.0, key("propulsion_cubic"), "must be > 0");
  require(p.max_propulsion_w > p.propulsion.hover_power_w, key("max_propulsion_w"),
          "must exceed hover_power_w");
  require(p.sic_residual >= 0.0 && p.sic_residual <= 1.0, key("sic_residual"), "must lie in [0, 1]");
  require(p.convergence_eps >= 0.0, key("convergence_eps"), "must be >= 0");
  require(p.max_iters >= 1, key("max_iters"), "must be >= 1");
}

void check_mrr(double mrr, const std::string& field) {
  require(mrr >= 0.0 && mrr <= 1.0, field, "must lie in [0, 1], got " + std::to_string(mrr));
}

void read_users(Section& s, Experiment& e) {
  s.integer("count", e.num_users);
  s.number("area_side_m", e.area_side_m);
  s.number("mrr", e.mrr);
  if (s.has("seed")) {
    const json& v = s.raw("seed");
    if (!v.is_number_unsigned()) throw ConfigError(s.key_path("seed"), "must be a non-negative integer");
    e.seed = v.get<unsigned long long>();
  }
  if (s.has("grouping")) {
    const json& v = s.raw("grouping");
    const std::string rule = v.is_string() ? v.get<std::string>() : "";
    if (rule == "strong-weak") {
      e.grouping = GroupingRule::kStrongWeak;
    } else if (rule == "by-id") {
      e.grouping = GroupingRule::kById;
    } else {
      throw ConfigError(s.key_path("grouping"), "must be \"strong-weak\" or \"by-id\"");
    }
  }
  if (s.has("list")) {
    const json& list = s.raw("list");
    if (!list.is_array() || list.empty()) throw ConfigError(s.key_path("list"), "must be a non-empty array");
    std::vector<UserSpec> users;
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section u(list[i], s.key_path("list") + "[" + std::to_string(i) + "]");
      UserSpec spec;
      spec.id = static_cast<int>(i);
      spec.mrr = e.mrr;
      require(u.has("x_m") && u.has("y_m"), u.key_path("x_m"), "x_m and y_m are required");
      u.number("x_m", spec.position.x());
      u.number("y_m", spec.position.y());
      u.number("mrr", spec.mrr);
      u.integer("group", spec.group);
      u.number("theta", spec.theta);
      u.finish();
      check_mrr(spec.mrr, u.key_path("mrr"));
      if (u.has("theta")) require(spec.theta > 0.0 && spec.theta < 1.0, u.key_path("theta"), "must lie in (0, 1)");
      users.push_back(spec);
    }
    e.users = std::move(users);
    e.num_users = static_cast<int>(e.users->size());
  }
  s.finish();
  require(e.num_users >= 1, s.key_path("count"), "must be >= 1");
  require(e.area_side_m > 0.0, s.key_path("area_side_m"), "must be > 0");
  check_mrr(e.mrr, s.key_path("mrr"));
}

void read_solver(Section& s, SolverSettings& o) {
  s.number("tol_feas", o.tol_feas);
  s.number("tol_opt", o.tol_opt);
  s.integer("max_iters", o.max_iters);
  s.finish();
  require(o.tol_feas > 0.0, s.key_path("tol_feas"), "must be > 0");
  require(o.tol_opt > 0.0, s.key_path("tol_opt"), "must be > 0");
  require(o.max_iters >= 0, s.key_path("max_iters"), "must be >= 0");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The parser message already carries the line and column.
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig out;
  Section top(root, "");
  if (top.has("system")) {
    Section s(top.raw("system"), "system");
    read_system(s, out.experiment.params);
  }
  if (top.has("users")) {
    Section s(top.raw("users"), "users");
    read_users(s, out.experiment);
  }
  if (top.has("solver")) {
    Section s(top.raw("solver"), "solver");
    read_solver(s, out.solver);
  }
  top.finish();

  // Cross-field checks (cardinality, propulsion, groups) from scenario validation.
  try {
    (void)out.experiment.scenario();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(out.experiment.users ? "users.list" : "users", e.what());
  }
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  const SystemParams& p = c.experiment.params;
  json sys = {{"group_size", p.group_size},
              {"horizon_s", p.horizon_s},
              {"num_slots", p.num_slots},
              {"bandwidth_hz", p.bandwidth_hz},
              {"altitude_m", p.altitude_m},
              {"ref_gain", p.ref_gain},
              {"noise_w_per_hz", p.noise_density_w_per_hz},
              {"dl_power_w", p.dl_power_w},
              {"ul_power_w", p.ul_power_w},
              {"max_speed_mps", p.max_speed_mps},
              {"max_propulsion_w", p.max_propulsion_w},
              {"hover_power_w", p.propulsion.hover_power_w},
              {"propulsion_cubic", p.propulsion.cubic_coeff},
              {"sic_residual", p.sic_residual},
              {"convergence_eps", p.convergence_eps},
              {"max_iters", p.max_iters}};
  const Experiment& e = c.experiment;
  json users = {{"count", e.num_users},
                {"area_side_m", e.area_side_m},
                {"mrr", e.mrr},
                {"seed", e.seed},
                {"grouping", e.grouping == GroupingRule::kById ? "by-id" : "strong-weak"}};
  if (e.users) {
    json list = json::array();
    for (const UserSpec& u : *e.users) {
      json item = {{"x_m", u.position.x()}, {"y_m", u.position.y()}, {"mrr", u.mrr}};
      if (u.group >= 0) item["group"] = u.group;
      if (u.theta >= 0.0) item["theta"] = u.theta;
      list.push_back(item);
    }
    users["list"] = list;
  }
  json solver = {{"tol_feas", c.solver.tol_feas}, {"tol_opt", c.solver.tol_opt}, {"max_iters", c.solver.max_iters}};
  return json{{"system", sys}, {"users", users}, {"solver", solver}}.dump(2);
}

}  // namespace hmma
