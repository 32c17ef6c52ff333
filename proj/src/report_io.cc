#include "hmma/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "hmma/errors.hpp"
#include "json.hpp"

namespace hmma {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

std::ofstream open_csv(const fs::path& file, const std::string& id) {
  std::ofstream out = open_out(file);
  out << "# manifest_id=" << id << '\n';
  return out;
}

std::string num(double x) { return format_number(x); }

const char* restriction_name(Restriction r) {
  switch (r) {
    case Restriction::kNone: return "hybrid";
    case Restriction::kNomaOnly: return "noma";
    case Restriction::kOmaOnly: return "oma";
  }
  return "?";
}

}  // namespace

std::string RunManifest::id() const {
  std::ostringstream ss;
  ss << command << '\n' << config_path << '\n' << config_json << '\n' << seed << '\n' << axis << '\n';
  for (const std::string& s : schemes) ss << s << ',';
  ss << '\n';
  for (double v : values) ss << format_number(v) << ',';
  ss << '\n' << tool_version;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(ss.str())));
  return buf;
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  fs::create_directories(dir);
  nlohmann::ordered_json j;
  j["manifest_id"] = m.id();
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["schemes"] = m.schemes;
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  if (!m.axis.empty()) {
    j["axis"] = m.axis;
    j["values"] = m.values;
  }
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp;
  j["config"] = nlohmann::ordered_json::parse(m.config_json);
  open_out(dir / "manifest.json") << j.dump(2) << '\n';
}

void write_report(const fs::path& dir, const std::string& id, const Scenario& s, const SolveReport& r) {
  fs::create_directories(dir);
  const SystemParams& p = s.params();
  const Metrics& m = r.metrics;
  {
    std::ofstream out = open_out(dir / "summary.txt");
    out << "manifest_id = " << id << '\n'
        << "scheme = " << to_string(r.scheme) << '\n'
        << "users = " << s.num_users() << '\n'
        << "slots = " << s.num_slots() << '\n'
        << "sic_residual = " << num(p.sic_residual) << '\n'
        << "iterations = " << r.eta_trace.size() << '\n'
        << "converged = " << (r.converged ? "true" : "false") << '\n'
        << "winning_start = " << restriction_name(r.start) << '\n'
        << "eta_bps = " << num(m.eta) << '\n'
        << "avg_dl_bps = " << num(m.avg_dl_bps) << '\n'
        << "avg_ul_bps = " << num(m.avg_ul_bps) << '\n'
        << "jain = " << num(m.jain) << '\n'
        << "fairness = " << num(m.fairness) << '\n'
        << "energy_efficiency_bit_per_j = " << num(m.energy_efficiency) << '\n'
        << "throughput_bits = " << num(m.throughput_bits) << '\n'
        << "propulsion_energy_j = " << num(m.propulsion_energy_j) << '\n'
        << "oma_bandwidth_share = " << num(m.oma_bandwidth_share) << '\n'
        << "oma_rate_share = " << num(m.oma_rate_share) << '\n'
        << "feasibility_worst = " << num(r.feasibility.worst()) << '\n';
  }
  {
    std::ofstream out = open_csv(dir / "eta_trace.csv", id);
    out << "iteration,eta_bps,eta_before_trajectory_bps,trajectory_moved,incumbent_retained,start,trust_radius_m\n";
    for (const IterationRecord& rec : r.iterations) {
      out << rec.iteration << ',' << num(rec.eta) << ',' << num(rec.eta_allocation) << ','
          << int(rec.trajectory_moved) << ',' << int(rec.incumbent_retained) << ','
          << restriction_name(rec.start) << ',' << num(rec.trust_radius_m) << '\n';
    }
  }
  {
    std::ofstream out = open_csv(dir / "trajectory.csv", id);
    out << "slot,x_m,y_m,speed_mps,propulsion_w\n";
    const double dt = p.slot_duration_s();
    for (int n = 0; n < r.trajectory.num_slots(); ++n) {
      const double v = r.trajectory.displacement(n) / dt;
      out << n << ',' << num(r.trajectory[n].x()) << ',' << num(r.trajectory[n].y()) << ',' << num(v) << ','
          << num(propulsion_power(p, v)) << '\n';
    }
  }
  {
    std::ofstream out = open_csv(dir / "allocation.csv", id);
    out << "slot,user,group,dl_noma_group_hz,dl_oma_hz,dl_oe_hz,ul_noma_group_hz,ul_oma_hz,"
           "dl_noma_w,dl_oma_w,dl_oe_w,ul_noma_w,ul_oma_w,dl_rate_bps,ul_rate_bps\n";
    const BandwidthPlan& b = r.bandwidth;
    const PowerPlan& w = r.power;
    const RateTable& rt = r.rates;
    for (int n = 0; n < s.num_slots(); ++n) {
      for (int k = 0; k < s.num_users(); ++k) {
        const int g = s.group_of(k);
        out << n << ',' << k << ',' << g << ',' << num(b.dl_noma(g, n)) << ',' << num(b.dl_oma(k, n)) << ','
            << num(b.dl_oe(k, n)) << ',' << num(b.ul_noma(g, n)) << ',' << num(b.ul_oma(k, n)) << ','
            << num(w.dl_noma(k, n)) << ',' << num(w.dl_oma(k, n)) << ',' << num(w.dl_oe(k, n)) << ','
            << num(w.ul_noma(k, n)) << ',' << num(w.ul_oma(k, n)) << ',' << num(rt.dl_total(k, n)) << ','
            << num(rt.ul_totals()(k, n)) << '\n';
      }
    }
  }
  {
    std::ofstream out = open_csv(dir / "users.csv", id);
    out << "user,x_m,y_m,group,theta,mrr\n";
    for (int k = 0; k < s.num_users(); ++k) {
      const UserSpec& u = s.user(k);
      out << k << ',' << num(u.position.x()) << ',' << num(u.position.y()) << ',' << u.group << ','
          << num(u.theta) << ',' << num(u.mrr) << '\n';
    }
  }
}

void write_comparison(const fs::path& file, const std::string& id, const Scenario& s,
                      const std::vector<SolveReport>& reports) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  double alpha = 0.0;
  for (const UserSpec& u : s.users()) alpha = std::max(alpha, u.mrr);
  std::ofstream out = open_csv(file, id);
  out << "scheme,alpha,eta_bps,jain,fairness,energy_efficiency_bit_per_j,avg_dl_bps,avg_ul_bps,"
         "oma_bandwidth_share,oma_rate_share,iterations\n";
  for (const SolveReport& r : reports) {
    const Metrics& m = r.metrics;
    out << to_string(r.scheme) << ',' << num(alpha) << ',' << num(m.eta) << ',' << num(m.jain) << ','
        << num(m.fairness) << ',' << num(m.energy_efficiency) << ',' << num(m.avg_dl_bps) << ','
        << num(m.avg_ul_bps) << ',' << num(m.oma_bandwidth_share) << ',' << num(m.oma_rate_share) << ','
        << r.eta_trace.size() << '\n';
  }
}

std::string axis_column(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kUsers: return "K_users";
    case SweepAxis::kMaxSpeed: return "smax_mps";
    case SweepAxis::kOmega: return "omega";
    case SweepAxis::kHorizon: return "T_s";
  }
  return "value";
}

void write_sweep(const fs::path& dir, const std::string& id, SweepAxis axis, const std::vector<double>& values,
                 const std::vector<Scheme>& schemes, const std::vector<SweepEntry>& entries) {
  fs::create_directories(dir);
  struct Column {
    const char* file;
    double (*get)(const SolveReport&);
  };
  const Column columns[] = {
      {"eta_bps", [](const SolveReport& r) { return r.metrics.eta; }},
      {"jain", [](const SolveReport& r) { return r.metrics.jain; }},
      {"fairness", [](const SolveReport& r) { return r.metrics.fairness; }},
      {"energy_efficiency_bit_per_j", [](const SolveReport& r) { return r.metrics.energy_efficiency; }},
      {"avg_dl_bps", [](const SolveReport& r) { return r.metrics.avg_dl_bps; }},
      {"avg_ul_bps", [](const SolveReport& r) { return r.metrics.avg_ul_bps; }},
      {"oma_bandwidth_share", [](const SolveReport& r) { return r.metrics.oma_bandwidth_share; }},
      {"oma_rate_share", [](const SolveReport& r) { return r.metrics.oma_rate_share; }},
      {"propulsion_energy_j", [](const SolveReport& r) { return r.metrics.propulsion_energy_j; }},
      {"iterations", [](const SolveReport& r) { return static_cast<double>(r.eta_trace.size()); }},
  };
  auto find = [&](double v, Scheme sc) -> const SweepEntry* {
    for (const SweepEntry& e : entries) {
      if (e.value == v && e.scheme == sc) return &e;
    }
    return nullptr;
  };
  for (const Column& c : columns) {
    std::ofstream out = open_csv(dir / (std::string("sweep_") + c.file + ".csv"), id);
    out << axis_column(axis);
    for (Scheme sc : schemes) out << ',' << to_string(sc) << '_' << c.file;
    out << '\n';
    for (double v : values) {
      out << num(v);
      for (Scheme sc : schemes) {
        const SweepEntry* e = find(v, sc);
        out << ',' << (e && e->report ? num(c.get(*e->report)) : "nan");
      }
      out << '\n';
    }
  }
  std::ofstream out = open_csv(dir / "sweep_status.csv", id);
  out << axis_column(axis) << ",scheme,status,error\n";
  for (const SweepEntry& e : entries) {
    std::string msg = e.error;
    for (char& ch : msg) {
      if (ch == '"') ch = '\'';
      if (ch == '\n') ch = ' ';
    }
    out << num(e.value) << ',' << to_string(e.scheme) << ',' << (e.report ? "ok" : "error") << ",\"" << msg
        << "\"\n";
  }
}

}  // namespace hmma
