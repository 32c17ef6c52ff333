#include "hmma/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "hmma/config.hpp"
#include "hmma/errors.hpp"
#include "hmma/report_io.hpp"

namespace hmma {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSweepUsage =
    "usage: hmma sweep --axis alpha|K|smax|omega|T --values V1,V2,... (or START:STEP:STOP) "
    "[--scheme NAME]... [--config PATH] [--seed INT] [--out-dir PATH]";

struct Prepared {
  ExperimentConfig config;
  RunOptions run;
  RunManifest manifest;
};

double parse_double(const std::string& item) {
  double v = 0.0;
  const char* b = item.data();
  const char* e = b + item.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
    throw ConfigError("values", "cannot parse '" + item + "' as a number");
  }
  return v;
}

// Schemes in first-seen order; repeats are dropped with a warning.
std::vector<Scheme> unique_schemes(const std::vector<std::string>& names, std::ostream& err,
                                   std::vector<Scheme> fallback) {
  if (names.empty()) return fallback;
  std::vector<Scheme> out;
  for (const std::string& n : names) {
    const Scheme s = parse_scheme(n);
    if (std::find(out.begin(), out.end(), s) != out.end()) {
      err << "warning: scheme '" << n << "' listed more than once; running it once\n";
      continue;
    }
    out.push_back(s);
  }
  return out;
}

Prepared prepare(const CliOptions& o, const std::string& command) {
  Prepared p;
  p.config = o.config_path.empty() ? parse_config("{}") : load_config(o.config_path);
  if (o.seed) p.config.experiment.seed = *o.seed;
  if (o.tol_feas) {
    if (!(*o.tol_feas > 0.0)) throw ConfigError("tol-feas", "must be > 0");
    p.config.solver.tol_feas = *o.tol_feas;
  }
  if (o.tol_opt) {
    if (!(*o.tol_opt > 0.0)) throw ConfigError("tol-opt", "must be > 0");
    p.config.solver.tol_opt = *o.tol_opt;
  }
  p.run.solver = p.config.solver;
  p.manifest.command = command;
  p.manifest.config_path = o.config_path;
  p.manifest.config_json = dump_config(p.config);
  p.manifest.seed = p.config.experiment.seed;
  p.manifest.out_dir = o.out_dir;
  p.manifest.timestamp = utc_timestamp();
  return p;
}

// Maps library exceptions to exit codes with a one-line diagnostic.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverFailure& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

std::string fixed(double x, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

void print_table(std::ostream& out, const std::vector<SolveReport>& reports, double alpha) {
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %6s %14s %8s %8s %14s\n", "scheme", "alpha", "eta_bps", "jain",
                "J", "ee_bit_per_j");
  out << line;
  for (const SolveReport& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %6.3g %14.6g %8.4f %8.4f %14.6g\n", to_string(r.scheme).c_str(), alpha,
                  r.metrics.eta, r.metrics.jain, r.metrics.fairness, r.metrics.energy_efficiency);
    out << line;
  }
}

int check_feasible(const SolveReport& r, double tol, std::ostream& err) {
  if (r.feasibility.ok(tol)) return kExitOk;
  err << "error: " << to_string(r.scheme) << " final plans violate constraints by "
      << fixed(r.feasibility.worst()) << " (tolerance " << fixed(tol) << ")\n";
  return kExitSolver;
}

double max_alpha(const Scenario& s) {
  double a = 0.0;
  for (const UserSpec& u : s.users()) a = std::max(a, u.mrr);
  return a;
}

}  // namespace

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  if (text.find_first_not_of(" ,") == std::string::npos) return out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = text.find(':', start)) != std::string::npos; start = pos + 1) {
      parts.push_back(parse_double(text.substr(start, pos - start)));
    }
    parts.push_back(parse_double(text.substr(start)));
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
      throw ConfigError("values", "a range is START:STEP:STOP with STEP > 0 and STOP >= START");
    }
    const double count = std::floor((parts[2] - parts[0]) / parts[1] + 1e-9);
    if (count > 1e4) throw ConfigError("values", "range has too many points");
    for (int i = 0; i <= static_cast<int>(count); ++i) {
      // Snap to the step grid so 0:0.2:1 yields 0.6 rather than 0.6000000000000001.
      const double v = parts[0] + i * parts[1];
      out.push_back(std::stod(fixed(v, "%.12g")));
    }
    return out;
  }
  std::size_t start = 0;
  for (std::size_t pos; (pos = text.find(',', start)) != std::string::npos; start = pos + 1) {
    out.push_back(parse_double(text.substr(start, pos - start)));
  }
  out.push_back(parse_double(text.substr(start)));
  return out;
}

int cmd_run(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.schemes.size() > 1) throw ConfigError("scheme", "run takes one scheme; use compare for several");
    const Scheme scheme = o.schemes.empty() ? Scheme::kHmma : parse_scheme(o.schemes.front());
    Prepared p = prepare(o, "run");
    p.manifest.schemes = {to_string(scheme)};
    const Scenario s = p.config.experiment.scenario();
    const std::string id = p.manifest.id();
    write_manifest(o.out_dir, p.manifest);

    SolveReport r = run_scheme(s, scheme, p.run);
    normalize_fairness({&r});
    write_report(o.out_dir, id, s, r);
    out << to_string(scheme) << ": eta " << fixed(r.metrics.eta) << " bit/s after " << r.eta_trace.size()
        << " iterations (" << (r.converged ? "converged" : "iteration cap") << ", " << fixed(r.wall_seconds, "%.2f")
        << " s), outputs in " << o.out_dir << '\n';
    return check_feasible(r, p.config.solver.tol_feas, err);
  });
}

int cmd_compare(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::vector<Scheme> schemes =
        unique_schemes(o.schemes, err, {Scheme::kHmma, Scheme::kNomaOnly, Scheme::kOmaOnly});
    Prepared p = prepare(o, "compare");
    for (Scheme sc : schemes) p.manifest.schemes.push_back(to_string(sc));
    const Scenario s = p.config.experiment.scenario();
    const std::string id = p.manifest.id();
    write_manifest(o.out_dir, p.manifest);

    std::vector<SolveReport> reports;
    for (Scheme sc : schemes) reports.push_back(run_scheme(s, sc, p.run));
    std::vector<SolveReport*> ptrs;
    for (SolveReport& r : reports) ptrs.push_back(&r);
    normalize_fairness(ptrs);

    int code = kExitOk;
    for (const SolveReport& r : reports) {
      write_report(fs::path(o.out_dir) / to_string(r.scheme), id, s, r);
      code = std::max(code, check_feasible(r, p.config.solver.tol_feas, err));
    }
    write_comparison(fs::path(o.out_dir) / "comparison.csv", id, s, reports);
    print_table(out, reports, max_alpha(s));
    return code;
  });
}

int cmd_sweep(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<double> values;
    try {
      values = parse_values(o.values);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n' << kSweepUsage << '\n';
      return static_cast<int>(kExitUsage);
    }
    if (o.axis.empty() || values.empty()) {
      err << "error: sweep needs an axis and at least one value\n" << kSweepUsage << '\n';
      return static_cast<int>(kExitUsage);
    }
    const SweepAxis axis = parse_axis(o.axis);
    const std::vector<Scheme> schemes =
        unique_schemes(o.schemes, err, {Scheme::kHmma, Scheme::kEhmma, Scheme::kNomaOnly, Scheme::kOmaOnly});
    Prepared p = prepare(o, "sweep");
    for (Scheme sc : schemes) p.manifest.schemes.push_back(to_string(sc));
    p.manifest.axis = to_string(axis);
    p.manifest.values = values;
    const std::string id = p.manifest.id();
    write_manifest(o.out_dir, p.manifest);

    const std::vector<SweepEntry> entries = sweep(p.config.experiment, axis, values, schemes, p.run);
    write_sweep(o.out_dir, id, axis, values, schemes, entries);

    int failures = 0;
    for (const SweepEntry& e : entries) {
      if (!e.report) {
        ++failures;
        err << "warning: " << to_string(axis) << "=" << format_number(e.value) << " " << to_string(e.scheme)
            << " failed: " << e.error << '\n';
      } else if (!e.report->feasibility.ok(p.config.solver.tol_feas)) {
        ++failures;
        err << "warning: " << to_string(axis) << "=" << format_number(e.value) << " " << to_string(e.scheme)
            << " final plans violate constraints by " << fixed(e.report->feasibility.worst()) << '\n';
      }
    }
    out << "sweep over " << to_string(axis) << ": " << values.size() << " values x " << schemes.size()
        << " schemes, " << failures << " failed, outputs in " << o.out_dir << '\n';
    return failures ? static_cast<int>(kExitSolver) : static_cast<int>(kExitOk);
  });
}

}  // namespace hmma
