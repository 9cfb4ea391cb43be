#pragma once

#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptychotomo/io.hpp"
#include "ptychotomo/solver.hpp"

namespace ptychotomo {

enum class SolverMethod { Apt, Apts, TwoStep, All };

inline const char* to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::Apt: return "apt";
    case SolverMethod::Apts: return "apts";
    case SolverMethod::TwoStep: return "twostep";
    case SolverMethod::All: return "all";
  }
  return "apt";
}

inline const char* to_string(FitMetric m) {
  return m == FitMetric::pAGM ? "pagm" : "pipm";
}

/**
 * Everything one experiment needs, as plain `section.key = value` text.
 * Defaults describe the reference acquisition: 128³ phantom, 64-pixel probe
 * of 14-pixel beam width, grid scan of stepsize 32, 12 angles, no noise.
 */
struct ExperimentConfig {
  int phantom_n = 128;
  double phantom_alpha = 0.5;
  int probe_size = 64;
  double probe_fwhm = 14.0;
  int scan_stepsize = 32;
  int angle_count = 12;
  std::optional<double> noise_eta;
  std::uint64_t noise_seed = 1;
  SolverMethod method = SolverMethod::Apt;
  SolverConfig solver;
  int baseline_iters = 100;
  int baseline_tomo_cg_iters = 10;
  std::string output_dir = "out";
  std::vector<int> output_slices;
  int metrics_t_window = 4;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] inline void cfg_fail(int line_no, const std::string& msg) {
  throw config_error("config line " + std::to_string(line_no) + ": " + msg);
}

inline double cfg_f64(const std::string& key, const std::string& value, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    cfg_fail(line_no, key + ": invalid number '" + value + "'");
  return v;
}

inline long long cfg_i64(const std::string& key, const std::string& value, int line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    cfg_fail(line_no, key + ": invalid integer '" + value + "'");
  return v;
}

inline bool cfg_bool(const std::string& key, const std::string& value, int line_no) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  cfg_fail(line_no, key + ": expected true/false, got '" + value + "'");
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw config_error("config: " + msg); };
  if (cfg.phantom_n < 8) fail("phantom.n must be >= 8");
  if (!(cfg.phantom_alpha > 0.0) || cfg.phantom_alpha > 3.14159265358979323846)
    fail("phantom.alpha must lie in (0, pi]");
  if (cfg.probe_size < 1 || cfg.probe_size > cfg.phantom_n)
    fail("probe.size must lie in [1, phantom.n]");
  if (!(cfg.probe_fwhm > 0.0) || !(cfg.probe_fwhm < cfg.probe_size))
    fail("probe.fwhm must lie in (0, probe.size)");
  if (cfg.scan_stepsize < 1) fail("scan.stepsize must be >= 1");
  if (cfg.angle_count < 1) fail("angles.count must be >= 1");
  if (cfg.noise_eta && !(*cfg.noise_eta > 0.0)) fail("noise.eta must be positive or none");
  if (cfg.baseline_iters < 1) fail("baseline.iters must be >= 1");
  if (cfg.baseline_tomo_cg_iters < 1) fail("baseline.tomo_cg_iters must be >= 1");
  if (cfg.output_dir.empty()) fail("output.dir must not be empty");
  for (int s : cfg.output_slices)
    if (s < 0 || s >= cfg.phantom_n) fail("output.slices entries must lie in [0, phantom.n)");
  if (cfg.metrics_t_window < 0) fail("metrics.t_window must be >= 0");
  validate_solver_config(cfg.solver);
}

/**
 * Parses `key = value` lines with `#` comments and dotted section prefixes.
 * Unknown or duplicate keys are rejected.  The regularization weight may be
 * given either absolutely (solver.lambda) or as solver.lambda_rel, a fraction
 * of r1; by default lambda = 0.1 * r1.  All defaults are materialized, so the
 * returned config echoes back as a complete, self-contained document.
 */
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::optional<double> lambda_abs, lambda_rel;
  bool slices_set = false;
  std::map<std::string, int> seen;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string raw = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string ln = detail::trim(raw);
    if (ln.empty()) continue;

    const std::size_t eq = ln.find('=');
    if (eq == std::string::npos) detail::cfg_fail(line_no, "expected 'key = value', got '" + ln + "'");
    const std::string key = detail::trim(ln.substr(0, eq));
    const std::string value = detail::trim(ln.substr(eq + 1));
    if (key.empty()) detail::cfg_fail(line_no, "empty key");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      detail::cfg_fail(line_no, "duplicate key '" + key + "' (first set on line " +
                                    std::to_string(it->second) + ")");

    if (key == "phantom.n") {
      cfg.phantom_n = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "phantom.alpha") {
      cfg.phantom_alpha = detail::cfg_f64(key, value, line_no);
    } else if (key == "probe.size") {
      cfg.probe_size = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "probe.fwhm") {
      cfg.probe_fwhm = detail::cfg_f64(key, value, line_no);
    } else if (key == "scan.stepsize") {
      cfg.scan_stepsize = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "angles.count") {
      cfg.angle_count = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "noise.eta") {
      if (value == "none")
        cfg.noise_eta.reset();
      else
        cfg.noise_eta = detail::cfg_f64(key, value, line_no);
    } else if (key == "noise.seed") {
      cfg.noise_seed = static_cast<std::uint64_t>(detail::cfg_i64(key, value, line_no));
    } else if (key == "solver.method") {
      if (value == "apt")
        cfg.method = SolverMethod::Apt;
      else if (value == "apts")
        cfg.method = SolverMethod::Apts;
      else if (value == "twostep")
        cfg.method = SolverMethod::TwoStep;
      else if (value == "all")
        cfg.method = SolverMethod::All;
      else
        detail::cfg_fail(line_no, "solver.method: expected apt|apts|twostep|all, got '" + value + "'");
    } else if (key == "solver.metric") {
      if (value == "pagm")
        cfg.solver.metric = FitMetric::pAGM;
      else if (value == "pipm")
        cfg.solver.metric = FitMetric::pIPM;
      else
        detail::cfg_fail(line_no, "solver.metric: expected pagm|pipm, got '" + value + "'");
    } else if (key == "solver.r1") {
      cfg.solver.r1 = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.r2") {
      cfg.solver.r2 = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.lambda") {
      lambda_abs = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.lambda_rel") {
      lambda_rel = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.cg_iters") {
      cfg.solver.cg_iters = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "solver.cg_tol") {
      cfg.solver.cg_tol = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.max_outer") {
      cfg.solver.max_outer = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "solver.stop_tol") {
      cfg.solver.stop_tol = detail::cfg_f64(key, value, line_no);
    } else if (key == "solver.blind_probe") {
      cfg.solver.blind_probe = detail::cfg_bool(key, value, line_no);
    } else if (key == "baseline.iters") {
      cfg.baseline_iters = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "baseline.tomo_cg_iters") {
      cfg.baseline_tomo_cg_iters = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else if (key == "output.dir") {
      if (value.empty()) detail::cfg_fail(line_no, "output.dir must not be empty");
      cfg.output_dir = value;
    } else if (key == "output.slices") {
      slices_set = true;
      cfg.output_slices.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string item = detail::trim(
            value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.empty()) detail::cfg_fail(line_no, "output.slices: empty entry");
        cfg.output_slices.push_back(static_cast<int>(detail::cfg_i64(key, item, line_no)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    } else if (key == "metrics.t_window") {
      cfg.metrics_t_window = static_cast<int>(detail::cfg_i64(key, value, line_no));
    } else {
      detail::cfg_fail(line_no, "unknown key '" + key + "'");
    }
  }

  if (lambda_abs && lambda_rel)
    throw config_error("config: solver.lambda and solver.lambda_rel are mutually exclusive");
  if (lambda_abs)
    cfg.solver.lambda = *lambda_abs;
  else
    cfg.solver.lambda = lambda_rel.value_or(0.1) * cfg.solver.r1;
  if (!slices_set) cfg.output_slices = {cfg.phantom_n / 2};

  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config_text(detail::read_file_bytes(path));
}

/// Canonical echo with every default materialized; parses back to itself.
inline std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::string out;
  out += "phantom.n = " + std::to_string(cfg.phantom_n) + '\n';
  out += "phantom.alpha = " + format_double(cfg.phantom_alpha) + '\n';
  out += "probe.size = " + std::to_string(cfg.probe_size) + '\n';
  out += "probe.fwhm = " + format_double(cfg.probe_fwhm) + '\n';
  out += "scan.stepsize = " + std::to_string(cfg.scan_stepsize) + '\n';
  out += "angles.count = " + std::to_string(cfg.angle_count) + '\n';
  out += "noise.eta = " + (cfg.noise_eta ? format_double(*cfg.noise_eta) : std::string("none")) + '\n';
  out += "noise.seed = " + std::to_string(cfg.noise_seed) + '\n';
  out += "solver.method = " + std::string(to_string(cfg.method)) + '\n';
  out += "solver.metric = " + std::string(to_string(cfg.solver.metric)) + '\n';
  out += "solver.r1 = " + format_double(cfg.solver.r1) + '\n';
  out += "solver.r2 = " + format_double(cfg.solver.r2) + '\n';
  out += "solver.lambda = " + format_double(cfg.solver.lambda) + '\n';
  out += "solver.cg_iters = " + std::to_string(cfg.solver.cg_iters) + '\n';
  out += "solver.cg_tol = " + format_double(cfg.solver.cg_tol) + '\n';
  out += "solver.max_outer = " + std::to_string(cfg.solver.max_outer) + '\n';
  out += "solver.stop_tol = " + format_double(cfg.solver.stop_tol) + '\n';
  out += std::string("solver.blind_probe = ") + (cfg.solver.blind_probe ? "true" : "false") + '\n';
  out += "baseline.iters = " + std::to_string(cfg.baseline_iters) + '\n';
  out += "baseline.tomo_cg_iters = " + std::to_string(cfg.baseline_tomo_cg_iters) + '\n';
  out += "output.dir = " + cfg.output_dir + '\n';
  out += "output.slices = ";
  for (std::size_t i = 0; i < cfg.output_slices.size(); ++i)
    out += (i ? "," : "") + std::to_string(cfg.output_slices[i]);
  out += '\n';
  out += "metrics.t_window = " + std::to_string(cfg.metrics_t_window) + '\n';
  return out;
}

}  // namespace ptychotomo
