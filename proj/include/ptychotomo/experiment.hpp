#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptychotomo/baseline.hpp"
#include "ptychotomo/config.hpp"
#include "ptychotomo/io.hpp"
#include "ptychotomo/metrics.hpp"
#include "ptychotomo/phantom.hpp"
#include "ptychotomo/solver.hpp"

namespace ptychotomo {

struct SolverArtifacts {
  std::string name;
  ComplexVolume u;
  ConvergenceRecord history;         // joint solvers only
  std::vector<AngleReport> reports;  // two-step only
  bool converged = false;
  int iterations = 0;
  double snr_db = 0.0;
  double r_factor = 0.0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  ComplexVolume truth;
  Probe probe;
  MeasurementSet data;
  std::vector<SolverArtifacts> solvers;
  std::optional<double> snr_intensity_db;
  std::filesystem::path dir;
};

inline RealImage volume_slice_mag(const ComplexVolume& u, int z) {
  detail::require(z >= 0 && z < u.n(), "slice index out of range");
  const int n = u.n();
  RealImage img(n, n);
  const cdouble* s = u.slice(z);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) img(y, x) = std::abs(s[x + static_cast<std::size_t>(n) * y]);
  return img;
}

inline RealImage volume_slice_phase(const ComplexVolume& u, int z) {
  detail::require(z >= 0 && z < u.n(), "slice index out of range");
  const int n = u.n();
  RealImage img(n, n);
  const cdouble* s = u.slice(z);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) img(y, x) = std::arg(s[x + static_cast<std::size_t>(n) * y]);
  return img;
}

namespace detail {

inline std::string slice_tag(int z) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", z);
  return buf;
}

inline void write_slice_images(const std::filesystem::path& dir, const std::string& prefix,
                               const ComplexVolume& u, const std::vector<int>& slices) {
  for (int z : slices) {
    const std::string tag = prefix + "_slice" + slice_tag(z);
    write_pgm16(dir / (tag + "_mag.pgm"), volume_slice_mag(u, z), dir / (tag + "_mag.txt"));
    write_pgm16(dir / (tag + "_phase.pgm"), volume_slice_phase(u, z), dir / (tag + "_phase.txt"));
  }
}

}  // namespace detail

/**
 * Builds phantom, probe, and scan from the config and simulates the full
 * measurement set, sampling Poisson counts when noise.eta is set.  When noisy,
 * also reports the intensity SNR of the counts against their means.
 */
inline MeasurementSet generate_measurements(const ExperimentConfig& cfg,
                                            const ComplexVolume& truth, const Probe& probe,
                                            std::optional<double>* snr_intensity_out = nullptr) {
  const ScanGeometry geom = make_scan_grid(cfg.phantom_n, cfg.probe_size, cfg.scan_stepsize);
  const AngleSet angles = make_angles(cfg.angle_count);
  MeasurementSet data = simulate_intensities(probe, truth, geom, angles);
  data.stepsize = cfg.scan_stepsize;
  data.seed = cfg.noise_seed;
  if (snr_intensity_out) snr_intensity_out->reset();
  if (cfg.noise_eta) {
    MeasurementSet noisy = add_poisson_noise(data, *cfg.noise_eta, cfg.noise_seed);
    if (snr_intensity_out) {
      MeasurementSet scaled = data;
      for (auto& f : scaled.frames)
        for (std::size_t i = 0; i < f.size(); ++i) f[i] *= *cfg.noise_eta;
      *snr_intensity_out = snr_intensity_db(noisy, scaled);
    }
    data = std::move(noisy);
  }
  return data;
}

namespace detail {

inline SolverArtifacts run_joint(const std::string& name, const MeasurementSet& data,
                                 const Probe& probe, const SolverConfig& scfg, bool simplified) {
  SolverArtifacts art;
  art.name = name;
  SolveResult res = simplified ? apts_run(data, probe, scfg) : apt_run(data, probe, scfg);
  art.u = std::move(res.u);
  art.history = std::move(res.history);
  art.converged = res.converged;
  art.iterations = static_cast<int>(art.history.rows.size());
  return art;
}

inline SolverArtifacts run_two_step(const MeasurementSet& data, const Probe& probe,
                                    const ExperimentConfig& cfg) {
  SolverArtifacts art;
  art.name = "twostep";
  TwoStepOptions opt;
  opt.ptycho.iters = cfg.baseline_iters;
  opt.ptycho.r2 = cfg.solver.r2;
  opt.ptycho.cg_iters = cfg.solver.cg_iters;
  opt.ptycho.cg_tol = cfg.solver.cg_tol;
  opt.ptycho.metric = cfg.solver.metric;
  opt.tomo_cg_iters = cfg.baseline_tomo_cg_iters;
  TwoStepResult res = two_step_run(data, probe, opt);
  art.u = std::move(res.u);
  art.reports = std::move(res.reports);
  art.converged = res.success;
  art.iterations = res.converged_angles;
  return art;
}

}  // namespace detail

/**
 * End-to-end experiment: simulate (or load) measurements, run the selected
 * solver(s), and write every artifact — resolved config, measurement archive,
 * reconstructed volumes, slice graymaps, convergence and per-angle CSVs, and
 * the metrics summary — into cfg.output_dir.  Byte-reproducible from
 * (config, seed) except for the wall-clock column of the convergence CSVs.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::optional<std::filesystem::path>& archive = {}) {
  validate_config(cfg);
  ExperimentResult result;
  result.cfg = cfg;
  result.dir = cfg.output_dir;
  std::filesystem::create_directories(result.dir);

  result.truth = shepp_logan_3d(cfg.phantom_n, cfg.phantom_alpha);
  result.probe = make_probe(cfg.probe_size, cfg.probe_fwhm);
  if (archive) {
    result.data = read_measurements(*archive);
    detail::require(result.data.geom.n == cfg.phantom_n &&
                        result.data.geom.window == cfg.probe_size,
                    "experiment: archive geometry does not match the config");
  } else {
    result.data = generate_measurements(cfg, result.truth, result.probe,
                                        &result.snr_intensity_db);
  }

  detail::write_file_bytes(result.dir / "config.txt", resolved_config_text(cfg));
  write_measurements(result.dir / "measurements.dat", result.data);
  write_volume(result.dir / "truth_volume.bin", result.truth);
  detail::write_slice_images(result.dir, "truth", result.truth, cfg.output_slices);

  const bool all = cfg.method == SolverMethod::All;
  if (all || cfg.method == SolverMethod::Apt)
    result.solvers.push_back(detail::run_joint("apt", result.data, result.probe, cfg.solver, false));
  if (all || cfg.method == SolverMethod::Apts)
    result.solvers.push_back(detail::run_joint("apts", result.data, result.probe, cfg.solver, true));
  if (all || cfg.method == SolverMethod::TwoStep)
    result.solvers.push_back(detail::run_two_step(result.data, result.probe, cfg));

  std::vector<MetricRow> metrics;
  for (auto& art : result.solvers) {
    const SnrResult snr = aligned_snr(art.u, result.truth, cfg.metrics_t_window);
    art.snr_db = snr.snr_db;
    art.r_factor = r_factor(art.u, result.probe, result.data);

    write_volume(result.dir / (art.name + "_volume.bin"), art.u);
    detail::write_slice_images(result.dir, art.name, art.u, cfg.output_slices);
    if (art.name == "twostep")
      detail::write_file_bytes(result.dir / "twostep_angles.csv", per_angle_csv(art.reports));
    else
      detail::write_file_bytes(result.dir / (art.name + "_convergence.csv"),
                               convergence_csv(art.history));

    metrics.push_back(db_metric_row(art.name + ".snr_db", art.snr_db));
    metrics.push_back({art.name + ".r_factor", art.r_factor, ""});
    metrics.push_back({art.name + ".converged", art.converged ? 1.0 : 0.0, ""});
    metrics.push_back({art.name + ".iterations", static_cast<double>(art.iterations), ""});
  }
  if (result.snr_intensity_db)
    metrics.push_back(db_metric_row("snr_intensity_db", *result.snr_intensity_db));
  detail::write_file_bytes(result.dir / "metrics.csv", metrics_csv(metrics));
  return result;
}

/** Simulation-only entry point: writes the resolved config and the archive. */
inline MeasurementSet simulate_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  const ComplexVolume truth = shepp_logan_3d(cfg.phantom_n, cfg.phantom_alpha);
  const Probe probe = make_probe(cfg.probe_size, cfg.probe_fwhm);
  std::optional<double> snr_int;
  MeasurementSet data = generate_measurements(cfg, truth, probe, &snr_int);
  detail::write_file_bytes(dir / "config.txt", resolved_config_text(cfg));
  write_measurements(dir / "measurements.dat", data);
  if (snr_int) {
    std::vector<MetricRow> rows{db_metric_row("snr_intensity_db", *snr_int)};
    detail::write_file_bytes(dir / "metrics.csv", metrics_csv(rows));
  }
  return data;
}

}  // namespace ptychotomo
