#pragma once

#include <chrono>
#include <cmath>
#include <utility>
#include <vector>

#include "ptychotomo/errors.hpp"
#include "ptychotomo/forward_model.hpp"
#include "ptychotomo/metrics.hpp"
#include "ptychotomo/operators.hpp"

namespace ptychotomo {

/** Amplitude (Gaussian) or intensity (Poisson) fit metric. */
enum class FitMetric { pAGM, pIPM };

struct SolverConfig {
  double r1 = 0.1;      // gradient-splitting penalty; 0 disables the TV branch
  double r2 = 1.0;      // measurement-splitting penalty
  double lambda = 0.01;  // TV weight
  FitMetric metric = FitMetric::pAGM;
  int cg_iters = 10;
  double cg_tol = 1e-6;
  int max_outer = 100;
  double stop_tol = 1e-4;
  bool blind_probe = false;
};

inline void validate_solver_config(const SolverConfig& c) {
  if (!(c.r2 > 0.0)) throw config_error("solver: r2 must be positive");
  if (c.r1 < 0.0) throw config_error("solver: r1 must be >= 0");
  if (c.lambda < 0.0) throw config_error("solver: lambda must be >= 0");
  if (c.lambda > 0.0 && !(c.r1 > 0.0))
    throw config_error("solver: lambda > 0 requires r1 > 0");
  if (c.cg_iters < 1) throw config_error("solver: cg_iters must be >= 1");
  if (!(c.cg_tol > 0.0)) throw config_error("solver: cg_tol must be positive");
  if (c.max_outer < 1) throw config_error("solver: max_outer must be >= 1");
  if (c.stop_tol < 0.0) throw config_error("solver: stop_tol must be >= 0");
}

struct ConvergenceRow {
  int k = 0;
  double rel_change = 0.0;
  double r_factor = 0.0;
  double objective = 0.0;
  double wall_time_s = 0.0;
  bool cg_breakdown = false;
  int probe_floor_pixels = 0;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
};

/** Iterates of the split problem; frame vectors are angle-major like the data. */
struct SolverState {
  ComplexVolume u;
  std::vector<ComplexImage> z, lambda2;
  GradientField p, lambda1;  // allocated only when r1 > 0
  Probe probe;
  int k = 0;
};

struct SolveResult {
  ComplexVolume u;
  Probe probe;
  ConvergenceRecord history;
  bool converged = false;  // stop_tol reached before the iteration cap
};

/** Amplitude-metric modulus projection: closed-form prox of 1/2 || |z| - sqrt(f) ||^2. */
inline void prox_z_pagm_inplace(ComplexImage& zt, const Grid2<double>& f, double r2) {
  detail::require(zt.rows() == f.rows() && zt.cols() == f.cols(), "prox: shape mismatch");
  for (std::size_t i = 0; i < zt.size(); ++i) {
    const double mag = std::abs(zt[i]);
    const double rho = (std::sqrt(f[i]) + r2 * mag) / (1.0 + r2);
    zt[i] = (mag == 0.0) ? cdouble(rho) : zt[i] * (rho / mag);
  }
}

inline ComplexImage prox_z_pagm(const ComplexImage& zt, const Grid2<double>& f, double r2) {
  ComplexImage z = zt;
  prox_z_pagm_inplace(z, f, r2);
  return z;
}

/** Intensity-metric prox: positive root of (1+r2) rho^2 - r2 |z| rho - f = 0. */
inline void prox_z_pipm_inplace(ComplexImage& zt, const Grid2<double>& f, double r2) {
  detail::require(zt.rows() == f.rows() && zt.cols() == f.cols(), "prox: shape mismatch");
  for (std::size_t i = 0; i < zt.size(); ++i) {
    const double mag = std::abs(zt[i]);
    const double disc = r2 * r2 * mag * mag + 4.0 * (1.0 + r2) * f[i];
    const double rho = (r2 * mag + std::sqrt(disc)) / (2.0 * (1.0 + r2));
    zt[i] = (mag == 0.0) ? cdouble(rho) : zt[i] * (rho / mag);
  }
}

inline ComplexImage prox_z_pipm(const ComplexImage& zt, const Grid2<double>& f, double r2) {
  ComplexImage z = zt;
  prox_z_pipm_inplace(z, f, r2);
  return z;
}

inline void prox_z_inplace(ComplexImage& zt, const Grid2<double>& f, double r2,
                           FitMetric metric) {
  if (metric == FitMetric::pAGM)
    prox_z_pagm_inplace(zt, f, r2);
  else
    prox_z_pipm_inplace(zt, f, r2);
}

/** Isotropic soft threshold on the three-channel magnitude. */
inline GradientField shrink_p(const GradientField& pt, double tau) {
  detail::require(tau >= 0.0, "shrink: threshold must be >= 0");
  GradientField out = pt;
  if (tau == 0.0) return out;
  const std::size_t count = out.x.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    const double mag =
        std::sqrt(std::norm(pt.x[i]) + std::norm(pt.y[i]) + std::norm(pt.z[i]));
    const double scale = (mag > tau) ? 1.0 - tau / mag : 0.0;
    out.x[i] = pt.x[i] * scale;
    out.y[i] = pt.y[i] * scale;
    out.z[i] = pt.z[i] * scale;
  }
  return out;
}

/** Total variation value sum_t sqrt(sum_axes |g|^2). */
inline double tv_value(const GradientField& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i)
    s += std::sqrt(std::norm(g.x[i]) + std::norm(g.y[i]) + std::norm(g.z[i]));
  return s;
}

/** Data-fit part of the objective evaluated on cached far-field frames. */
inline double data_objective(const std::vector<ComplexImage>& d, const MeasurementSet& data,
                             FitMetric metric) {
  detail::require(static_cast<int>(d.size()) == data.frame_count(),
                  "objective: frame count mismatch");
  double s = 0.0;
  for (int i = 0; i < data.frame_count(); ++i) {
    const auto& di = d[i];
    const auto& fi = data.frames[i];
    detail::require(di.rows() == fi.rows() && di.cols() == fi.cols(),
                    "objective: frame shape mismatch");
    for (std::size_t px = 0; px < di.size(); ++px) {
      const double g = std::norm(di[px]);
      if (metric == FitMetric::pAGM) {
        const double diff = std::sqrt(g) - std::sqrt(fi[px]);
        s += 0.5 * diff * diff;
      } else {
        // intensity floor keeps the log finite; reporting only
        s += 0.5 * (g - fi[px] * std::log(std::max(g, 1e-12)));
      }
    }
  }
  return s;
}

/** Far-field frames D(omega, u) over the whole scan, angle-major. */
inline void forward_frames_into(const Probe& omega, const ComplexVolume& u,
                                const ScanGeometry& geom,
                                const std::vector<RotationStencil>& stencils,
                                std::vector<ComplexImage>& out) {
  const int J = static_cast<int>(geom.positions.size());
  const int K = static_cast<int>(stencils.size());
  out.resize(static_cast<std::size_t>(J) * K);
  ComplexImage plane;
  for (int t = 0; t < K; ++t) {
    rotate_project_into(u, stencils[t], plane);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < J; ++j)
      out[static_cast<std::size_t>(t) * J + j] =
          detail::d_from_plane(omega, plane, geom.positions[j], geom.window);
  }
}

inline std::vector<ComplexImage> forward_frames(const Probe& omega, const ComplexVolume& u,
                                                const ScanGeometry& geom,
                                                const AngleSet& angles) {
  std::vector<RotationStencil> st;
  st.reserve(angles.angles.size());
  for (double a : angles.angles) st.push_back(make_rotation_stencil(geom.n, a));
  std::vector<ComplexImage> out;
  forward_frames_into(omega, u, geom, st, out);
  return out;
}

/** Full objective of the variational model at u (monitoring only). */
inline double objective_value(const ComplexVolume& u, const Probe& omega,
                              const MeasurementSet& data, const SolverConfig& cfg) {
  const double fit =
      data_objective(forward_frames(omega, u, data.geom, data.angles), data, cfg.metric);
  if (cfg.lambda == 0.0) return fit;
  return fit + cfg.lambda * tv_value(gradient3(u));
}

/**
 * Normal-operator application
 *   L u = -r1 * div(grad u) + r2 * sum_t (Q R_t)^T ( W o (Q R_t u) )
 * with W the per-pixel illumination weight.
 */
inline void apply_normal_into(const ComplexVolume& u, const RealImage& W,
                              const std::vector<RotationStencil>& stencils, double r1, double r2,
                              ComplexVolume& out, GradientField& gscratch, ComplexImage& proj) {
  const int n = u.n();
  if (out.n() != n) out = ComplexVolume(n);
  if (r1 > 0.0) {
    gradient3_into(u, gscratch);
    divergence3_into(gscratch, out);
    const double neg = -r1;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.size()); ++i) out[i] *= neg;
  } else {
    out.fill(0.0);
  }
  for (const auto& st : stencils) {
    rotate_project_into(u, st, proj);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(proj.size()); ++i)
      proj[i] *= r2 * W[i];
    backproject_rotate_adjoint_add(proj, st, out);
  }
}

inline ComplexVolume apply_L(const ComplexVolume& u, const RealImage& W, const AngleSet& angles,
                             double r1, double r2) {
  detail::require(W.rows() == u.n() && W.cols() == u.n(), "apply_L: weight shape mismatch");
  std::vector<RotationStencil> st;
  for (double a : angles.angles) st.push_back(make_rotation_stencil(u.n(), a));
  ComplexVolume out;
  GradientField g;
  ComplexImage proj;
  apply_normal_into(u, W, st, r1, r2, out, g, proj);
  return out;
}

struct CgOutcome {
  int iterations = 0;
  double rel_residual = 0.0;
  bool breakdown = false;
};

/**
 * Conjugate gradients for a Hermitian positive (semi)definite operator,
 * warm-started from x.  Stops at max_iters or relative residual <= tol;
 * a nonpositive curvature direction flags breakdown and keeps the iterate.
 */
template <typename Vec, typename Op>
CgOutcome cg_solve(Op&& apply, const Vec& b, Vec& x, int max_iters, double tol) {
  detail::require(max_iters >= 0, "cg: negative iteration budget");
  const double bnorm = norm2(b);
  CgOutcome res;
  if (bnorm == 0.0) {
    x.fill(0.0);
    return res;
  }
  Vec q = x, r = x, d = x;  // shape carriers
  apply(x, q);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - q[i];
  double rz = norm2sq(r);
  double rz_prev = 0.0;
  while (res.iterations < max_iters && std::sqrt(rz) > tol * bnorm) {
    if (res.iterations == 0) {
      d = r;
    } else {
      const double beta = rz / rz_prev;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = r[i] + beta * d[i];
    }
    apply(d, q);
    const double dq = std::real(cdot(d, q));
    if (!(dq > 0.0) || !std::isfinite(dq)) {
      res.breakdown = true;
      break;
    }
    const double alpha = rz / dq;
    axpy(cdouble(alpha), d, x);
    axpy(cdouble(-alpha), q, r);
    rz_prev = rz;
    rz = norm2sq(r);
    ++res.iterations;
  }
  res.rel_residual = std::sqrt(rz) / bnorm;
  return res;
}

struct ProbeUpdate {
  Probe probe;
  int floored_pixels = 0;
  bool degenerate = false;  // zero denominator everywhere: previous probe kept
};

/**
 * Least-squares probe refresh
 *   omega <- sum_{j,t} conj(T u) o F*(z + Lambda2) / sum_{j,t} |T u|^2
 * with per-pixel denominators floored at 1e-12 of the maximum.
 */
inline ProbeUpdate update_probe(const ComplexVolume& u,
                                const std::vector<ComplexImage>& z_plus_l2,
                                const MeasurementSet& data, const Probe& previous) {
  const int J = data.window_count();
  const int m = data.geom.window;
  detail::require(static_cast<int>(z_plus_l2.size()) == data.frame_count(),
                  "update_probe: frame count mismatch");
  ComplexImage num(m, m);
  Grid2<double> den(m, m);
  for (int t = 0; t < data.angles.count(); ++t) {
    const ComplexImage plane = project_rotated(u, data.angles.angles[t]);
    for (int j = 0; j < J; ++j) {
      const auto& pos = data.geom.positions[j];
      const ComplexImage tu = extract_window(plane, pos[0], pos[1], m);
      const ComplexImage fw = idft2_unitary(z_plus_l2[static_cast<std::size_t>(t) * J + j]);
      for (std::size_t i = 0; i < tu.size(); ++i) {
        num[i] += std::conj(tu[i]) * fw[i];
        den[i] += std::norm(tu[i]);
      }
    }
  }
  double den_max = 0.0;
  for (std::size_t i = 0; i < den.size(); ++i) den_max = std::max(den_max, den[i]);
  ProbeUpdate out;
  if (den_max == 0.0) {
    out.probe = previous;
    out.floored_pixels = static_cast<int>(den.size());
    out.degenerate = true;
    return out;
  }
  const double floor = 1e-12 * den_max;
  out.probe = ComplexImage(m, m);
  for (std::size_t i = 0; i < den.size(); ++i) {
    if (den[i] < floor) ++out.floored_pixels;
    out.probe[i] = num[i] / std::max(den[i], floor);
  }
  return out;
}

/**
 * One joint-reconstruction ADMM instance: caches the per-angle rotation
 * stencils, the illumination weight and the conjugate-gradient workspace.
 */
class AptEngine {
 public:
  AptEngine(const MeasurementSet& data, const SolverConfig& cfg, SolverState init)
      : data_(data), cfg_(cfg), st_(std::move(init)) {
    validate_solver_config(cfg_);
    validate_measurements(data_);
    detail::require(st_.probe.rows() == data.geom.window &&
                        st_.probe.cols() == data.geom.window,
                    "solver: probe shape must match the scan window");
    detail::require(st_.u.n() == data.geom.n, "solver: state volume size mismatch");
    detail::require(static_cast<int>(st_.z.size()) == data.frame_count() &&
                        static_cast<int>(st_.lambda2.size()) == data.frame_count(),
                    "solver: state frame vectors must match the measurement count");
    if (cfg_.r1 > 0.0)
      detail::require(st_.p.n() == data.geom.n && st_.lambda1.n() == data.geom.n,
                      "solver: r1 > 0 requires allocated gradient splitting state");
    for (double a : data_.angles.angles)
      stencils_.push_back(make_rotation_stencil(data_.geom.n, a));
    refresh_weight();
  }

  static SolverState make_initial_state(const MeasurementSet& data, const Probe& probe,
                                        const SolverConfig& cfg) {
    SolverState st;
    const int n = data.geom.n;
    st.u = ComplexVolume(n, cdouble(1.0));
    st.probe = probe;
    std::vector<RotationStencil> stencils;
    for (double a : data.angles.angles)
      stencils.push_back(make_rotation_stencil(n, a));
    forward_frames_into(probe, st.u, data.geom, stencils, st.z);
    st.lambda2.assign(st.z.size(), ComplexImage(data.geom.window, data.geom.window));
    if (cfg.r1 > 0.0) {
      st.p = GradientField(n);
      st.lambda1 = GradientField(n);
    }
    return st;
  }

  const SolverState& state() const { return st_; }
  SolverState take_state() { return std::move(st_); }

  ComplexVolume build_rhs() const {
    const int n = data_.geom.n;
    const int J = data_.window_count();
    ComplexVolume b(n);
    if (cfg_.r1 > 0.0) {
      GradientField sum = st_.p;
      axpy(cdouble(1.0), st_.lambda1, sum);
      divergence3_into(sum, b);
      const double neg = -cfg_.r1;
      for (std::size_t i = 0; i < b.size(); ++i) b[i] *= neg;
    }
    ComplexImage acc(n, n);
    std::vector<ComplexImage> backs(J);
    for (int t = 0; t < data_.angles.count(); ++t) {
      acc.fill(0.0);
#pragma omp parallel for schedule(static)
      for (int j = 0; j < J; ++j) {
        const std::size_t i = static_cast<std::size_t>(t) * J + j;
        ComplexImage w = st_.z[i];
        for (std::size_t px = 0; px < w.size(); ++px) w[px] += st_.lambda2[i][px];
        w = idft2_unitary(w);
        for (std::size_t px = 0; px < w.size(); ++px)
          w[px] *= std::conj(st_.probe[px]);
        backs[j] = std::move(w);
      }
      for (int j = 0; j < J; ++j) {
        const auto& pos = data_.geom.positions[j];
        embed_window_add(backs[j], pos[0], pos[1], acc);
      }
      for (std::size_t px = 0; px < acc.size(); ++px) acc[px] *= cfg_.r2;
      backproject_rotate_adjoint_add(acc, stencils_[t], b);
    }
    return b;
  }

  /** One outer iteration (u update, optional probe refresh, proxes, multipliers). */
  ConvergenceRow step() {
    const auto t0 = std::chrono::steady_clock::now();
    const bool with_tv = cfg_.r1 > 0.0;
    ConvergenceRow row;

    // Step 1: normal-equation solve for u, warm-started at the previous iterate
    const ComplexVolume rhs = build_rhs();
    u_prev_ = st_.u;
    const CgOutcome cg = cg_solve(
        [this](const ComplexVolume& in, ComplexVolume& out) {
          apply_normal_into(in, W_, stencils_, cfg_.r1, cfg_.r2, out, gscratch_, proj_);
        },
        rhs, st_.u, cfg_.cg_iters, cfg_.cg_tol);
    row.cg_breakdown = cg.breakdown;

    if (cfg_.blind_probe) {
      std::vector<ComplexImage> zl(st_.z.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(st_.z.size()); ++i) {
        zl[i] = st_.z[i];
        for (std::size_t px = 0; px < zl[i].size(); ++px) zl[i][px] += st_.lambda2[i][px];
      }
      const ProbeUpdate pu = update_probe(st_.u, zl, data_, st_.probe);
      st_.probe = pu.probe;
      row.probe_floor_pixels = pu.floored_pixels;
      refresh_weight();
    }

    // Step 2: modulus prox and, with the TV branch, gradient shrinkage
    forward_frames_into(st_.probe, st_.u, data_.geom, stencils_, dfr_);
    const int frames = data_.frame_count();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < frames; ++i) {
      ComplexImage zt = dfr_[i];
      for (std::size_t px = 0; px < zt.size(); ++px) zt[px] -= st_.lambda2[i][px];
      prox_z_inplace(zt, data_.frames[i], cfg_.r2, cfg_.metric);
      st_.z[i] = std::move(zt);
    }
    if (with_tv) {
      gradient3_into(st_.u, gscratch_);
      GradientField pt = gscratch_;
      axpy(cdouble(-1.0), st_.lambda1, pt);
      st_.p = shrink_p(pt, cfg_.lambda / cfg_.r1);
    }

    // Step 3: dual ascent
#pragma omp parallel for schedule(static)
    for (int i = 0; i < frames; ++i)
      for (std::size_t px = 0; px < st_.z[i].size(); ++px)
        st_.lambda2[i][px] += st_.z[i][px] - dfr_[i][px];
    if (with_tv) {
      axpy(cdouble(1.0), st_.p, st_.lambda1);
      axpy(cdouble(-1.0), gscratch_, st_.lambda1);
    }

    // Step 4 bookkeeping
    row.k = ++st_.k;
    row.rel_change = relative_change(u_prev_, st_.u);
    detail::RFactorAccum rf;
    for (int i = 0; i < frames; ++i) rf.add(dfr_[i], data_.frames[i]);
    row.r_factor = rf.value();
    row.objective = data_objective(dfr_, data_, cfg_.metric);
    if (cfg_.lambda > 0.0) row.objective += cfg_.lambda * tv_value(gscratch_);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
  }

  SolveResult run() {
    SolveResult res;
    ConvergenceRecord history;
    bool converged = false;
    while (st_.k < cfg_.max_outer) {
      const ConvergenceRow row = step();
      history.rows.push_back(row);
      // z starts at the forward image of u, so the first normal-equation
      // solve leaves u at its warm start; the stop test arms afterwards.
      if (row.k >= 2 && row.rel_change <= cfg_.stop_tol) {
        converged = true;
        break;
      }
    }
    res.u = std::move(st_.u);
    res.probe = std::move(st_.probe);
    res.history = std::move(history);
    res.converged = converged;
    return res;
  }

 private:
  void refresh_weight() {
    W_ = probe_weight(st_.probe, data_.geom);
    if (cfg_.r1 == 0.0) {
      for (std::size_t i = 0; i < W_.size(); ++i)
        if (!(W_[i] > 0.0))
          throw config_error("solver: r1 = 0 requires strictly positive probe coverage");
    }
  }

  const MeasurementSet& data_;
  SolverConfig cfg_;
  SolverState st_;
  std::vector<RotationStencil> stencils_;
  RealImage W_;
  GradientField gscratch_;
  ComplexImage proj_;
  ComplexVolume u_prev_;
  std::vector<ComplexImage> dfr_;
};

inline ConvergenceRow apt_step(SolverState& st, const MeasurementSet& data,
                               const SolverConfig& cfg) {
  AptEngine engine(data, cfg, std::move(st));
  const ConvergenceRow row = engine.step();
  st = engine.take_state();
  return row;
}

inline ComplexVolume build_rhs(const SolverState& st, const MeasurementSet& data,
                               const SolverConfig& cfg) {
  AptEngine engine(data, cfg, st);
  return engine.build_rhs();
}

/** Joint reconstruction with the TV branch (set lambda = r1 = 0 for the plain variant). */
inline SolveResult apt_run(const MeasurementSet& data, const Probe& probe,
                           const SolverConfig& cfg) {
  validate_solver_config(cfg);
  AptEngine engine(data, cfg, AptEngine::make_initial_state(data, probe, cfg));
  return engine.run();
}

/** TV-free variant: identical loop with the gradient machinery elided. */
inline SolveResult apts_run(const MeasurementSet& data, const Probe& probe, SolverConfig cfg) {
  cfg.r1 = 0.0;
  cfg.lambda = 0.0;
  return apt_run(data, probe, cfg);
}

}  // namespace ptychotomo
