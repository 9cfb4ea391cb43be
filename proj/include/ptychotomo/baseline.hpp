#pragma once

#include <span>
#include <vector>

#include "ptychotomo/solver.hpp"

namespace ptychotomo {

struct Ptycho2dOptions {
  int iters = 100;  // fixed outer budget, no early stop
  double r2 = 1.0;
  int cg_iters = 10;
  double cg_tol = 1e-6;
  FitMetric metric = FitMetric::pAGM;
  double fail_threshold = 0.2;  // final amplitude misfit above this flags failure
};

struct Ptycho2dResult {
  ComplexImage v;
  double r_factor = 0.0;
  int iters = 0;
  bool converged = false;
};

/**
 * Single-plane phase retrieval: the joint ADMM specialized to one angle with
 * the rotation and projection replaced by the identity.  Consumes exactly one
 * angle's frames.
 */
inline Ptycho2dResult ptycho_solve_2d(std::span<const Grid2<double>> frames, const Probe& omega,
                                      const ScanGeometry& geom, const Ptycho2dOptions& opt) {
  validate_scan_geometry(geom);
  const int J = static_cast<int>(geom.positions.size());
  detail::require(static_cast<int>(frames.size()) == J,
                  "ptycho2d: need exactly one frame per window");
  detail::require(opt.iters >= 1 && opt.cg_iters >= 1, "ptycho2d: iteration budgets must be >= 1");
  detail::require(opt.r2 > 0.0, "ptycho2d: r2 must be positive");
  for (const auto& f : frames)
    detail::require(f.rows() == geom.window && f.cols() == geom.window,
                    "ptycho2d: frame shape mismatch");

  const RealImage W = probe_weight(omega, geom);
  const int n = geom.n;
  Ptycho2dResult res;
  res.v = ComplexImage(n, n, cdouble(1.0));

  auto forward = [&](std::vector<ComplexImage>& d) {
    d.resize(J);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < J; ++j)
      d[j] = detail::d_from_plane(omega, res.v, geom.positions[j], geom.window);
  };

  std::vector<ComplexImage> z, lambda(J, ComplexImage(geom.window, geom.window)), d;
  forward(z);

  for (int it = 0; it < opt.iters; ++it) {
    ComplexImage rhs(n, n);
    std::vector<ComplexImage> backs(J);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < J; ++j) {
      ComplexImage w = z[j];
      for (std::size_t px = 0; px < w.size(); ++px) w[px] += lambda[j][px];
      w = idft2_unitary(w);
      for (std::size_t px = 0; px < w.size(); ++px) w[px] *= std::conj(omega[px]);
      backs[j] = std::move(w);
    }
    for (int j = 0; j < J; ++j) {
      const auto& pos = geom.positions[j];
      embed_window_add(backs[j], pos[0], pos[1], rhs);
    }
    for (std::size_t px = 0; px < rhs.size(); ++px) rhs[px] *= opt.r2;

    cg_solve(
        [&](const ComplexImage& in, ComplexImage& out) {
          if (!out.same_shape(in)) out = in;
          for (std::size_t px = 0; px < in.size(); ++px) out[px] = opt.r2 * W[px] * in[px];
        },
        rhs, res.v, opt.cg_iters, opt.cg_tol);

    forward(d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < J; ++j) {
      ComplexImage zt = d[j];
      for (std::size_t px = 0; px < zt.size(); ++px) zt[px] -= lambda[j][px];
      prox_z_inplace(zt, frames[j], opt.r2, opt.metric);
      z[j] = std::move(zt);
    }
    for (int j = 0; j < J; ++j)
      for (std::size_t px = 0; px < z[j].size(); ++px) lambda[j][px] += z[j][px] - d[j][px];
    res.iters = it + 1;
  }

  detail::RFactorAccum rf;
  for (int j = 0; j < J; ++j) rf.add(d[j], frames[j]);
  res.r_factor = rf.value();
  res.converged = res.r_factor <= opt.fail_threshold;
  return res;
}

struct PhaseAlign {
  ComplexImage v;
  cdouble factor{1.0, 0.0};
  bool degenerate = false;  // no usable reference: image returned unchanged
};

namespace detail {

inline PhaseAlign align_by_mean(const ComplexImage& v, cdouble mean) {
  PhaseAlign out;
  out.v = v;
  const double scale = std::sqrt(norm2sq(v) / std::max<std::size_t>(v.size(), 1));
  if (std::abs(mean) <= 1e-12 * scale || std::abs(mean) == 0.0) {
    out.degenerate = true;
    return out;
  }
  out.factor = std::conj(mean / std::abs(mean));
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= out.factor;
  return out;
}

}  // namespace detail

/**
 * Rotate the global phase so the mean over the one-pixel image border is real
 * and positive.  A border mean of (numerically) zero carries no reference and
 * flags the result degenerate, leaving the image unchanged.
 */
inline PhaseAlign align_global_phase(const ComplexImage& v) {
  detail::require(v.rows() >= 2 && v.cols() >= 2, "align: image too small");
  cdouble sum = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < v.cols(); ++c) {
    sum += v(0, c) + v(v.rows() - 1, c);
    count += 2;
  }
  for (int r = 1; r + 1 < v.rows(); ++r) {
    sum += v(r, 0) + v(r, v.cols() - 1);
    count += 2;
  }
  return detail::align_by_mean(v, sum / static_cast<double>(count));
}

/**
 * Phase alignment against the illumination-weighted mean; the reference of
 * choice when the true image is empty (zero) at the border, where the plain
 * border mean only sees unconstrained pixels.
 */
inline PhaseAlign align_phase_weighted(const ComplexImage& v, const RealImage& w) {
  detail::require(v.same_shape(w), "align: weight shape mismatch");
  cdouble sum = 0.0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += w[i] * v[i];
    wsum += w[i];
  }
  detail::require(wsum > 0.0, "align: weights must not be identically zero");
  return detail::align_by_mean(v, sum / wsum);
}

/**
 * Least-squares tomographic inversion of aligned projections:
 * CG on sum_t (Q R_t)^T (Q R_t) u = sum_t (Q R_t)^T v_t from a zero start.
 */
inline ComplexVolume tomo_solve_cg(const std::vector<ComplexImage>& stack,
                                   const AngleSet& angles, int cg_iters, double cg_tol = 1e-6) {
  detail::require(!stack.empty(), "tomo: no projections");
  detail::require(stack.size() == angles.angles.size(), "tomo: stack/angle count mismatch");
  const int n = stack.front().rows();
  for (const auto& img : stack)
    detail::require(img.rows() == n && img.cols() == n, "tomo: projections must be square n x n");
  std::vector<RotationStencil> st;
  for (double a : angles.angles) st.push_back(make_rotation_stencil(n, a));

  ComplexVolume b(n);
  for (std::size_t t = 0; t < st.size(); ++t)
    backproject_rotate_adjoint_add(stack[t], st[t], b);

  ComplexVolume x(n);
  ComplexImage proj;
  cg_solve(
      [&](const ComplexVolume& in, ComplexVolume& out) {
        if (out.n() != n) out = ComplexVolume(n);
        out.fill(0.0);
        for (const auto& s : st) {
          rotate_project_into(in, s, proj);
          backproject_rotate_adjoint_add(proj, s, out);
        }
      },
      b, x, cg_iters, cg_tol);
  return x;
}

struct AngleReport {
  double theta = 0.0;
  bool converged = false;
  double r_factor_2d = 0.0;
  int iters = 0;
};

struct TwoStepOptions {
  Ptycho2dOptions ptycho;
  int tomo_cg_iters = 10;
  double mask_rel = 1e-3;  // zero out pixels with illumination below this fraction of max
};

struct TwoStepResult {
  ComplexVolume u;
  std::vector<AngleReport> reports;
  bool success = false;
  int converged_angles = 0;
};

/**
 * Decoupled reconstruction: per-angle phase retrieval, illumination masking
 * and phase alignment, then tomographic least squares over the converged
 * angles.  Zero converged angles reports overall failure.
 */
inline TwoStepResult two_step_run(const MeasurementSet& data, const Probe& omega,
                                  const TwoStepOptions& opt) {
  validate_measurements(data);
  const int J = data.window_count();
  const int K = data.angles.count();
  const RealImage W = probe_weight(omega, data.geom);
  double wmax = 0.0;
  for (std::size_t i = 0; i < W.size(); ++i) wmax = std::max(wmax, W[i]);

  TwoStepResult res;
  res.u = ComplexVolume(data.geom.n);
  std::vector<ComplexImage> stack;
  std::vector<double> used_angles;
  for (int t = 0; t < K; ++t) {
    const std::span<const Grid2<double>> frames(&data.frames[static_cast<std::size_t>(t) * J],
                                                static_cast<std::size_t>(J));
    Ptycho2dResult p = ptycho_solve_2d(frames, omega, data.geom, opt.ptycho);
    res.reports.push_back({data.angles.angles[t], p.converged, p.r_factor, p.iters});
    if (!p.converged) continue;
    ++res.converged_angles;
    for (std::size_t i = 0; i < p.v.size(); ++i)
      if (W[i] < opt.mask_rel * wmax) p.v[i] = 0.0;
    stack.push_back(align_phase_weighted(p.v, W).v);
    used_angles.push_back(data.angles.angles[t]);
  }
  if (res.converged_angles == 0) return res;

  AngleSet used;
  used.angles = std::move(used_angles);
  res.u = tomo_solve_cg(stack, used, opt.tomo_cg_iters);
  res.success = true;
  return res;
}

}  // namespace ptychotomo
