#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ptychotomo/fft.hpp"
#include "ptychotomo/geometry.hpp"
#include "ptychotomo/grid.hpp"
#include "ptychotomo/operators.hpp"
#include "ptychotomo/random.hpp"

namespace ptychotomo {

/**
 * Recorded far-field intensities for every (angle, window) pair.  Frames are
 * stored angle-major: frame index t * J + j for angle t and window j.
 */
struct MeasurementSet {
  ScanGeometry geom;
  AngleSet angles;
  std::vector<Grid2<double>> frames;
  std::optional<double> eta;  // Poisson peak factor; empty for noise-free data
  std::uint64_t seed = 0;
  int stepsize = 0;  // generative raster step, recorded for the archive header

  int window_count() const { return static_cast<int>(geom.positions.size()); }
  int frame_count() const { return static_cast<int>(frames.size()); }
  const Grid2<double>& frame(int t, int j) const {
    return frames[static_cast<std::size_t>(t) * window_count() + j];
  }
};

inline void validate_measurements(const MeasurementSet& m) {
  validate_scan_geometry(m.geom);
  validate_angles(m.angles);
  detail::require(m.frame_count() ==
                      m.angles.count() * static_cast<int>(m.geom.positions.size()),
                  "measurements: frame count must be angles x windows");
  for (const auto& f : m.frames) {
    detail::require(f.rows() == m.geom.window && f.cols() == m.geom.window,
                    "measurements: frame shape must match the scan window");
    for (std::size_t i = 0; i < f.size(); ++i)
      detail::require(f[i] >= 0.0, "measurements: intensities must be nonnegative");
  }
  if (m.eta) detail::require(*m.eta > 0.0, "measurements: eta must be positive");
}

/** Projection of the rotated volume: the illumination plane at angle theta. */
inline ComplexImage project_rotated(const ComplexVolume& u, const RotationStencil& st) {
  ComplexImage img;
  rotate_project_into(u, st, img);
  return img;
}

inline ComplexImage project_rotated(const ComplexVolume& u, double theta) {
  return project_rotated(u, make_rotation_stencil(u.n(), theta));
}

/** T = window extraction after projection of the rotated volume. */
inline ComplexImage t_apply(const ComplexVolume& u, int j, double theta,
                            const ScanGeometry& geom) {
  detail::require(u.n() == geom.n, "t_apply: volume size must match scan plane");
  detail::require(j >= 0 && j < static_cast<int>(geom.positions.size()),
                  "t_apply: window index out of range");
  const auto& p = geom.positions[j];
  return extract_window(project_rotated(u, theta), p[0], p[1], geom.window);
}

/** Exact adjoint of t_apply. */
inline ComplexVolume t_adjoint(const ComplexImage& w, int j, double theta,
                               const ScanGeometry& geom) {
  detail::require(w.rows() == geom.window && w.cols() == geom.window,
                  "t_adjoint: window shape mismatch");
  detail::require(j >= 0 && j < static_cast<int>(geom.positions.size()),
                  "t_adjoint: window index out of range");
  const auto& p = geom.positions[j];
  ComplexImage img = embed_window(w, p[0], p[1], geom.n, geom.n);
  ComplexVolume out(geom.n);
  backproject_rotate_adjoint_add(img, make_rotation_stencil(geom.n, theta), out);
  return out;
}

/** Far-field exit wave D(omega, u) for one (window, angle) pair. */
inline ComplexImage d_apply(const Probe& omega, const ComplexVolume& u, int j, double theta,
                            const ScanGeometry& geom) {
  detail::require(omega.rows() == geom.window && omega.cols() == geom.window,
                  "d_apply: probe shape must match the scan window");
  ComplexImage w = t_apply(u, j, theta, geom);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= omega[i];
  return dft2_unitary(w);
}

namespace detail {

inline ComplexImage d_from_plane(const Probe& omega, const ComplexImage& plane,
                                 const std::array<int, 2>& pos, int window) {
  ComplexImage w = extract_window(plane, pos[0], pos[1], window);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= omega[i];
  return dft2_unitary(w);
}

}  // namespace detail

/** Noise-free intensities |D(omega, u)|^2 over the whole scan. */
inline MeasurementSet simulate_intensities(const Probe& omega, const ComplexVolume& u,
                                           const ScanGeometry& geom, const AngleSet& angles) {
  validate_scan_geometry(geom);
  validate_angles(angles);
  detail::require(u.n() == geom.n, "simulate: volume size must match scan plane");
  detail::require(omega.rows() == geom.window && omega.cols() == geom.window,
                  "simulate: probe shape must match the scan window");
  const int J = static_cast<int>(geom.positions.size());
  MeasurementSet m;
  m.geom = geom;
  m.angles = angles;
  m.frames.resize(static_cast<std::size_t>(J) * angles.count());
  for (int t = 0; t < angles.count(); ++t) {
    const ComplexImage plane = project_rotated(u, angles.angles[t]);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < J; ++j) {
      const ComplexImage d = detail::d_from_plane(omega, plane, geom.positions[j], geom.window);
      Grid2<double> f(geom.window, geom.window);
      for (std::size_t i = 0; i < d.size(); ++i) f[i] = std::norm(d[i]);
      m.frames[static_cast<std::size_t>(t) * J + j] = std::move(f);
    }
  }
  return m;
}

/**
 * Independent Poisson counts with per-pixel mean eta * f.  Each frame draws
 * from its own generator seeded by (seed, frame index), so results do not
 * depend on scheduling.
 */
inline MeasurementSet add_poisson_noise(const MeasurementSet& clean, double eta,
                                        std::uint64_t seed) {
  detail::require(eta > 0.0, "noise: eta must be positive");
  MeasurementSet out = clean;
  out.eta = eta;
  out.seed = seed;
  const int count = clean.frame_count();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) {
    StreamRng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(i)));
    const auto& src = clean.frames[i];
    auto& dst = out.frames[i];
    for (std::size_t px = 0; px < src.size(); ++px)
      dst[px] = static_cast<double>(poisson_sample(eta * src[px], rng));
  }
  return out;
}

/** W = sum_j S_j^T |omega|^2: per-pixel illumination weight on the scan plane. */
inline RealImage probe_weight(const Probe& omega, const ScanGeometry& geom) {
  detail::require(omega.rows() == geom.window && omega.cols() == geom.window,
                  "probe_weight: probe shape must match the scan window");
  double total = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) total += std::norm(omega[i]);
  detail::require(total > 0.0, "probe_weight: probe must not be identically zero");
  RealImage wgt(geom.n, geom.n);
  for (const auto& p : geom.positions)
    for (int r = 0; r < geom.window; ++r)
      for (int c = 0; c < geom.window; ++c)
        wgt(p[0] + r, p[1] + c) += std::norm(omega(r, c));
  return wgt;
}

}  // namespace ptychotomo
