#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "ptychotomo/forward_model.hpp"
#include "ptychotomo/grid.hpp"

namespace ptychotomo {

struct SnrResult {
  double snr_db = 0.0;              // +-infinity marks exact match / degenerate input
  std::array<int, 3> shift{0, 0, 0};
  cdouble scale{0.0, 0.0};
  double residual_sq = 0.0;
};

/**
 * Reconstruction fidelity in dB after removing the global complex scale and an
 * integer translation: minimizes |zeta * u(t + T) - ref(t)|^2 over zeta and
 * all T in [-window, window]^3 (zero-fill outside the grid), then reports
 * -10 log10(min / |zeta * u|^2) with the unshifted full-grid norm of u in the
 * denominator.
 */
inline SnrResult aligned_snr(const ComplexVolume& u, const ComplexVolume& ref,
                             int t_window = 4) {
  detail::require(u.n() == ref.n(), "snr: shape mismatch");
  detail::require(t_window >= 0, "snr: window must be >= 0");
  const int n = u.n();
  const double ref_sq = norm2sq(ref);
  const double u_sq = norm2sq(u);
  SnrResult best;
  if (u_sq == 0.0) {
    best.snr_db = -std::numeric_limits<double>::infinity();
    best.residual_sq = ref_sq;
    return best;
  }

  std::vector<std::array<int, 3>> shifts;
  for (int tz = -t_window; tz <= t_window; ++tz)
    for (int ty = -t_window; ty <= t_window; ++ty)
      for (int tx = -t_window; tx <= t_window; ++tx) shifts.push_back({tx, ty, tz});
  std::vector<double> gains(shifts.size(), -1.0), norms(shifts.size(), 0.0);
  std::vector<cdouble> inners(shifts.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(shifts.size()); ++si) {
    const int tx = shifts[si][0], ty = shifts[si][1], tz = shifts[si][2];
    const int x0 = std::max(0, -tx), x1 = std::min(n, n - tx);
    const int y0 = std::max(0, -ty), y1 = std::min(n, n - ty);
    const int z0 = std::max(0, -tz), z1 = std::min(n, n - tz);
    if (x0 >= x1 || y0 >= y1 || z0 >= z1) continue;
    double shifted_sq = 0.0;
    cdouble inner = 0.0;  // <u_T, ref>
    for (int z = z0; z < z1; ++z)
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const cdouble us = u(x + tx, y + ty, z + tz);
          shifted_sq += std::norm(us);
          inner += std::conj(us) * ref(x, y, z);
        }
    if (shifted_sq == 0.0) continue;
    gains[si] = std::norm(inner) / shifted_sq;
    norms[si] = shifted_sq;
    inners[si] = inner;
  }
  // deterministic selection: first best shift in scan order
  double best_gain = -1.0;
  cdouble best_zeta = 0.0;
  std::array<int, 3> best_shift{0, 0, 0};
  for (std::size_t si = 0; si < shifts.size(); ++si) {
    if (gains[si] > best_gain) {
      best_gain = gains[si];
      best_zeta = inners[si] / norms[si];
      best_shift = shifts[si];
    }
  }
  if (best_gain < 0.0) best_gain = 0.0;

  best.shift = best_shift;
  best.scale = best_zeta;
  best.residual_sq = std::max(0.0, ref_sq - best_gain);
  const double denom = std::norm(best_zeta) * u_sq;
  if (denom == 0.0) {
    best.snr_db = -std::numeric_limits<double>::infinity();
  } else if (best.residual_sq == 0.0) {
    best.snr_db = std::numeric_limits<double>::infinity();
  } else {
    best.snr_db = -10.0 * std::log10(best.residual_sq / denom);
  }
  return best;
}

inline double aligned_snr_db(const ComplexVolume& u, const ComplexVolume& ref,
                             int t_window = 4) {
  return aligned_snr(u, ref, t_window).snr_db;
}

namespace detail {

/** sum_i || |d_i| - sqrt(f_i) ||_1 accumulated frame by frame. */
struct RFactorAccum {
  double num = 0.0, den = 0.0;

  void add(const ComplexImage& d, const Grid2<double>& f) {
    require(d.rows() == f.rows() && d.cols() == f.cols(), "r_factor: frame shape mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double root = std::sqrt(f[i]);
      num += std::abs(std::abs(d[i]) - root);
      den += root;
    }
  }

  double value() const {
    require(den > 0.0, "r_factor: measurements are identically zero");
    return num / den;
  }
};

}  // namespace detail

/** Relative amplitude misfit sum|| |D| - sqrt(f) ||_1 / sum|| sqrt(f) ||_1. */
inline double r_factor(const ComplexVolume& u, const Probe& omega, const MeasurementSet& data) {
  detail::RFactorAccum acc;
  const int J = data.window_count();
  for (int t = 0; t < data.angles.count(); ++t) {
    const ComplexImage plane = project_rotated(u, data.angles.angles[t]);
    for (int j = 0; j < J; ++j) {
      const ComplexImage d =
          detail::d_from_plane(omega, plane, data.geom.positions[j], data.geom.window);
      acc.add(d, data.frame(t, j));
    }
  }
  return acc.value();
}

/** Measurement fidelity -10 log10( sum||f - f_ref||^2 / sum||f_ref||^2 ). */
inline double snr_intensity_db(const MeasurementSet& noisy, const MeasurementSet& reference) {
  detail::require(noisy.frame_count() == reference.frame_count(),
                  "snr_intensity: frame count mismatch");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < noisy.frame_count(); ++i) {
    const auto& a = noisy.frames[i];
    const auto& b = reference.frames[i];
    detail::require(a.same_shape(b), "snr_intensity: frame shape mismatch");
    for (std::size_t px = 0; px < a.size(); ++px) {
      num += (a[px] - b[px]) * (a[px] - b[px]);
      den += b[px] * b[px];
    }
  }
  detail::require(den > 0.0, "snr_intensity: reference is identically zero");
  if (num == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(num / den);
}

/** ||prev - next|| / ||next||; infinity when next is identically zero. */
inline double relative_change(const ComplexVolume& prev, const ComplexVolume& next) {
  detail::require(prev.n() == next.n(), "relative_change: shape mismatch");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    diff += std::norm(prev[i] - next[i]);
    ref += std::norm(next[i]);
  }
  if (ref == 0.0)
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(diff / ref);
}

}  // namespace ptychotomo
