#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ptychotomo/grid.hpp"

namespace ptychotomo {

/** Copy the m x m window whose top-left corner is (r0, c0); out of range is an error. */
inline ComplexImage extract_window(const ComplexImage& img, int r0, int c0, int m) {
  detail::require(m > 0, "extract_window: window size must be positive");
  if (r0 < 0 || c0 < 0 || r0 + m > img.rows() || c0 + m > img.cols())
    throw std::out_of_range("extract_window: window exceeds image bounds");
  ComplexImage w(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) w(r, c) = img(r0 + r, c0 + c);
  return w;
}

/** Adjoint accumulate: add a window into dst at (r0, c0). */
inline void embed_window_add(const ComplexImage& w, int r0, int c0, ComplexImage& dst) {
  if (r0 < 0 || c0 < 0 || r0 + w.rows() > dst.rows() || c0 + w.cols() > dst.cols())
    throw std::out_of_range("embed_window: window exceeds image bounds");
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < w.cols(); ++c) dst(r0 + r, c0 + c) += w(r, c);
}

/** Adjoint of extract_window: embed into an otherwise zero rows x cols image. */
inline ComplexImage embed_window(const ComplexImage& w, int r0, int c0, int rows, int cols) {
  ComplexImage img(rows, cols);
  embed_window_add(w, r0, c0, img);
  return img;
}

/**
 * Precomputed bilinear resampling stencil for rotating every z-slice of a
 * volume by theta about the z axis.  Sample coordinates are taken about the
 * slice center (n-1)/2 and values outside the grid are zero.  cos/sin values
 * within 1e-14 of {0, +-1} are snapped so that quarter-turn rotations reduce
 * to exact index permutations.
 */
struct RotationStencil {
  struct Entry {
    std::ptrdiff_t base;          // x0 + n*y0 of the low corner
    double w00, w10, w01, w11;    // weights for (x0,y0) (x0+1,y0) (x0,y0+1) (x0+1,y0+1)
    std::uint8_t mask;            // validity bits for the four corners
    bool exact;                   // lattice hit: plain copy of the low corner
  };
  int n = 0;
  double theta = 0;
  std::vector<Entry> entries;  // index x + n*y
};

namespace detail {

inline double snap_trig(double v) {
  if (std::abs(v) < 1e-14) return 0.0;
  if (std::abs(v - 1.0) < 1e-14) return 1.0;
  if (std::abs(v + 1.0) < 1e-14) return -1.0;
  return v;
}

}  // namespace detail

inline RotationStencil make_rotation_stencil(int n, double theta) {
  detail::require(n >= 1, "rotation: grid extent must be positive");
  RotationStencil st;
  st.n = n;
  st.theta = theta;
  st.entries.resize(static_cast<std::size_t>(n) * n);
  const double ctr = (n - 1) / 2.0;
  const double c = detail::snap_trig(std::cos(theta));
  const double s = detail::snap_trig(std::sin(theta));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double dx = x - ctr, dy = y - ctr;
      const double xs = ctr + (c * dx + s * dy);
      const double ys = ctr + (c * dy - s * dx);
      const double xf = std::floor(xs), yf = std::floor(ys);
      const int x0 = static_cast<int>(xf), y0 = static_cast<int>(yf);
      const double fx = xs - xf, fy = ys - yf;
      RotationStencil::Entry e;
      e.base = static_cast<std::ptrdiff_t>(y0) * n + x0;
      e.w00 = (1.0 - fx) * (1.0 - fy);
      e.w10 = fx * (1.0 - fy);
      e.w01 = (1.0 - fx) * fy;
      e.w11 = fx * fy;
      e.mask = 0;
      auto in = [n](int xi, int yi) { return xi >= 0 && xi < n && yi >= 0 && yi < n; };
      if (in(x0, y0)) e.mask |= 1;
      if (in(x0 + 1, y0)) e.mask |= 2;
      if (in(x0, y0 + 1)) e.mask |= 4;
      if (in(x0 + 1, y0 + 1)) e.mask |= 8;
      e.exact = (fx == 0.0 && fy == 0.0);
      st.entries[static_cast<std::size_t>(y) * n + x] = e;
    }
  }
  return st;
}

namespace detail {

inline cdouble stencil_gather(const cdouble* slice, const RotationStencil::Entry& e, int n) {
  if (e.exact) return (e.mask & 1) ? slice[e.base] : cdouble(0.0);
  cdouble v = 0.0;
  if (e.mask & 1) v += e.w00 * slice[e.base];
  if (e.mask & 2) v += e.w10 * slice[e.base + 1];
  if (e.mask & 4) v += e.w01 * slice[e.base + n];
  if (e.mask & 8) v += e.w11 * slice[e.base + n + 1];
  return v;
}

inline void stencil_scatter(cdouble* slice, const RotationStencil::Entry& e, int n, cdouble v) {
  if (e.exact) {
    if (e.mask & 1) slice[e.base] += v;
    return;
  }
  if (e.mask & 1) slice[e.base] += e.w00 * v;
  if (e.mask & 2) slice[e.base + 1] += e.w10 * v;
  if (e.mask & 4) slice[e.base + n] += e.w01 * v;
  if (e.mask & 8) slice[e.base + n + 1] += e.w11 * v;
}

}  // namespace detail

/** Rotate every z-slice by theta (counterclockwise in the (x,y) plane). */
inline ComplexVolume rotate_volume(const ComplexVolume& u, const RotationStencil& st) {
  detail::require(u.n() == st.n, "rotate_volume: stencil size mismatch");
  const int n = u.n();
  ComplexVolume out(n);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* in = u.slice(z);
    cdouble* o = out.slice(z);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        o[static_cast<std::size_t>(y) * n + x] =
            detail::stencil_gather(in, st.entries[static_cast<std::size_t>(y) * n + x], n);
  }
  return out;
}

inline ComplexVolume rotate_volume(const ComplexVolume& u, double theta) {
  return rotate_volume(u, make_rotation_stencil(u.n(), theta));
}

/** Exact transpose of rotate_volume at the same angle (not the inverse rotation). */
inline ComplexVolume rotate_adjoint(const ComplexVolume& u, const RotationStencil& st) {
  detail::require(u.n() == st.n, "rotate_adjoint: stencil size mismatch");
  const int n = u.n();
  ComplexVolume out(n);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* in = u.slice(z);
    cdouble* o = out.slice(z);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        detail::stencil_scatter(o, st.entries[static_cast<std::size_t>(y) * n + x], n,
                                in[static_cast<std::size_t>(y) * n + x]);
  }
  return out;
}

inline ComplexVolume rotate_adjoint(const ComplexVolume& u, double theta) {
  return rotate_adjoint(u, make_rotation_stencil(u.n(), theta));
}

/** Parallel-beam projection along y: img(z, x) = sum_y u(x, y, z). */
inline ComplexImage xray_project(const ComplexVolume& u) {
  const int n = u.n();
  ComplexImage img(n, n);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* in = u.slice(z);
    cdouble* row = img.data() + static_cast<std::size_t>(z) * n;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) row[x] += in[static_cast<std::size_t>(y) * n + x];
  }
  return img;
}

/** Adjoint of xray_project: replicate img(z, x) along y. */
inline ComplexVolume backproject(const ComplexImage& img, int n) {
  detail::require(img.rows() == n && img.cols() == n, "backproject: image must be n x n");
  ComplexVolume out(n);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* row = img.data() + static_cast<std::size_t>(z) * n;
    cdouble* o = out.slice(z);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) o[static_cast<std::size_t>(y) * n + x] = row[x];
  }
  return out;
}

/**
 * Fused img(z,x) = sum_y (rotated u)(x,y,z); arithmetic identical to
 * xray_project(rotate_volume(u, st)) term by term.
 */
inline void rotate_project_into(const ComplexVolume& u, const RotationStencil& st,
                                ComplexImage& img) {
  detail::require(u.n() == st.n, "rotate_project: stencil size mismatch");
  const int n = u.n();
  if (img.rows() != n || img.cols() != n) img = ComplexImage(n, n);
  else img.fill(0.0);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* in = u.slice(z);
    cdouble* row = img.data() + static_cast<std::size_t>(z) * n;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        row[x] += detail::stencil_gather(in, st.entries[static_cast<std::size_t>(y) * n + x], n);
  }
}

/**
 * Fused out += rotate_adjoint(backproject(img)); arithmetic identical to the
 * composed operators applied in sequence.
 */
inline void backproject_rotate_adjoint_add(const ComplexImage& img, const RotationStencil& st,
                                           ComplexVolume& out) {
  const int n = st.n;
  detail::require(img.rows() == n && img.cols() == n, "backproject: image must be n x n");
  detail::require(out.n() == n, "backproject: volume size mismatch");
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const cdouble* row = img.data() + static_cast<std::size_t>(z) * n;
    cdouble* o = out.slice(z);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        detail::stencil_scatter(o, st.entries[static_cast<std::size_t>(y) * n + x], n, row[x]);
  }
}

/** Forward differences per axis with Neumann boundary (last difference zero). */
inline void gradient3_into(const ComplexVolume& u, GradientField& g) {
  const int n = u.n();
  if (g.n() != n) g = GradientField(n);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      const std::size_t r = static_cast<std::size_t>(z) * n * n + static_cast<std::size_t>(y) * n;
      const cdouble* uz = u.data();
      for (int x = 0; x < n; ++x) {
        const std::size_t i = r + x;
        g.x[i] = (x + 1 < n) ? uz[i + 1] - uz[i] : cdouble(0.0);
        g.y[i] = (y + 1 < n) ? uz[i + n] - uz[i] : cdouble(0.0);
        g.z[i] = (z + 1 < n) ? uz[i + static_cast<std::size_t>(n) * n] - uz[i] : cdouble(0.0);
      }
    }
  }
}

inline GradientField gradient3(const ComplexVolume& u) {
  GradientField g;
  gradient3_into(u, g);
  return g;
}

/** Discrete divergence, the negative adjoint of gradient3. */
inline void divergence3_into(const GradientField& p, ComplexVolume& out) {
  const int n = p.n();
  if (out.n() != n) out = ComplexVolume(n);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      const std::size_t r = static_cast<std::size_t>(z) * nn + static_cast<std::size_t>(y) * n;
      for (int x = 0; x < n; ++x) {
        const std::size_t i = r + x;
        cdouble v = 0.0;
        if (x == 0) v += p.x[i];
        else if (x == n - 1) v += -p.x[i - 1];
        else v += p.x[i] - p.x[i - 1];
        if (y == 0) v += p.y[i];
        else if (y == n - 1) v += -p.y[i - n];
        else v += p.y[i] - p.y[i - n];
        if (z == 0) v += p.z[i];
        else if (z == n - 1) v += -p.z[i - nn];
        else v += p.z[i] - p.z[i - nn];
        out[i] = v;
      }
    }
  }
}

inline ComplexVolume divergence3(const GradientField& p) {
  ComplexVolume out;
  divergence3_into(p, out);
  return out;
}

/** Laplacian defined by composition: divergence3(gradient3(u)). */
inline ComplexVolume laplacian3(const ComplexVolume& u) {
  return divergence3(gradient3(u));
}

}  // namespace ptychotomo
