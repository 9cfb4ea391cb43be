#pragma once

#include <algorithm>
#include <array>
#include <numbers>
#include <set>
#include <vector>

#include "ptychotomo/errors.hpp"
#include "ptychotomo/grid.hpp"

namespace ptychotomo {

/**
 * Scan layout on the n x n projection plane: square windows of side `window`
 * addressed by their top-left (row, col) corners.  Every pixel of the plane
 * must be covered by at least one window.
 */
struct ScanGeometry {
  int n = 0;
  int window = 0;
  std::vector<std::array<int, 2>> positions;
};

inline void validate_scan_geometry(const ScanGeometry& g) {
  detail::require(g.window > 0 && g.window <= g.n, "scan: window must satisfy 0 < window <= n");
  detail::require(!g.positions.empty(), "scan: no positions");
  std::set<std::array<int, 2>> seen;
  for (const auto& p : g.positions) {
    if (p[0] < 0 || p[1] < 0 || p[0] + g.window > g.n || p[1] + g.window > g.n)
      throw std::invalid_argument("scan: window position out of bounds");
    if (!seen.insert(p).second) throw std::invalid_argument("scan: duplicate position");
  }
  std::vector<char> hit(static_cast<std::size_t>(g.n) * g.n, 0);
  for (const auto& p : g.positions)
    for (int r = 0; r < g.window; ++r)
      for (int c = 0; c < g.window; ++c)
        hit[static_cast<std::size_t>(p[0] + r) * g.n + (p[1] + c)] = 1;
  if (std::count(hit.begin(), hit.end(), 1) != static_cast<std::ptrdiff_t>(hit.size()))
    throw std::invalid_argument("scan: windows do not cover the image");
}

/**
 * Cartesian raster of window corners {0, s, 2s, ...} per axis, clipped at
 * n - window, with n - window appended when the raster does not end there.
 * Row-major order over (row, col).
 */
inline ScanGeometry make_scan_grid(int n, int window, int step) {
  detail::require(n > 0 && window > 0 && window <= n, "scan: need 0 < window <= n");
  detail::require(step > 0, "scan: step must be positive");
  std::vector<int> offs;
  for (int o = 0; o + window <= n; o += step) offs.push_back(o);
  if (offs.empty() || offs.back() != n - window) offs.push_back(n - window);
  ScanGeometry g;
  g.n = n;
  g.window = window;
  for (int r : offs)
    for (int c : offs) g.positions.push_back({r, c});
  validate_scan_geometry(g);
  return g;
}

/** Tomographic angle set; strictly increasing within [0, pi). */
struct AngleSet {
  std::vector<double> angles;
  int count() const { return static_cast<int>(angles.size()); }
};

inline void validate_angles(const AngleSet& a) {
  detail::require(!a.angles.empty(), "angles: empty set");
  for (std::size_t i = 0; i < a.angles.size(); ++i) {
    const double t = a.angles[i];
    if (!(t >= 0.0 && t < std::numbers::pi))
      throw std::invalid_argument("angles: values must lie in [0, pi)");
    if (i > 0 && !(t > a.angles[i - 1]))
      throw std::invalid_argument("angles: values must be strictly increasing");
  }
}

/** Uniform half-turn sampling theta_k = k*pi/count. */
inline AngleSet make_angles(int count) {
  detail::require(count >= 1, "angles: count must be >= 1");
  AngleSet a;
  a.angles.resize(count);
  for (int k = 0; k < count; ++k) a.angles[k] = k * std::numbers::pi / count;
  validate_angles(a);
  return a;
}

}  // namespace ptychotomo
