#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ptychotomo/errors.hpp"
#include "ptychotomo/grid.hpp"

namespace ptychotomo {

/** Axis-aligned ellipsoid rotated by phi (degrees) about the z axis, in unit-cube coordinates. */
struct Ellipsoid {
  double x0, y0, z0;  // center
  double a, b, c;     // semi-axes along x, y, z before rotation
  double phi_deg;     // rotation about z
  double value;       // additive intensity

  bool contains(double x, double y, double z) const {
    const double phi = phi_deg * std::numbers::pi / 180.0;
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double dx = x - x0, dy = y - y0, dz = z - z0;
    const double xr = cp * dx + sp * dy;
    const double yr = -sp * dx + cp * dy;
    const double q = (xr / a) * (xr / a) + (yr / b) * (yr / b) + (dz / c) * (dz / c);
    return q <= 1.0;
  }
};

/** The standard ten-ellipsoid 3D Shepp-Logan head parameters. */
inline const std::array<Ellipsoid, 10>& shepp_logan_ellipsoids() {
  static const std::array<Ellipsoid, 10> table = {{
      {0.0, 0.0, 0.0, 0.69, 0.92, 0.81, 0.0, 1.0},
      {0.0, -0.0184, 0.0, 0.6624, 0.874, 0.78, 0.0, -0.8},
      {0.22, 0.0, 0.0, 0.11, 0.31, 0.22, -18.0, -0.2},
      {-0.22, 0.0, 0.0, 0.16, 0.41, 0.28, 18.0, -0.2},
      {0.0, 0.35, -0.15, 0.21, 0.25, 0.41, 0.0, 0.1},
      {0.0, 0.1, 0.25, 0.046, 0.046, 0.05, 0.0, 0.1},
      {0.0, -0.1, 0.25, 0.046, 0.046, 0.05, 0.0, 0.1},
      {-0.08, -0.605, 0.0, 0.046, 0.023, 0.05, 0.0, 0.1},
      {0.0, -0.606, 0.0, 0.023, 0.023, 0.02, 0.0, 0.1},
      {0.06, -0.605, 0.0, 0.023, 0.046, 0.02, 0.0, 0.1},
  }};
  return table;
}

/** Summed ellipsoid intensity at a point of the [-1,1]^3 cube, clamped at zero. */
inline double phantom_intensity_at(const std::vector<Ellipsoid>& table, double x, double y,
                                   double z) {
  double s = 0.0;
  for (const auto& e : table)
    if (e.contains(x, y, z)) s += e.value;
  return s < 0.0 ? 0.0 : s;
}

/**
 * Pure-phase volume u(t) = exp(i * alpha * s(t) / s_max) - 1 on an n^3 grid of
 * the [-1,1]^3 cube; s_max is the grid maximum of the summed intensities, so
 * the largest phase equals alpha exactly.  Voxels outside every ellipsoid are
 * exactly zero.
 */
inline ComplexVolume phantom_volume(const std::vector<Ellipsoid>& table, int n, double alpha) {
  detail::require(n >= 8, "phantom: need n >= 8");
  detail::require(alpha > 0.0 && alpha <= std::numbers::pi, "phantom: need 0 < alpha <= pi");
  Grid3<double> s(n);
  double smax = 0.0;
  const double h = 2.0 / (n - 1);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < n; ++z) {
    const double pz = -1.0 + h * z;
    for (int y = 0; y < n; ++y) {
      const double py = -1.0 + h * y;
      for (int x = 0; x < n; ++x) {
        const double px = -1.0 + h * x;
        s(x, y, z) = phantom_intensity_at(table, px, py, pz);
      }
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i) smax = std::max(smax, s[i]);
  ComplexVolume u(n);
  if (smax == 0.0) return u;
  const double scale = alpha / smax;
  for (std::size_t i = 0; i < s.size(); ++i)
    u[i] = (s[i] == 0.0) ? cdouble(0.0) : std::polar(1.0, scale * s[i]) - 1.0;
  return u;
}

inline ComplexVolume shepp_logan_3d(int n, double alpha = 0.5) {
  const auto& t = shepp_logan_ellipsoids();
  return phantom_volume(std::vector<Ellipsoid>(t.begin(), t.end()), n, alpha);
}

/**
 * Load an ellipsoid table: one row per ellipsoid, eight columns
 * (x0 y0 z0 a b c phi_deg value), '#' comments and blank lines ignored.
 */
inline std::vector<Ellipsoid> load_ellipsoid_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("ellipsoid table: cannot open " + path);
  std::vector<Ellipsoid> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    Ellipsoid e;
    if (!(ss >> e.x0)) continue;  // blank or comment-only line
    if (!(ss >> e.y0 >> e.z0 >> e.a >> e.b >> e.c >> e.phi_deg >> e.value))
      throw parse_error("ellipsoid table: line " + std::to_string(lineno) +
                        ": expected 8 numeric columns");
    double trail;
    if (ss >> trail)
      throw parse_error("ellipsoid table: line " + std::to_string(lineno) + ": trailing data");
    if (!(e.a > 0.0 && e.b > 0.0 && e.c > 0.0))
      throw parse_error("ellipsoid table: line " + std::to_string(lineno) +
                        ": semi-axes must be positive");
    table.push_back(e);
  }
  if (table.empty()) throw parse_error("ellipsoid table: no rows in " + path);
  return table;
}

/**
 * Gaussian illumination on an m x m grid: unit peak, zero phase, amplitude
 * exp(-d^2 / (2 sigma^2)) about the grid center (m-1)/2 with
 * sigma = fwhm / (2 sqrt(2 ln 2)).
 */
inline Probe make_probe(int m, double fwhm) {
  detail::require(m >= 1, "probe: size must be positive");
  detail::require(fwhm > 0.0 && fwhm < m, "probe: need 0 < fwhm < size");
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double ctr = (m - 1) / 2.0;
  Probe w(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const double d2 = (r - ctr) * (r - ctr) + (c - ctr) * (c - ctr);
      w(r, c) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  return w;
}

}  // namespace ptychotomo
