#pragma once

#include <complex>
#include <random>

#include "ptychotomo/grid.hpp"

namespace testutil {

using ptychotomo::cdouble;

/** Deterministic value source for tests; every test case seeds its own. */
class Rand {
 public:
  explicit Rand(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  cdouble cplx(double amp = 1.0) { return {amp * uniform(), amp * uniform()}; }

  template <typename G>
  void fill(G& g) {
    for (std::size_t i = 0; i < g.size(); ++i) assign(g[i]);
  }

  void fill(ptychotomo::GradientField& f) {
    fill(f.x);
    fill(f.y);
    fill(f.z);
  }

 private:
  void assign(double& v) { v = uniform(); }
  void assign(cdouble& v) { v = cplx(); }

  std::mt19937_64 eng_;
};

inline double max_abs_diff(const ptychotomo::ComplexImage& a, const ptychotomo::ComplexImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const ptychotomo::ComplexVolume& a,
                           const ptychotomo::ComplexVolume& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename G>
bool bit_equal(const G& a, const G& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

/** Relative adjoint-identity defect |<Ax,y> - <x,A^T y>| / scale. */
inline double adjoint_defect(cdouble fwd, cdouble adj, double scale) {
  return std::abs(fwd - adj) / (scale > 0 ? scale : 1.0);
}

}  // namespace testutil
