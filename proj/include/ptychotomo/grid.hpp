#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptychotomo/errors.hpp"

namespace ptychotomo {

using cdouble = std::complex<double>;

/** Dense row-major 2D array. */
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Grid2: negative extent");
    data_.assign(static_cast<std::size_t>(rows) * cols, fill);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { data_.assign(data_.size(), v); }

  template <typename U>
  bool same_shape(const Grid2<U>& o) const { return rows_ == o.rows() && cols_ == o.cols(); }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

/** Dense cubic 3D array; x is the fastest index, z the slowest. */
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(int n, T fill = T{}) : n_(n) {
    if (n < 0) throw std::invalid_argument("Grid3: negative extent");
    data_.assign(static_cast<std::size_t>(n) * n * n, fill);
  }

  int n() const { return n_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y, int z) {
    return data_[static_cast<std::size_t>(z) * n_ * n_ + static_cast<std::size_t>(y) * n_ + x];
  }
  const T& operator()(int x, int y, int z) const {
    return data_[static_cast<std::size_t>(z) * n_ * n_ + static_cast<std::size_t>(y) * n_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* slice(int z) { return data_.data() + static_cast<std::size_t>(z) * n_ * n_; }
  const T* slice(int z) const { return data_.data() + static_cast<std::size_t>(z) * n_ * n_; }

  void fill(T v) { data_.assign(data_.size(), v); }

 private:
  int n_ = 0;
  std::vector<T> data_;
};

/** Three per-axis channels of a finite-difference field. */
template <typename T>
struct Field3 {
  Grid3<T> x, y, z;

  Field3() = default;
  explicit Field3(int n) : x(n), y(n), z(n) {}
  int n() const { return x.n(); }
};

using ComplexImage = Grid2<cdouble>;
using RealImage = Grid2<double>;
using ComplexVolume = Grid3<cdouble>;
using GradientField = Field3<cdouble>;
using Probe = Grid2<cdouble>;

template <typename T>
double norm2sq(const Grid2<T>& a) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(cdouble(a[i]));
  return s;
}

template <typename T>
double norm2sq(const Grid3<T>& a) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(cdouble(a[i]));
  return s;
}

inline double norm2sq(const GradientField& f) {
  return norm2sq(f.x) + norm2sq(f.y) + norm2sq(f.z);
}

template <typename G>
double norm2(const G& a) {
  return std::sqrt(norm2sq(a));
}

/** Conjugated inner product sum(conj(a) * b). */
inline cdouble cdot(const ComplexVolume& a, const ComplexVolume& b) {
  detail::require(a.n() == b.n(), "cdot: shape mismatch");
  cdouble s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline cdouble cdot(const ComplexImage& a, const ComplexImage& b) {
  detail::require(a.same_shape(b), "cdot: shape mismatch");
  cdouble s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline cdouble cdot(const GradientField& a, const GradientField& b) {
  return cdot(a.x, b.x) + cdot(a.y, b.y) + cdot(a.z, b.z);
}

template <typename G, typename S>
void axpy(S alpha, const G& x, G& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void axpy(cdouble alpha, const GradientField& x, GradientField& y) {
  axpy(alpha, x.x, y.x);
  axpy(alpha, x.y, y.y);
  axpy(alpha, x.z, y.z);
}

}  // namespace ptychotomo
