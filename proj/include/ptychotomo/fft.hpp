#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ptychotomo/grid.hpp"

namespace ptychotomo {
namespace detail {

inline bool is_pow2(int m) { return m > 0 && (m & (m - 1)) == 0; }

/**
 * One-dimensional DFT working set for a fixed length, shared by every row and
 * column of a 2D transform.  Radix-2 in-place transform for power-of-two
 * lengths, direct summation otherwise.  No global state, so concurrent plans
 * are safe.
 */
class Dft1 {
 public:
  Dft1(int m, bool inverse) : m_(m), pow2_(is_pow2(m)) {
    const double sgn = inverse ? 1.0 : -1.0;
    const int count = pow2_ ? m / 2 : m;
    tw_.resize(count);
    for (int k = 0; k < count; ++k)
      tw_[k] = std::polar(1.0, sgn * 2.0 * std::numbers::pi * k / m);
    if (pow2_) {
      rev_.resize(m);
      int lg = 0;
      while ((1 << lg) < m) ++lg;
      for (int i = 0; i < m; ++i) {
        int r = 0;
        for (int b = 0; b < lg; ++b)
          if (i & (1 << b)) r |= 1 << (lg - 1 - b);
        rev_[i] = r;
      }
    } else {
      scratch_.resize(m);
    }
  }

  void transform(cdouble* a) {
    if (pow2_) {
      for (int i = 0; i < m_; ++i)
        if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
      for (int len = 2; len <= m_; len <<= 1) {
        const int half = len / 2, step = m_ / len;
        for (int base = 0; base < m_; base += len) {
          for (int k = 0; k < half; ++k) {
            const cdouble w = tw_[static_cast<std::size_t>(k) * step];
            const cdouble u = a[base + k];
            const cdouble v = a[base + k + half] * w;
            a[base + k] = u + v;
            a[base + k + half] = u - v;
          }
        }
      }
    } else {
      for (int k = 0; k < m_; ++k) {
        cdouble s = 0;
        for (int j = 0; j < m_; ++j)
          s += a[j] * tw_[static_cast<std::size_t>(k) * j % m_];
        scratch_[k] = s;
      }
      for (int k = 0; k < m_; ++k) a[k] = scratch_[k];
    }
  }

 private:
  int m_;
  bool pow2_;
  std::vector<cdouble> tw_;
  std::vector<int> rev_;
  std::vector<cdouble> scratch_;
};

inline void dft2_impl(const ComplexImage& in, ComplexImage& out, bool inverse) {
  require(!in.empty(), "dft2: empty input");
  require(in.rows() == in.cols(), "dft2: input must be square");
  const int m = in.rows();
  out = in;
  Dft1 plan(m, inverse);
  for (int r = 0; r < m; ++r) plan.transform(out.data() + static_cast<std::size_t>(r) * m);
  std::vector<cdouble> col(m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) col[r] = out(r, c);
    plan.transform(col.data());
    for (int r = 0; r < m; ++r) out(r, c) = col[r];
  }
  const double scale = 1.0 / m;  // 1/sqrt(m*m): unitary both ways
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale;
}

}  // namespace detail

/** Unitary 2D discrete Fourier transform of a square image. */
inline ComplexImage dft2_unitary(const ComplexImage& in) {
  ComplexImage out;
  detail::dft2_impl(in, out, false);
  return out;
}

/** Unitary inverse of dft2_unitary. */
inline ComplexImage idft2_unitary(const ComplexImage& in) {
  ComplexImage out;
  detail::dft2_impl(in, out, true);
  return out;
}

}  // namespace ptychotomo
