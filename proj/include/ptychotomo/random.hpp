#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ptychotomo/errors.hpp"

namespace ptychotomo {

/** splitmix64 mixing step; used to derive independent per-stream seeds. */
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

/**
 * Reproducible uniform source: mt19937_64 (sequence pinned by the standard)
 * mapped to (0,1] with a fixed 53-bit ladder, so replay does not depend on
 * library distribution internals.
 */
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1]
    return ((eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

/**
 * Exact Poisson sampling: Knuth product inversion below mean 10, the
 * transformed-rejection method of Hoermann (PTRS) above.
 */
inline std::uint64_t poisson_sample(double mean, StreamRng& rng) {
  detail::require(mean >= 0.0 && std::isfinite(mean), "poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    if (us < 1e-12) continue;
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b);
    const double rhs = -mean + kf * loglam - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
  }
}

}  // namespace ptychotomo
