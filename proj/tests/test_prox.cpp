#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ptychotomo/solver.hpp"

using namespace ptychotomo;

namespace {

ComplexImage single(cdouble v) {
  ComplexImage z(1, 1);
  z(0, 0) = v;
  return z;
}

Grid2<double> single_f(double f) {
  Grid2<double> g(1, 1);
  g(0, 0) = f;
  return g;
}

}  // namespace

TEST_CASE("modulus proxes match scalar numerical minimization") {
  testutil::Rand rnd(401);
  for (int trial = 0; trial < 2000; ++trial) {
    const double zmag = rnd.uniform(0.0, 3.0);
    const double f = rnd.uniform(0.0, 9.0);
    const double r2 = rnd.uniform(0.1, 10.0);
    const cdouble zt = std::polar(zmag, rnd.uniform(-3.14, 3.14));

    const double got_agm = std::abs(prox_z_pagm(single(zt), single_f(f), r2)(0, 0));
    REQUIRE(got_agm == Catch::Approx(oracle::prox_pagm_scalar(zmag, f, r2)).margin(1e-8));

    const double got_ipm = std::abs(prox_z_pipm(single(zt), single_f(f), r2)(0, 0));
    REQUIRE(got_ipm == Catch::Approx(oracle::prox_pipm_scalar(zmag, f, r2)).margin(1e-8));
  }
}

TEST_CASE("proxes preserve the input phase") {
  testutil::Rand rnd(402);
  Grid2<double> f(4, 4);
  ComplexImage zt(4, 4);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rnd.uniform(0.0, 4.0);
  rnd.fill(zt);

  for (const ComplexImage& out : {prox_z_pagm(zt, f, 0.7), prox_z_pipm(zt, f, 0.7)}) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (zt[i] == cdouble(0.0)) continue;
      const cdouble aligned = out[i] * std::conj(zt[i] / std::abs(zt[i]));
      REQUIRE(std::abs(aligned.imag()) < 1e-12);
      REQUIRE(aligned.real() >= -1e-12);
    }
  }
}

TEST_CASE("proxes fix consistent data exactly") {
  testutil::Rand rnd(403);
  for (int trial = 0; trial < 200; ++trial) {
    const cdouble zt = rnd.cplx(2.0);
    const double f = std::norm(zt);
    for (double r2 : {0.3, 1.0, 5.0}) {
      REQUIRE(std::abs(prox_z_pagm(single(zt), single_f(f), r2)(0, 0) - zt) < 1e-12);
      REQUIRE(std::abs(prox_z_pipm(single(zt), single_f(f), r2)(0, 0) - zt) < 1e-12);
    }
  }
}

TEST_CASE("proxes treat a zero input as positive real") {
  const double f = 2.25, r2 = 1.0;
  const cdouble agm = prox_z_pagm(single(cdouble(0.0)), single_f(f), r2)(0, 0);
  REQUIRE(agm.imag() == 0.0);
  REQUIRE(agm.real() == Catch::Approx(1.5 / 2.0).margin(1e-14));  // (sqrt f + 0)/(1+r2)

  const cdouble ipm = prox_z_pipm(single(cdouble(0.0)), single_f(f), r2)(0, 0);
  REQUIRE(ipm.imag() == 0.0);
  REQUIRE(ipm.real() == Catch::Approx(oracle::prox_pipm_scalar(0.0, f, r2)).margin(1e-8));
}

TEST_CASE("prox shape mismatch is rejected") {
  REQUIRE_THROWS_AS(prox_z_pagm(ComplexImage(2, 2), Grid2<double>(3, 3), 1.0),
                    std::invalid_argument);
}

TEST_CASE("shrink_p applies the isotropic three-channel threshold") {
  SECTION("worked single-voxel example") {
    GradientField p(1);
    p.x(0, 0, 0) = 3.0;
    p.y(0, 0, 0) = 4.0;
    p.z(0, 0, 0) = 0.0;
    const GradientField out = shrink_p(p, 2.5);  // magnitude 5, scale 0.5
    REQUIRE(out.x(0, 0, 0) == cdouble(1.5));
    REQUIRE(out.y(0, 0, 0) == cdouble(2.0));
    REQUIRE(out.z(0, 0, 0) == cdouble(0.0));
  }
  SECTION("zero threshold is the identity") {
    testutil::Rand rnd(404);
    GradientField p(3);
    rnd.fill(p);
    const GradientField out = shrink_p(p, 0.0);
    REQUIRE(testutil::bit_equal(out.x, p.x));
    REQUIRE(testutil::bit_equal(out.y, p.y));
    REQUIRE(testutil::bit_equal(out.z, p.z));
  }
  SECTION("below-threshold voxels vanish") {
    GradientField p(1);
    p.x(0, 0, 0) = cdouble(0.1, 0.1);
    const GradientField out = shrink_p(p, 1.0);
    REQUIRE(out.x(0, 0, 0) == cdouble(0.0));
  }
  SECTION("matches the per-voxel numerical prox of the group norm") {
    testutil::Rand rnd(405);
    GradientField p(2);
    rnd.fill(p);
    const double tau = 0.8;
    const GradientField out = shrink_p(p, tau);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      const double mag =
          std::sqrt(std::norm(p.x[i]) + std::norm(p.y[i]) + std::norm(p.z[i]));
      const double best = oracle::bisect_root(
          [&](double m) { return tau + (m - mag); }, 0.0, mag + 1.0);
      const double got =
          std::sqrt(std::norm(out.x[i]) + std::norm(out.y[i]) + std::norm(out.z[i]));
      REQUIRE(got == Catch::Approx(best).margin(1e-12));
    }
  }
  REQUIRE_THROWS_AS(shrink_p(GradientField(1), -0.5), std::invalid_argument);
}

TEST_CASE("tv_value sums the voxelwise gradient magnitude") {
  GradientField g(1);
  g.x(0, 0, 0) = cdouble(0.0, 3.0);
  g.y(0, 0, 0) = 4.0;
  REQUIRE(tv_value(g) == Catch::Approx(5.0).margin(1e-14));
}
