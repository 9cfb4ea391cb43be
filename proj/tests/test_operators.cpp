#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ptychotomo/operators.hpp"

using namespace ptychotomo;

TEST_CASE("extract_window selects the subimage and rejects out-of-bounds corners") {
  ComplexImage img(6, 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) img(r, c) = cdouble(r, c);

  const ComplexImage w = extract_window(img, 2, 3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) REQUIRE(w(r, c) == cdouble(2 + r, 3 + c));

  REQUIRE_THROWS_AS(extract_window(img, 4, 0, 3), std::out_of_range);
  REQUIRE_THROWS_AS(extract_window(img, 0, 5, 3), std::out_of_range);
  REQUIRE_THROWS_AS(extract_window(img, -1, 0, 3), std::out_of_range);
}

TEST_CASE("embed_window is the adjoint of extract_window") {
  testutil::Rand rnd(201);
  ComplexImage img(9, 9), win(4, 4);
  rnd.fill(img);
  rnd.fill(win);
  const int r0 = 3, c0 = 5;

  const ComplexImage zero_embed = embed_window(ComplexImage(4, 4), r0, c0, 9, 9);
  REQUIRE(norm2(zero_embed) == 0.0);

  const cdouble lhs = cdot(extract_window(img, r0, c0, 4), win);
  const cdouble rhs = cdot(img, embed_window(win, r0, c0, 9, 9));
  REQUIRE(lhs == rhs);  // pure index selection: exact
}

TEST_CASE("zero-angle rotation is the identity, bit for bit") {
  testutil::Rand rnd(202);
  ComplexVolume u(7);
  rnd.fill(u);
  REQUIRE(testutil::bit_equal(rotate_volume(u, 0.0), u));
  REQUIRE(testutil::bit_equal(rotate_adjoint(u, 0.0), u));
}

TEST_CASE("quarter-turn rotation is an exact index permutation") {
  testutil::Rand rnd(203);
  for (int n : {8, 9}) {
    ComplexVolume u(n);
    rnd.fill(u);
    const ComplexVolume got = rotate_volume(u, std::numbers::pi / 2.0);
    REQUIRE(testutil::bit_equal(got, oracle::quarter_turn(u)));
  }
}

TEST_CASE("rotation adjoint satisfies the dot-product identity") {
  testutil::Rand rnd(204);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rnd.integer(3, 12);
    const double theta = rnd.uniform(0.0, std::numbers::pi);
    const RotationStencil st = make_rotation_stencil(n, theta);
    ComplexVolume a(n), b(n);
    rnd.fill(a);
    rnd.fill(b);
    const cdouble lhs = cdot(rotate_volume(a, st), b);
    const cdouble rhs = cdot(a, rotate_adjoint(b, st));
    REQUIRE(testutil::adjoint_defect(lhs, rhs, norm2(a) * norm2(b)) < 1e-12);
  }
}

TEST_CASE("rotation maps out-of-grid samples to zero") {
  const int n = 9;
  ComplexVolume u(n, cdouble(1.0));
  const ComplexVolume r = rotate_volume(u, 0.6);
  // the corner sample leaves the grid for any substantial rotation
  REQUIRE(std::abs(r(0, 0, 4)) < 1.0);
  double mn = 1e300, mx = -1e300;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mn = std::min(mn, r[i].real());
    mx = std::max(mx, r[i].real());
  }
  REQUIRE(mn >= 0.0);
  REQUIRE(mx <= 1.0 + 1e-12);
}

TEST_CASE("xray_project sums along y and backproject is its adjoint") {
  const int n = 5;
  SECTION("constant volume") {
    ComplexVolume u(n, cdouble(0.7, -0.1));
    const ComplexImage img = xray_project(u);
    for (std::size_t i = 0; i < img.size(); ++i)
      REQUIRE(std::abs(img[i] - cdouble(0.7, -0.1) * double(n)) < 1e-14);
  }
  SECTION("single voxel lands at (z, x)") {
    ComplexVolume u(n);
    u(1, 3, 4) = 1.0;
    const ComplexImage img = xray_project(u);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        REQUIRE(img(r, c) == ((r == 4 && c == 1) ? cdouble(1.0) : cdouble(0.0)));
  }
  SECTION("adjoint identity and Q Q^T = n I") {
    testutil::Rand rnd(205);
    ComplexVolume u(n);
    ComplexImage w(n, n);
    rnd.fill(u);
    rnd.fill(w);
    const cdouble lhs = cdot(xray_project(u), w);
    const cdouble rhs = cdot(u, backproject(w, n));
    REQUIRE(testutil::adjoint_defect(lhs, rhs, norm2(u) * norm2(w)) < 1e-13);

    const ComplexImage qqt = xray_project(backproject(w, n));
    for (std::size_t i = 0; i < w.size(); ++i)
      REQUIRE(std::abs(qqt[i] - double(n) * w[i]) < 1e-12);
  }
}

TEST_CASE("fused rotate-project equals the composed operators bit for bit") {
  testutil::Rand rnd(206);
  for (double theta : {0.0, 0.37, 1.2, std::numbers::pi / 2.0, 2.9}) {
    const int n = 11;
    const RotationStencil st = make_rotation_stencil(n, theta);
    ComplexVolume u(n);
    rnd.fill(u);

    ComplexImage fused;
    rotate_project_into(u, st, fused);
    REQUIRE(testutil::bit_equal(fused, xray_project(rotate_volume(u, st))));

    ComplexImage img(n, n);
    rnd.fill(img);
    ComplexVolume fused_adj(n);
    backproject_rotate_adjoint_add(img, st, fused_adj);
    REQUIRE(testutil::bit_equal(fused_adj, rotate_adjoint(backproject(img, n), st)));
  }
}

TEST_CASE("backproject_rotate_adjoint_add accumulates") {
  testutil::Rand rnd(207);
  const int n = 6;
  const RotationStencil st = make_rotation_stencil(n, 0.8);
  ComplexImage img(n, n);
  rnd.fill(img);
  ComplexVolume base(n);
  rnd.fill(base);

  ComplexVolume acc = base;
  backproject_rotate_adjoint_add(img, st, acc);
  ComplexVolume expect = rotate_adjoint(backproject(img, n), st);
  axpy(cdouble(1.0), base, expect);
  REQUIRE(testutil::max_abs_diff(acc, expect) < 1e-14);
}

TEST_CASE("gradient3 uses forward differences with a zero last difference") {
  const int n = 4;
  ComplexVolume u(n);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) u(x, y, z) = cdouble(x + 10 * y + 100 * z);
  const GradientField g = gradient3(u);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        REQUIRE(g.x(x, y, z) == (x + 1 < n ? cdouble(1.0) : cdouble(0.0)));
        REQUIRE(g.y(x, y, z) == (y + 1 < n ? cdouble(10.0) : cdouble(0.0)));
        REQUIRE(g.z(x, y, z) == (z + 1 < n ? cdouble(100.0) : cdouble(0.0)));
      }
}

TEST_CASE("divergence3 is the negative adjoint of gradient3") {
  testutil::Rand rnd(208);
  for (int n : {3, 6}) {
    ComplexVolume u(n);
    GradientField p(n);
    rnd.fill(u);
    rnd.fill(p);
    const cdouble lhs = cdot(gradient3(u), p);
    const cdouble rhs = -cdot(u, divergence3(p));
    REQUIRE(testutil::adjoint_defect(lhs, rhs, norm2(u) * norm2(p)) < 1e-13);
  }
}

TEST_CASE("laplacian3 is symmetric negative semidefinite") {
  testutil::Rand rnd(209);
  const int n = 5;
  ComplexVolume a(n), b(n);
  rnd.fill(a);
  rnd.fill(b);
  const cdouble lhs = cdot(laplacian3(a), b);
  const cdouble rhs = cdot(a, laplacian3(b));
  REQUIRE(std::abs(lhs - rhs) < 1e-12 * norm2(a) * norm2(b));
  REQUIRE(std::real(cdot(laplacian3(a), a)) <= 1e-12);
  // constants are in the null space
  REQUIRE(norm2(laplacian3(ComplexVolume(n, cdouble(2.5)))) < 1e-14);
}
