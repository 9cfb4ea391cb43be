#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ptychotomo/fft.hpp"

using namespace ptychotomo;

TEST_CASE("dft2 matches the direct double-sum transform") {
  testutil::Rand rnd(101);
  for (int m : {2, 6, 8, 12, 16}) {
    ComplexImage in(m, m);
    rnd.fill(in);
    const ComplexImage fast = dft2_unitary(in);
    const ComplexImage slow = oracle::naive_dft2(in, false);
    REQUIRE(testutil::max_abs_diff(fast, slow) < 1e-12);

    const ComplexImage ifast = idft2_unitary(in);
    const ComplexImage islow = oracle::naive_dft2(in, true);
    REQUIRE(testutil::max_abs_diff(ifast, islow) < 1e-12);
  }
}

TEST_CASE("dft2 is unitary") {
  testutil::Rand rnd(102);
  for (int m : {4, 9, 32}) {
    ComplexImage in(m, m);
    rnd.fill(in);
    const ComplexImage out = dft2_unitary(in);
    REQUIRE(std::abs(norm2(out) - norm2(in)) < 1e-12 * norm2(in));

    const ComplexImage back = idft2_unitary(out);
    REQUIRE(testutil::max_abs_diff(back, in) < 1e-12);

    // unitarity makes the inverse the adjoint: <F a, b> = <a, F^-1 b>
    ComplexImage b(m, m);
    rnd.fill(b);
    const cdouble lhs = cdot(dft2_unitary(in), b);
    const cdouble rhs = cdot(in, idft2_unitary(b));
    REQUIRE(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("dft2 of a unit impulse is flat") {
  ComplexImage in(8, 8);
  in(0, 0) = 1.0;
  const ComplexImage out = dft2_unitary(in);
  for (std::size_t i = 0; i < out.size(); ++i)
    REQUIRE(std::abs(out[i] - cdouble(1.0 / 8.0)) < 1e-14);
}

TEST_CASE("dft2 rejects non-square or empty input") {
  REQUIRE_THROWS_AS(dft2_unitary(ComplexImage(3, 4)), std::invalid_argument);
  REQUIRE_THROWS_AS(dft2_unitary(ComplexImage()), std::invalid_argument);
  REQUIRE_THROWS_AS(idft2_unitary(ComplexImage(2, 5)), std::invalid_argument);
}

TEST_CASE("dft2 of size one is the identity") {
  ComplexImage in(1, 1);
  in(0, 0) = cdouble(0.3, -0.7);
  REQUIRE(dft2_unitary(in)(0, 0) == in(0, 0));
}
