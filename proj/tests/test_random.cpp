#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ptychotomo/random.hpp"

using namespace ptychotomo;

TEST_CASE("uniform stream lies in (0,1] and replays exactly") {
  StreamRng a(42), b(42), c(43);
  bool diverged = false;
  for (int i = 0; i < 10000; ++i) {
    const double u = a.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
    REQUIRE(u == b.uniform());
    if (u != c.uniform()) diverged = true;
  }
  REQUIRE(diverged);
}

TEST_CASE("derive_stream_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_stream_seed(7, s));
  REQUIRE(seen.size() == 1000);
  REQUIRE(derive_stream_seed(7, 0) != derive_stream_seed(8, 0));
}

TEST_CASE("poisson sampling is deterministic and exact at zero mean") {
  StreamRng rng(5);
  for (int i = 0; i < 100; ++i) REQUIRE(poisson_sample(0.0, rng) == 0);

  StreamRng r1(99), r2(99);
  for (int i = 0; i < 2000; ++i) REQUIRE(poisson_sample(3.7, r1) == poisson_sample(3.7, r2));
  for (int i = 0; i < 2000; ++i) REQUIRE(poisson_sample(250.0, r1) == poisson_sample(250.0, r2));

  REQUIRE_THROWS_AS(poisson_sample(-1.0, r1), std::invalid_argument);
}

TEST_CASE("poisson sample moments match the rate") {
  SECTION("inversion regime, rate 5") {
    StreamRng rng(2024);
    const int draws = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double k = static_cast<double>(poisson_sample(5.0, rng));
      sum += k;
      sumsq += k * k;
    }
    const double mean = sum / draws;
    const double var = sumsq / draws - mean * mean;
    REQUIRE(std::abs(mean - 5.0) < 0.01);
    REQUIRE(std::abs(var - 5.0) < 0.05);
  }
  SECTION("rejection regime, rate 64") {
    StreamRng rng(2025);
    const int draws = 400000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double k = static_cast<double>(poisson_sample(64.0, rng));
      sum += k;
      sumsq += k * k;
    }
    const double mean = sum / draws;
    const double var = sumsq / draws - mean * mean;
    REQUIRE(std::abs(mean - 64.0) < 0.1);
    REQUIRE(std::abs(var - 64.0) < 1.0);
  }
}
