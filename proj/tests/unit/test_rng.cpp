// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dirreg/rng.hpp"

TEST_CASE("same seed, same stream", "[rng]") {
  dirreg::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are distinct and reproducible", "[rng]") {
  dirreg::Rng a = dirreg::Rng::derive(7, 0);
  dirreg::Rng b = dirreg::Rng::derive(7, 1);
  dirreg::Rng a2 = dirreg::Rng::derive(7, 0);
  bool any_difference = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    if (va != b.next_u64()) any_difference = true;
    REQUIRE(va == a2.next_u64());
  }
  REQUIRE(any_difference);
}

TEST_CASE("uniform stays inside the open interval", "[rng]") {
  dirreg::Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal moments", "[rng]") {
  dirreg::Rng rng(3);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  REQUIRE(std::fabs(mean) < 0.01);       // ~4.5 MC standard errors
  REQUIRE(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("gamma moments", "[rng]") {
  for (double shape : {0.4, 1.0, 3.0, 17.5}) {
    dirreg::Rng rng(11);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gamma(shape);
    const double mean = sum / n;
    const double se = std::sqrt(shape / n);  // Var(Gamma(a,1)) = a
    INFO("shape = " << shape);
    REQUIRE(std::fabs(mean - shape) < 5.0 * se);
  }
}

TEST_CASE("gamma rejects non-positive shape", "[rng]") {
  dirreg::Rng rng(5);
  REQUIRE_THROWS_AS(rng.gamma(0.0), dirreg::Error);
  REQUIRE_THROWS_AS(rng.gamma(-2.0), dirreg::Error);
}
