// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "dirreg/posterior.hpp"
#include "dirreg/rng.hpp"

using Catch::Approx;

namespace {

// Layout of a 4-component, two-column design with the last component as
// reference: 7 free parameters.
const dirreg::CoefficientLayout kLayout{4, 2, 1, 3};

Eigen::VectorXd golden_free() {
  Eigen::VectorXd free(7);
  free << 0.63010700, -0.25191609, 0.06274025, -0.30952737, -0.48628655, -0.18189666,
      4.22272495;
  return free;
}

}  // namespace

TEST_CASE("expected values include the reference component", "[posterior]") {
  Eigen::MatrixXd draws(1, 7);
  draws.row(0) = golden_free().transpose();

  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const auto ev = dirreg::expected_values_per_draw(draws, x, kLayout, "group A");
  REQUIRE(ev.values.rows() == 1);
  REQUIRE(ev.values(0, 0) == Approx(0.4120296).margin(1e-6));
  REQUIRE(ev.values(0, 1) == Approx(0.2336276).margin(1e-6));
  REQUIRE(ev.values(0, 2) == Approx(0.1349227).margin(1e-6));
  REQUIRE(ev.values(0, 3) == Approx(0.2194201).margin(1e-6));
  REQUIRE(ev.values.row(0).sum() == Approx(1.0).margin(1e-12));

  x << 1.0, 1.0;
  const auto ev_b = dirreg::expected_values_per_draw(draws, x, kLayout, "group B");
  REQUIRE(ev_b.values(0, 0) == Approx(0.3888657).margin(1e-6));
  REQUIRE(ev_b.values(0, 1) == Approx(0.2081494).margin(1e-6));
  REQUIRE(ev_b.values(0, 2) == Approx(0.1365731).margin(1e-6));
  REQUIRE(ev_b.values(0, 3) == Approx(0.2664118).margin(1e-6));
}

TEST_CASE("zero draws give the uniform simplex", "[posterior]") {
  Eigen::MatrixXd draws = Eigen::MatrixXd::Zero(5, 7);
  Eigen::VectorXd x(2);
  x << 1.0, 0.5;
  const auto ev = dirreg::expected_values_per_draw(draws, x, kLayout);
  for (Eigen::Index s = 0; s < 5; ++s)
    for (int c = 0; c < 4; ++c) REQUIRE(ev.values(s, c) == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("renormalization adjustment", "[posterior]") {
  Eigen::MatrixXd raw(3, 3);
  raw << 0.2, 0.3, 0.5,   // already a simplex: untouched
         0.2, 0.2, 0.2,
         1.0, 2.0, 3.0;
  const auto adjusted = dirreg::renormalize_adjustment(raw);
  REQUIRE((adjusted.row(0) - raw.row(0)).lpNorm<Eigen::Infinity>() < 1e-15);
  REQUIRE(adjusted(1, 0) == Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(adjusted(2, 0) == Approx(1.0 / 6.0).epsilon(1e-14));
  REQUIRE(adjusted(2, 2) == Approx(0.5).epsilon(1e-14));

  Eigen::MatrixXd bad(1, 2);
  bad << 0.0, 1.0;
  REQUIRE_THROWS_AS(dirreg::renormalize_adjustment(bad), dirreg::Error);
}

TEST_CASE("renormalization is the identity on softmax rows", "[posterior]") {
  dirreg::Rng rng(5);
  Eigen::MatrixXd draws(200, 7);
  for (Eigen::Index s = 0; s < draws.rows(); ++s)
    for (int k = 0; k < 7; ++k) draws(s, k) = rng.normal();
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const auto ev = dirreg::expected_values_per_draw(draws, x, kLayout);
  const auto adjusted = dirreg::renormalize_adjustment(ev.values);
  REQUIRE((adjusted - ev.values).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("quantile with inclusive interpolation", "[posterior]") {
  std::vector<double> ladder;
  for (int i = 1; i <= 100; ++i) ladder.push_back(static_cast<double>(i));
  REQUIRE(dirreg::quantile(ladder, 0.05) == Approx(5.95).epsilon(1e-13));
  REQUIRE(dirreg::quantile(ladder, 0.95) == Approx(95.05).epsilon(1e-13));
  REQUIRE(dirreg::quantile(ladder, 0.0) == 1.0);
  REQUIRE(dirreg::quantile(ladder, 1.0) == 100.0);

  Eigen::VectorXd samples(4);
  samples << 4.0, 1.0, 3.0, 2.0;  // order must not matter
  REQUIRE(dirreg::quantile(samples, 0.5) == Approx(2.5));
}

TEST_CASE("credible intervals", "[posterior]") {
  Eigen::VectorXd ladder(100);
  for (int i = 0; i < 100; ++i) ladder[i] = i + 1.0;
  const auto [lo, hi] = dirreg::credible_interval(ladder, 0.9);
  REQUIRE(lo == Approx(5.95).epsilon(1e-13));
  REQUIRE(hi == Approx(95.05).epsilon(1e-13));

  const auto constant = dirreg::credible_interval(Eigen::VectorXd::Constant(10, 3.25), 0.95);
  REQUIRE(constant.first == 3.25);
  REQUIRE(constant.second == 3.25);

  dirreg::Rng rng(21);
  Eigen::VectorXd normal_draws(4000);
  for (int i = 0; i < 4000; ++i) normal_draws[i] = rng.normal();
  const auto [nlo, nhi] = dirreg::credible_interval(normal_draws, 0.95);
  REQUIRE(nlo == Approx(-1.96).margin(0.15));
  REQUIRE(nhi == Approx(1.96).margin(0.15));

  // widening the level widens the interval
  const auto narrow = dirreg::credible_interval(normal_draws, 0.5);
  REQUIRE(narrow.first > nlo);
  REQUIRE(narrow.second < nhi);

  Eigen::VectorXd single(1);
  single << 1.0;
  REQUIRE_THROWS_AS(dirreg::credible_interval(single, 0.95), dirreg::Error);
}
