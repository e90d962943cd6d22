// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "dirreg/model.hpp"
#include "dirreg/rng.hpp"

using Catch::Approx;

namespace {

// Fitted two-group coefficient matrix used across the golden checks
// (components Alb, Pre.Alb, Glob.A with Glob.B as reference).
Eigen::MatrixXd golden_beta() {
  Eigen::MatrixXd beta(4, 2);
  beta << 0.63010700, -0.25191609,
          0.06274025, -0.30952737,
         -0.48628655, -0.18189666,
          0.0, 0.0;
  return beta;
}

}  // namespace

TEST_CASE("softmax basics", "[model]") {
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(4);
  const auto mu = dirreg::softmax(flat);
  for (int c = 0; c < 4; ++c) REQUIRE(mu[c] == Approx(0.25).epsilon(1e-14));
  REQUIRE(mu.sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("softmax reproduces the fitted group means", "[model]") {
  Eigen::VectorXd eta(4);
  eta << 0.63010700, 0.06274025, -0.48628655, 0.0;
  const auto mu = dirreg::softmax(eta);
  REQUIRE(mu[0] == Approx(0.4120296).margin(1e-6));
  REQUIRE(mu[1] == Approx(0.2336276).margin(1e-6));
  REQUIRE(mu[2] == Approx(0.1349227).margin(1e-6));
  REQUIRE(mu[3] == Approx(0.2194201).margin(1e-6));

  eta << 0.37819091, -0.24678712, -0.66818321, 0.0;
  const auto mu2 = dirreg::softmax(eta);
  REQUIRE(mu2[0] == Approx(0.3888657).margin(1e-6));
  REQUIRE(mu2[1] == Approx(0.2081494).margin(1e-6));
  REQUIRE(mu2[2] == Approx(0.1365731).margin(1e-6));
  REQUIRE(mu2[3] == Approx(0.2664118).margin(1e-6));
}

TEST_CASE("softmax shift invariance", "[model]") {
  dirreg::Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd eta(5);
    for (int c = 0; c < 5; ++c) eta[c] = 4.0 * rng.normal();
    const double shift = 50.0 * rng.normal();
    const auto a = dirreg::softmax(eta);
    const auto b = dirreg::softmax((eta.array() + shift).matrix());
    REQUIRE((a - b).lpNorm<Eigen::Infinity>() < 1e-12);
    REQUIRE(a.sum() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("softmax rejects non-finite and saturating input", "[model]") {
  Eigen::VectorXd eta(2);
  eta << std::nan(""), 0.0;
  REQUIRE_THROWS_AS(dirreg::softmax(eta), dirreg::Error);
  eta << 800.0, 0.0;  // spread beyond exp underflow
  REQUIRE_THROWS_AS(dirreg::softmax(eta), dirreg::Error);
}

TEST_CASE("linear predictors with the zero reference row", "[model]") {
  dirreg::Coefficients coeffs{golden_beta(), Eigen::VectorXd::Zero(1)};
  Eigen::MatrixXd X(2, 2);
  X << 1, 0,
       1, 1;
  const auto eta = dirreg::linear_predictors(X, coeffs);
  REQUIRE(eta(0, 0) == Approx(0.63010700).epsilon(1e-12));
  REQUIRE(eta(0, 1) == Approx(0.06274025).epsilon(1e-12));
  REQUIRE(eta(0, 2) == Approx(-0.48628655).epsilon(1e-12));
  REQUIRE(eta(0, 3) == 0.0);
  REQUIRE(eta(1, 0) == Approx(0.37819091).epsilon(1e-10));
  REQUIRE(eta(1, 1) == Approx(-0.24678712).epsilon(1e-10));
  REQUIRE(eta(1, 2) == Approx(-0.66818321).epsilon(1e-10));
  REQUIRE(eta(1, 3) == 0.0);

  dirreg::Coefficients zero{Eigen::MatrixXd::Zero(4, 2), Eigen::VectorXd::Zero(1)};
  REQUIRE(dirreg::linear_predictors(X, zero).isZero(0.0));
}

TEST_CASE("precision link", "[model]") {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd gamma(1);
  gamma << 0.0;
  REQUIRE((dirreg::precision_values(Z, gamma).array() == 1.0).all());

  gamma << 4.22272495;
  const auto theta = dirreg::precision_values(Z, gamma);
  for (int i = 0; i < 3; ++i) REQUIRE(theta[i] == Approx(68.21912494832026).epsilon(1e-12));

  Eigen::MatrixXd Z2(1, 2);
  Z2 << 1, 1;
  Eigen::VectorXd gamma2(2);
  gamma2 << 1, 1;
  REQUIRE(dirreg::precision_values(Z2, gamma2)[0] ==
          Approx(std::exp(2.0)).epsilon(1e-14));

  gamma << 1000.0;
  REQUIRE_THROWS_AS(dirreg::precision_values(Z, gamma), dirreg::Error);
}

TEST_CASE("alpha from mean and precision", "[model]") {
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.5;
  const auto p = dirreg::alpha_from(mu, 10.0);
  REQUIRE(p.alpha[0] == Approx(5.0));
  REQUIRE(p.alpha0 == Approx(10.0));

  mu << 0.25, 0.75;
  const auto q = dirreg::alpha_from(mu, 8.0);
  REQUIRE(q.alpha[0] == Approx(2.0));
  REQUIRE(q.alpha[1] == Approx(6.0));

  // mean recovers mu for arbitrary valid inputs
  dirreg::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd eta(4);
    for (int c = 0; c < 4; ++c) eta[c] = rng.normal();
    const auto m = dirreg::softmax(eta);
    const double theta = std::exp(2.0 * rng.normal());
    const auto back = dirreg::dirichlet_mean(dirreg::alpha_from(m, theta).alpha);
    REQUIRE((back - m).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  REQUIRE_THROWS_AS(dirreg::alpha_from(mu, 0.0), dirreg::Error);
}

TEST_CASE("free vector packing", "[model]") {
  const dirreg::CoefficientLayout layout{4, 2, 1, 3};
  REQUIRE(layout.free_size() == 7);

  const dirreg::Coefficients zero{Eigen::MatrixXd::Zero(4, 2), Eigen::VectorXd::Zero(1)};
  REQUIRE(dirreg::pack_free(zero, layout).isZero(0.0));

  dirreg::Rng rng(17);
  Eigen::VectorXd free(7);
  for (int k = 0; k < 7; ++k) free[k] = rng.normal();
  const auto coeffs = dirreg::unpack_free(free, layout);
  REQUIRE(coeffs.beta.row(3).isZero(0.0));
  const auto packed = dirreg::pack_free(coeffs, layout);
  REQUIRE((packed - free).lpNorm<Eigen::Infinity>() == 0.0);

  // packing order: non-reference beta rows ascending, row-major, then gamma
  REQUIRE(coeffs.beta(0, 0) == free[0]);
  REQUIRE(coeffs.beta(0, 1) == free[1]);
  REQUIRE(coeffs.beta(2, 1) == free[5]);
  REQUIRE(coeffs.gamma[0] == free[6]);

  // middle reference component
  const dirreg::CoefficientLayout mid{3, 2, 2, 1};
  REQUIRE(mid.free_size() == 6);
  Eigen::VectorXd free6(6);
  for (int k = 0; k < 6; ++k) free6[k] = rng.normal();
  const auto c6 = dirreg::unpack_free(free6, mid);
  REQUIRE(c6.beta.row(1).isZero(0.0));
  REQUIRE(c6.beta(2, 0) == free6[2]);
  REQUIRE((dirreg::pack_free(c6, mid) - free6).lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::VectorXd wrong(5);
  REQUIRE_THROWS_AS(dirreg::unpack_free(wrong, layout), dirreg::Error);
}
