// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "dirreg/likelihood.hpp"
#include "dirreg/rng.hpp"

using Catch::Approx;

namespace {

dirreg::DesignMatrix design_from(const Eigen::MatrixXd& values) {
  dirreg::DesignMatrix d;
  d.values = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    d.column_names.push_back(j == 0 ? "(Intercept)" : "x" + std::to_string(j));
  return d;
}

// Synthetic context with numeric covariates and a Dirichlet response drawn
// at mildly dispersed true parameters.
dirreg::EvalContext random_context(int n, int C, int p_extra, bool varying,
                                   std::uint64_t seed) {
  dirreg::Rng rng(seed);
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1 + p_extra);
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= p_extra; ++j) X(i, j) = 0.8 * rng.normal();
  Eigen::MatrixXd Z = varying ? X : Eigen::MatrixXd::Ones(n, 1);

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(C, 1 + p_extra);
  for (int c = 0; c + 1 < C; ++c)
    for (int j = 0; j <= p_extra; ++j) beta(c, j) = 0.5 * rng.normal();
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(Z.cols());
  gamma[0] = 3.0 + 0.3 * rng.normal();
  for (Eigen::Index j = 1; j < Z.cols(); ++j) gamma[j] = 0.2 * rng.normal();

  Eigen::MatrixXd y(n, C);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = dirreg::softmax(beta * X.row(i).transpose());
    const double theta = std::exp(Z.row(i).dot(gamma));
    y.row(i) = dirreg::dirichlet_sample(mu * theta, rng).transpose();
  }

  std::vector<std::string> names;
  for (int c = 0; c < C; ++c) names.push_back("Y" + std::to_string(c + 1));
  dirreg::ModelSpec spec;
  spec.varying_precision = varying;
  return dirreg::EvalContext::make(dirreg::CompositionMatrix{y, names}, design_from(X),
                                   design_from(Z), spec);
}

Eigen::VectorXd fd_gradient(const Eigen::VectorXd& free, const dirreg::EvalContext& ctx,
                            double h = 1e-5) {
  Eigen::VectorXd g(free.size());
  for (Eigen::Index k = 0; k < free.size(); ++k) {
    Eigen::VectorXd up = free, down = free;
    up[k] += h;
    down[k] -= h;
    g[k] = (dirreg::log_posterior(up, ctx) - dirreg::log_posterior(down, ctx)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("single observation reduces to one Dirichlet density", "[likelihood]") {
  Eigen::MatrixXd y(1, 2);
  y << 0.3, 0.7;
  auto ctx = dirreg::EvalContext::make(dirreg::CompositionMatrix{y, {"a", "b"}},
                                       design_from(Eigen::MatrixXd::Ones(1, 1)),
                                       design_from(Eigen::MatrixXd::Ones(1, 1)),
                                       dirreg::ModelSpec{});
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  // beta_raw = 0, gamma = 0: mu = (1/2, 1/2), theta = 1, alpha = (1/2, 1/2)
  Eigen::VectorXd alpha(2);
  alpha << 0.5, 0.5;
  REQUIRE(dirreg::log_likelihood(zero, ctx) ==
          Approx(dirreg::dirichlet_log_density(y.row(0).transpose(), alpha)).epsilon(1e-13));
}

TEST_CASE("likelihood decomposes over rows", "[likelihood]") {
  const auto ctx = random_context(40, 3, 1, false, 101);
  dirreg::Rng rng(55);
  Eigen::VectorXd free(ctx.layout.free_size());
  for (Eigen::Index k = 0; k < free.size(); ++k) free[k] = 0.7 * rng.normal();

  double per_row_sum = 0.0;
  for (Eigen::Index i = 0; i < ctx.n(); ++i) {
    auto row_ctx = dirreg::EvalContext::make(
        dirreg::CompositionMatrix{ctx.Y.values.row(i), ctx.Y.component_names},
        design_from(ctx.X.values.row(i)), design_from(ctx.Z.values.row(i)), ctx.spec);
    per_row_sum += dirreg::log_likelihood(free, row_ctx);
  }
  REQUIRE(dirreg::log_likelihood(free, ctx) == Approx(per_row_sum).margin(1e-10));
}

TEST_CASE("prior contribution", "[likelihood]") {
  const auto ctx = random_context(25, 3, 1, false, 7);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(ctx.layout.free_size());
  // dropped normalization constants: zero parameters incur zero penalty
  REQUIRE(dirreg::log_posterior(zero, ctx) == Approx(dirreg::log_likelihood(zero, ctx)));

  Eigen::VectorXd spike = zero;
  spike[0] = 5.0;  // -theta^2 / (2 sigma^2) with sigma = 5
  REQUIRE(dirreg::log_posterior(spike, ctx) - dirreg::log_likelihood(spike, ctx) ==
          Approx(-0.5).epsilon(1e-12));

  // changing the prior sd shifts the posterior by the closed-form penalty gap
  dirreg::Rng rng(3);
  Eigen::VectorXd free(ctx.layout.free_size());
  for (Eigen::Index k = 0; k < free.size(); ++k) free[k] = rng.normal();
  auto ctx5 = ctx;
  ctx5.spec.prior_sd_beta = 5.0;
  ctx5.spec.prior_sd_theta = 5.0;
  auto ctx50 = ctx;
  ctx50.spec.prior_sd_beta = 50.0;
  ctx50.spec.prior_sd_theta = 50.0;
  const double gap = dirreg::log_posterior(free, ctx50) - dirreg::log_posterior(free, ctx5);
  const double expected = 0.5 * free.squaredNorm() * (1.0 / 25.0 - 1.0 / 2500.0);
  REQUIRE(gap == Approx(expected).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central differences", "[likelihood]") {
  struct Layout {
    int C, p_extra;
    bool varying;
  };
  const Layout layouts[] = {{2, 0, false}, {3, 1, false}, {4, 2, false},
                            {2, 1, true},  {3, 2, true},  {4, 1, true}};
  std::uint64_t seed = 900;
  for (const auto& l : layouts) {
    const auto ctx = random_context(50, l.C, l.p_extra, l.varying, seed++);
    dirreg::Rng rng(seed);
    Eigen::VectorXd free(ctx.layout.free_size());
    for (Eigen::Index k = 0; k < free.size(); ++k) free[k] = 0.6 * rng.normal();
    free[free.size() - (l.varying ? l.p_extra + 1 : 1)] += 2.5;  // lift log precision

    const Eigen::VectorXd analytic = dirreg::grad_log_posterior(free, ctx);
    const Eigen::VectorXd numeric = fd_gradient(free, ctx);
    for (Eigen::Index k = 0; k < free.size(); ++k) {
      INFO("C=" << l.C << " p_extra=" << l.p_extra << " varying=" << l.varying << " k=" << k);
      REQUIRE(std::fabs(analytic[k] - numeric[k]) <=
              1e-6 * std::max(1.0, std::fabs(analytic[k])));
    }
  }
}

TEST_CASE("flat prior limit recovers the likelihood gradient", "[likelihood]") {
  auto ctx = random_context(30, 3, 1, false, 42);
  ctx.spec.prior_sd_beta = 1e8;
  ctx.spec.prior_sd_theta = 1e8;
  dirreg::Rng rng(4);
  Eigen::VectorXd free(ctx.layout.free_size());
  for (Eigen::Index k = 0; k < free.size(); ++k) free[k] = rng.normal();
  const Eigen::VectorXd gp = dirreg::grad_log_posterior(free, ctx);
  const Eigen::VectorXd gl = dirreg::grad_log_likelihood(free, ctx);
  REQUIRE((gp - gl).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("truth beats distant perturbations", "[likelihood]") {
  // data generated at known truth: large perturbations lose likelihood
  dirreg::Rng gen(2024);
  const int n = 400, C = 3;
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 2);
  for (int i = 0; i < n; ++i) X(i, 1) = (i % 2) ? 1.0 : 0.0;
  Eigen::MatrixXd beta(C, 2);
  beta << 0.6, -0.3, 0.1, 0.2, 0.0, 0.0;
  Eigen::VectorXd gamma(1);
  gamma << 3.5;
  Eigen::MatrixXd y(n, C);
  for (int i = 0; i < n; ++i) {
    const auto mu = dirreg::softmax(beta * X.row(i).transpose());
    y.row(i) = dirreg::dirichlet_sample(mu * std::exp(gamma[0]), gen).transpose();
  }
  std::vector<std::string> names{"Y1", "Y2", "Y3"};
  const auto ctx = dirreg::EvalContext::make(dirreg::CompositionMatrix{y, names},
                                             design_from(X),
                                             design_from(Eigen::MatrixXd::Ones(n, 1)),
                                             dirreg::ModelSpec{});
  const Eigen::VectorXd truth =
      dirreg::pack_free(dirreg::Coefficients{beta, gamma}, ctx.layout);
  const double at_truth = dirreg::log_likelihood(truth, ctx);

  dirreg::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd direction(truth.size());
    for (Eigen::Index k = 0; k < truth.size(); ++k) direction[k] = rng.normal();
    direction *= 5.0 / direction.norm();
    REQUIRE(dirreg::log_likelihood(truth + direction, ctx) < at_truth);
  }
}

TEST_CASE("gradient antisymmetry under swapping symmetric responses", "[likelihood]") {
  dirreg::Rng gen(31);
  const int n = 50;
  Eigen::MatrixXd y(n, 2);
  for (int i = 0; i < n; ++i) {
    const double v = 0.2 + 0.6 * gen.uniform();
    y(i, 0) = v;
    y(i, 1) = 1.0 - v;
  }
  Eigen::MatrixXd swapped = y;
  swapped.col(0).swap(swapped.col(1));

  const auto ones = Eigen::MatrixXd::Ones(n, 1);
  const auto ctx_a = dirreg::EvalContext::make(dirreg::CompositionMatrix{y, {"u", "v"}},
                                               design_from(ones), design_from(ones),
                                               dirreg::ModelSpec{});
  const auto ctx_b = dirreg::EvalContext::make(dirreg::CompositionMatrix{swapped, {"u", "v"}},
                                               design_from(ones), design_from(ones),
                                               dirreg::ModelSpec{});
  Eigen::VectorXd free(2);
  free << 0.4, 2.0;  // beta intercept, log precision
  Eigen::VectorXd negated = free;
  negated[0] = -free[0];
  const double g_a = dirreg::grad_log_likelihood(free, ctx_a)[0];
  const double g_b = dirreg::grad_log_likelihood(negated, ctx_b)[0];
  REQUIRE(g_a == Approx(-g_b).epsilon(1e-10));
}

TEST_CASE("posterior is invariant under repacking", "[likelihood]") {
  const auto ctx = random_context(20, 4, 1, true, 64);
  dirreg::Rng rng(12);
  Eigen::VectorXd free(ctx.layout.free_size());
  for (Eigen::Index k = 0; k < free.size(); ++k) free[k] = rng.normal();
  const Eigen::VectorXd roundtrip =
      dirreg::pack_free(dirreg::unpack_free(free, ctx.layout), ctx.layout);
  REQUIRE(dirreg::log_posterior(free, ctx) == dirreg::log_posterior(roundtrip, ctx));
}

TEST_CASE("non-finite parameters are rejected", "[likelihood]") {
  const auto ctx = random_context(10, 2, 0, false, 5);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(ctx.layout.free_size());
  bad[0] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(dirreg::log_posterior(bad, ctx), dirreg::Error);
  bad[0] = std::nan("");
  REQUIRE_THROWS_AS(dirreg::grad_log_posterior(bad, ctx), dirreg::Error);
}
