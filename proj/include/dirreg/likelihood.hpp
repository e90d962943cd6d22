// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_LIKELIHOOD_HPP
#define DIRREG_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>

#include "dirreg/composition.hpp"
#include "dirreg/design.hpp"
#include "dirreg/errors.hpp"
#include "dirreg/model.hpp"
#include "dirreg/special.hpp"

namespace dirreg {

// Immutable evaluation context: response, both design matrices, the layout of
// the free parameter vector, and cached log responses.  Construction fails
// unless the response is strictly interior, so log Y is always finite.
struct EvalContext {
  CompositionMatrix Y;
  DesignMatrix X;  // mean design
  DesignMatrix Z;  // precision design
  ModelSpec spec;
  CoefficientLayout layout;
  Eigen::MatrixXd log_y;

  static EvalContext make(CompositionMatrix y, DesignMatrix x, DesignMatrix z, ModelSpec spec) {
    require(y.n() == x.n() && y.n() == z.n(), "DimensionMismatch",
            "response and design matrices disagree on row count");
    CoefficientLayout layout;
    layout.C = static_cast<int>(y.C());
    layout.p_beta = static_cast<int>(x.p());
    layout.p_gamma = static_cast<int>(z.p());
    layout.reference = spec.reference_for(layout.C);

    Eigen::MatrixXd log_y(y.n(), y.C());
    for (Eigen::Index i = 0; i < y.n(); ++i)
      for (Eigen::Index c = 0; c < y.C(); ++c) {
        const double v = y.values(i, c);
        require(v > 0.0 && v < 1.0, "BoundaryY",
                "response entries must be strictly interior; apply the zero transform first");
        log_y(i, c) = std::log(v);
      }
    return EvalContext{std::move(y), std::move(x), std::move(z), std::move(spec),
                       layout, std::move(log_y)};
  }

  Eigen::Index n() const { return Y.n(); }
};

struct LogDensityResult {
  double value = 0.0;
  std::optional<Eigen::VectorXd> gradient;
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Core evaluation of the Dirichlet regression log density.  Out-of-range
// parameter regions (precision overflow, softmax underflow) yield -inf with
// a zero gradient instead of throwing: the optimizer's line search and the
// sampler's divergence handling both expect a rejectable value there.
inline LogDensityResult eval_log_density(const Eigen::VectorXd& free, const EvalContext& ctx,
                                         bool include_prior, bool want_grad) {
  for (Eigen::Index k = 0; k < free.size(); ++k)
    require(std::isfinite(free[k]), "NonFiniteParameters",
            "free parameter " + std::to_string(k + 1) + " is not finite");

  const CoefficientLayout& lay = ctx.layout;
  const Coefficients coeffs = unpack_free(free, lay);

  LogDensityResult out;
  out.value = 0.0;
  Eigen::VectorXd grad;
  if (want_grad) grad = Eigen::VectorXd::Zero(lay.free_size());

  const Eigen::MatrixXd eta = ctx.X.values * coeffs.beta.transpose();  // n x C
  const Eigen::VectorXd log_theta = ctx.Z.values * coeffs.gamma;       // n

  Eigen::VectorXd mu(lay.C), g(lay.C);
  Eigen::MatrixXd grad_beta;
  Eigen::VectorXd grad_gamma;
  if (want_grad) {
    grad_beta = Eigen::MatrixXd::Zero(lay.C, lay.p_beta);
    grad_gamma = Eigen::VectorXd::Zero(lay.p_gamma);
  }

  for (Eigen::Index i = 0; i < ctx.n(); ++i) {
    if (log_theta[i] > 690.0 || log_theta[i] < -690.0) {
      out.value = kNegInf;
      break;
    }
    const double theta = std::exp(log_theta[i]);

    const double eta_max = eta.row(i).maxCoeff();
    double sum = 0.0;
    bool interior = true;
    for (int c = 0; c < lay.C; ++c) {
      const double e = std::exp(eta(i, c) - eta_max);
      if (e <= 0.0) interior = false;
      mu[c] = e;
      sum += e;
    }
    if (!interior) {
      out.value = kNegInf;
      break;
    }
    mu /= sum;

    // log f = lgamma(theta) - sum_c lgamma(alpha_c) + sum_c (alpha_c - 1) log y_c
    double row_value = lgamma(theta);
    double gbar = 0.0;
    for (int c = 0; c < lay.C; ++c) {
      const double alpha_c = mu[c] * theta;
      if (alpha_c <= 0.0 || !std::isfinite(alpha_c)) {
        interior = false;
        break;
      }
      row_value += -lgamma(alpha_c) + (alpha_c - 1.0) * ctx.log_y(i, c);
      if (want_grad) {
        g[c] = ctx.log_y(i, c) - digamma(alpha_c) + digamma(theta);
        gbar += mu[c] * g[c];
      }
    }
    if (!interior || !std::isfinite(row_value)) {
      out.value = kNegInf;
      break;
    }
    out.value += row_value;

    if (want_grad) {
      for (int c = 0; c < lay.C; ++c) {
        if (c == lay.reference) continue;
        const double deta = theta * mu[c] * (g[c] - gbar);
        grad_beta.row(c) += deta * ctx.X.values.row(i);
      }
      grad_gamma += (theta * gbar) * ctx.Z.values.row(i).transpose();
    }
  }

  if (!std::isfinite(out.value)) {
    out.value = kNegInf;
    if (want_grad) out.gradient = Eigen::VectorXd::Zero(lay.free_size());
    return out;
  }

  if (include_prior) {
    const double var_beta = ctx.spec.prior_sd_beta * ctx.spec.prior_sd_beta;
    const double var_gamma = ctx.spec.prior_sd_theta * ctx.spec.prior_sd_theta;
    const int n_beta_free = (lay.C - 1) * lay.p_beta;
    // Normal log prior with the additive constants dropped.
    for (int k = 0; k < lay.free_size(); ++k) {
      const double var = (k < n_beta_free) ? var_beta : var_gamma;
      out.value -= 0.5 * free[k] * free[k] / var;
    }
    if (want_grad) {
      Eigen::VectorXd prior_grad(lay.free_size());
      for (int k = 0; k < lay.free_size(); ++k) {
        const double var = (k < n_beta_free) ? var_beta : var_gamma;
        prior_grad[k] = -free[k] / var;
      }
      grad = pack_free(Coefficients{grad_beta, grad_gamma}, lay) + prior_grad;
      out.gradient = std::move(grad);
      return out;
    }
  } else if (want_grad) {
    grad = pack_free(Coefficients{grad_beta, grad_gamma}, lay);
    out.gradient = std::move(grad);
    return out;
  }
  return out;
}

}  // namespace detail

inline double log_likelihood(const Eigen::VectorXd& free, const EvalContext& ctx) {
  return detail::eval_log_density(free, ctx, /*include_prior=*/false, /*want_grad=*/false).value;
}

inline double log_posterior(const Eigen::VectorXd& free, const EvalContext& ctx) {
  return detail::eval_log_density(free, ctx, /*include_prior=*/true, /*want_grad=*/false).value;
}

inline Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& free, const EvalContext& ctx) {
  auto result = detail::eval_log_density(free, ctx, /*include_prior=*/true, /*want_grad=*/true);
  return *result.gradient;
}

inline Eigen::VectorXd grad_log_likelihood(const Eigen::VectorXd& free, const EvalContext& ctx) {
  auto result = detail::eval_log_density(free, ctx, /*include_prior=*/false, /*want_grad=*/true);
  return *result.gradient;
}

}  // namespace dirreg

#endif  // DIRREG_LIKELIHOOD_HPP
