// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_INFER_ML_HPP
#define DIRREG_INFER_ML_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dirreg/errors.hpp"
#include "dirreg/likelihood.hpp"
#include "dirreg/rng.hpp"
#include "dirreg/special.hpp"

namespace dirreg {

struct MLOptions {
  int max_iter = 500;
  double tol = 1e-8;       // gradient max-norm at convergence
  int n_starts = 4;        // first start is the zero vector
  int lbfgs_memory = 10;
  bool use_prior = false;  // true = MAP objective instead of ML
  std::uint64_t seed = 20240817;
};

struct MLFit {
  Coefficients coefficients;
  Eigen::VectorXd free;                      // packed optimum
  double log_likelihood_at_max = 0.0;
  std::optional<Eigen::VectorXd> std_errors; // absent when -H is not PD
  std::string std_error_note;                // diagnostic when absent
  bool converged = false;
  int iterations = 0;
  double hessian_condition = std::numeric_limits<double>::quiet_NaN();
  double hessian_max_asymmetry = 0.0;        // before symmetrization
};

namespace detail {

// Central finite differences of the analytic gradient; symmetrized.
inline Eigen::MatrixXd fd_hessian(const Eigen::VectorXd& x, const EvalContext& ctx,
                                  bool use_prior, double* max_asym) {
  const int d = static_cast<int>(x.size());
  Eigen::MatrixXd H(d, d);
  for (int j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::fabs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Eigen::VectorXd gp = *eval_log_density(xp, ctx, use_prior, true).gradient;
    const Eigen::VectorXd gm = *eval_log_density(xm, ctx, use_prior, true).gradient;
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  double asym = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double scale = std::max({1.0, std::fabs(H(i, j)), std::fabs(H(j, i))});
      asym = std::max(asym, std::fabs(H(i, j) - H(j, i)) / scale);
    }
  if (max_asym) *max_asym = asym;
  return 0.5 * (H + H.transpose()).eval();
}

struct LbfgsOutcome {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

// Limited-memory BFGS maximizing the model log density.  Backtracking line
// search accepts on Armijo; the curvature (Wolfe) condition gates whether the
// step contributes an update pair.
inline LbfgsOutcome lbfgs_maximize(const Eigen::VectorXd& x0, const EvalContext& ctx,
                                   const MLOptions& opts) {
  const double c1 = 1e-4;
  const double c2 = 0.9;

  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    auto r = eval_log_density(x, ctx, opts.use_prior, true);
    grad = *r.gradient;
    return r.value;
  };

  LbfgsOutcome out;
  out.x = x0;
  Eigen::VectorXd grad(x0.size());
  double f = eval(out.x, grad);
  if (!std::isfinite(f)) return out;  // bad start; caller tries the next one

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    out.iterations = iter;
    if (grad.lpNorm<Eigen::Infinity>() < opts.tol) {
      out.converged = true;
      break;
    }

    // Two-loop recursion on the negated objective: direction ascends f.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd direction = q;
    double dir_deriv = grad.dot(direction);
    if (dir_deriv <= 0.0) {  // history lost positive curvature; steepest ascent
      direction = grad;
      dir_deriv = grad.squaredNorm();
    }

    double step = 1.0;
    Eigen::VectorXd x_new, grad_new(x0.size());
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = out.x + step * direction;
      f_new = eval(x_new, grad_new);
      if (std::isfinite(f_new) && f_new >= f + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search stalled; report best-effort point

    const Eigen::VectorXd s = x_new - out.x;
    const Eigen::VectorXd y = grad - grad_new;  // curvature pair of -f
    const bool wolfe = grad_new.dot(direction) <= c2 * dir_deriv;
    const double sy = s.dot(y);
    if (wolfe && sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    out.x = x_new;
    f = f_new;
    grad = grad_new;
  }
  out.value = f;
  return out;
}

}  // namespace detail

// Multi-start quasi-Newton fit.  Start 0 is the zero vector; the remaining
// starts add seeded N(0, 0.5^2) jitter.  The best final value wins.
inline MLFit fit_ml(const EvalContext& ctx, const MLOptions& opts = {}) {
  const int dim = ctx.layout.free_size();
  require(ctx.n() >= dim, "DegenerateData",
          std::to_string(ctx.n()) + " observations cannot identify " + std::to_string(dim) +
              " free parameters");

  detail::LbfgsOutcome best;
  bool have_any = false;
  for (int start = 0; start < std::max(1, opts.n_starts); ++start) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
    if (start > 0) {
      Rng rng = Rng::derive(opts.seed, static_cast<std::uint64_t>(start));
      for (int k = 0; k < dim; ++k) x0[k] = 0.5 * rng.normal();
    }
    detail::LbfgsOutcome run = detail::lbfgs_maximize(x0, ctx, opts);
    if (!std::isfinite(run.value)) continue;
    if (!have_any || run.value > best.value ||
        (run.value == best.value && run.converged && !best.converged)) {
      best = run;
      have_any = true;
    }
  }
  require(have_any, "NonConvergence", "every start produced a non-finite objective");

  MLFit fit;
  fit.free = best.x;
  fit.coefficients = unpack_free(best.x, ctx.layout);
  fit.log_likelihood_at_max = log_likelihood(best.x, ctx);
  fit.converged = best.converged;
  fit.iterations = best.iterations;

  // Wald standard errors from the observed information of the log likelihood.
  const Eigen::MatrixXd H =
      detail::fd_hessian(best.x, ctx, /*use_prior=*/false, &fit.hessian_max_asymmetry);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-H);
  const Eigen::VectorXd evals = eig.eigenvalues();
  if (evals.minCoeff() > 0.0) {
    fit.hessian_condition = evals.maxCoeff() / evals.minCoeff();
    const Eigen::MatrixXd cov = (-H).ldlt().solve(Eigen::MatrixXd::Identity(dim, dim));
    Eigen::VectorXd se(dim);
    bool ok = true;
    for (int k = 0; k < dim; ++k) {
      if (cov(k, k) <= 0.0) ok = false;
      se[k] = std::sqrt(std::max(0.0, cov(k, k)));
    }
    if (ok)
      fit.std_errors = std::move(se);
    else
      fit.std_error_note = "observed information produced a non-positive variance";
  } else {
    fit.std_error_note = "observed information is not positive definite at the optimum";
  }
  return fit;
}

struct IntervalRow {
  std::string name;
  double lower = 0.0;
  double estimate = 0.0;
  double upper = 0.0;
  bool fixed_zero = false;  // reference-component row
};

// Wald intervals est +/- z * se for every coefficient, reference rows
// reported as fixed zeros.  Naming follows "<component>:<column>" with the
// precision block prefixed "gamma:".
inline std::vector<IntervalRow> wald_intervals(const MLFit& fit, double level,
                                               const EvalContext& ctx) {
  require(level >= 0.0 && level < 1.0, "InvalidProbability",
          "interval level must lie in [0,1)");
  require(fit.std_errors.has_value(), "MissingStdErrors",
          "standard errors unavailable: " + fit.std_error_note);
  const double z = (level == 0.0) ? 0.0 : std_normal_quantile(0.5 * (1.0 + level));
  const CoefficientLayout& lay = ctx.layout;

  std::vector<IntervalRow> rows;
  int k = 0;
  for (int c = 0; c < lay.C; ++c) {
    for (int j = 0; j < lay.p_beta; ++j) {
      IntervalRow row;
      row.name = ctx.Y.component_names[c] + ":" + ctx.X.column_names[j];
      if (c == lay.reference) {
        row.fixed_zero = true;
      } else {
        const double est = fit.free[k];
        const double se = (*fit.std_errors)[k];
        row.lower = est - z * se;
        row.estimate = est;
        row.upper = est + z * se;
        ++k;
      }
      rows.push_back(std::move(row));
    }
  }
  for (int j = 0; j < lay.p_gamma; ++j) {
    IntervalRow row;
    row.name = "gamma:" + ctx.Z.column_names[j];
    const double est = fit.free[k];
    const double se = (*fit.std_errors)[k];
    row.lower = est - z * se;
    row.estimate = est;
    row.upper = est + z * se;
    ++k;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dirreg

#endif  // DIRREG_INFER_ML_HPP
