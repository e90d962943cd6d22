// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_COMPOSITION_HPP
#define DIRREG_COMPOSITION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dirreg/errors.hpp"
#include "dirreg/rng.hpp"
#include "dirreg/special.hpp"

namespace dirreg {

// n x C matrix of proportions; each row is one observed composition and
// sums to 1.  Entries are strictly interior only after transform_zeros.
struct CompositionMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> component_names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index C() const { return values.cols(); }
};

struct NormalizeReport {
  bool normalization_forced = false;  // some row sum was off by more than 1e-8
  int rows_rescaled = 0;
};

// Divides every row by its sum.  Rows already summing to 1 pass through
// unchanged up to rounding.
inline CompositionMatrix validate_and_normalize(const Eigen::MatrixXd& raw,
                                                std::vector<std::string> component_names = {},
                                                NormalizeReport* report = nullptr) {
  require(raw.cols() >= 2, "DimensionError",
          "composition needs at least 2 components, got " + std::to_string(raw.cols()));
  require(raw.rows() >= 1, "DimensionError", "composition needs at least one row");
  if (component_names.empty()) {
    for (Eigen::Index c = 0; c < raw.cols(); ++c)
      component_names.push_back("Y" + std::to_string(c + 1));
  }
  require(static_cast<Eigen::Index>(component_names.size()) == raw.cols(), "DimensionError",
          "component name count does not match column count");

  NormalizeReport local;
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const double v = raw(i, c);
      require(std::isfinite(v) && v >= 0.0, "NegativeEntry",
              "negative or non-finite proportion at row " + std::to_string(i + 1) +
                  ", column " + std::to_string(c + 1));
      sum += v;
    }
    require(sum > 0.0, "ZeroRow", "row " + std::to_string(i + 1) + " sums to zero");
    if (std::fabs(sum - 1.0) > 1e-8) {
      local.normalization_forced = true;
      ++local.rows_rescaled;
    }
    out.row(i) = raw.row(i) / sum;
  }
  if (report) *report = local;
  return CompositionMatrix{std::move(out), std::move(component_names)};
}

struct ZeroTransformReport {
  int rows_with_zeros = 0;
  int zero_entries = 0;
};

// Rounded-zero smoothing: rows containing a zero are mapped entrywise through
// y -> (y*(n-1) + 1/C) / n, which keeps the row sum at 1 and pulls every
// entry strictly inside (0,1).  Zero-free rows are returned untouched, so the
// transform is idempotent on already-interior data.
inline CompositionMatrix transform_zeros(const CompositionMatrix& m,
                                         ZeroTransformReport* report = nullptr) {
  require(m.C() >= 2, "DimensionError", "composition needs at least 2 components");
  const double n = static_cast<double>(m.n());
  const double cinv = 1.0 / static_cast<double>(m.C());

  ZeroTransformReport local;
  Eigen::MatrixXd out = m.values;
  for (Eigen::Index i = 0; i < m.n(); ++i) {
    int zeros = 0;
    for (Eigen::Index c = 0; c < m.C(); ++c)
      if (out(i, c) <= 0.0) ++zeros;
    if (zeros == 0) continue;
    ++local.rows_with_zeros;
    local.zero_entries += zeros;
    for (Eigen::Index c = 0; c < m.C(); ++c)
      out(i, c) = (out(i, c) * (n - 1.0) + cinv) / n;
  }
  if (report) *report = local;
  return CompositionMatrix{std::move(out), m.component_names};
}

// Dirichlet shape vector with the derived precision alpha0 = sum(alpha).
struct DirichletParams {
  Eigen::VectorXd alpha;
  double alpha0 = 0.0;

  static DirichletParams from(Eigen::VectorXd a) {
    for (Eigen::Index c = 0; c < a.size(); ++c)
      require(std::isfinite(a[c]) && a[c] > 0.0, "NonPositiveAlpha",
              "alpha[" + std::to_string(c + 1) + "] must be positive");
    DirichletParams p;
    p.alpha0 = a.sum();
    p.alpha = std::move(a);
    return p;
  }
};

// log B(alpha) = sum_c lgamma(alpha_c) - lgamma(sum_c alpha_c).
inline double log_multinomial_beta(const Eigen::VectorXd& alpha) {
  double sum_lg = 0.0;
  double sum_a = 0.0;
  for (Eigen::Index c = 0; c < alpha.size(); ++c) {
    require(std::isfinite(alpha[c]) && alpha[c] > 0.0, "NonPositiveAlpha",
            "alpha[" + std::to_string(c + 1) + "] must be positive");
    sum_lg += lgamma(alpha[c]);
    sum_a += alpha[c];
  }
  return sum_lg - lgamma(sum_a);
}

// log f(y | alpha) = -log B(alpha) + sum_c (alpha_c - 1) log y_c, for y
// strictly inside the simplex.
inline double dirichlet_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  require(y.size() == alpha.size(), "DimensionMismatch",
          "y and alpha must have equal length");
  double log_kernel = 0.0;
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    require(y[c] > 0.0 && y[c] < 1.0, "BoundaryY",
            "y[" + std::to_string(c + 1) + "] must lie strictly in (0,1)");
    log_kernel += (alpha[c] - 1.0) * std::log(y[c]);
  }
  return -log_multinomial_beta(alpha) + log_kernel;
}

// E(Y) = alpha / alpha0.
inline Eigen::VectorXd dirichlet_mean(const Eigen::VectorXd& alpha) {
  const DirichletParams p = DirichletParams::from(alpha);
  return p.alpha / p.alpha0;
}

// One draw via normalized Gamma variates.
inline Eigen::VectorXd dirichlet_sample(const Eigen::VectorXd& alpha, Rng& rng) {
  const DirichletParams p = DirichletParams::from(alpha);
  Eigen::VectorXd g(p.alpha.size());
  double sum = 0.0;
  for (Eigen::Index c = 0; c < p.alpha.size(); ++c) {
    g[c] = rng.gamma(p.alpha[c]);
    sum += g[c];
  }
  // Zero-probability event in exact arithmetic; retry keeps the draw interior.
  if (sum <= 0.0) return dirichlet_sample(alpha, rng);
  return g / sum;
}

}  // namespace dirreg

#endif  // DIRREG_COMPOSITION_HPP
