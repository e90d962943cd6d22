// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_MODEL_HPP
#define DIRREG_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "dirreg/composition.hpp"
#include "dirreg/errors.hpp"
#include "dirreg/formula.hpp"

namespace dirreg {

// Model configuration.  `reference` is the 0-based index of the component
// whose coefficient row is pinned to zero (the CLI exposes it 1-based).
struct ModelSpec {
  FormulaSpec formula;
  int reference = -1;  // -1 = last component
  double prior_sd_beta = 5.0;
  double prior_sd_theta = 5.0;
  bool varying_precision = false;

  int reference_for(int C) const {
    const int ref = (reference < 0) ? C - 1 : reference;
    require(ref >= 0 && ref < C, "DimensionError",
            "reference component " + std::to_string(ref + 1) + " out of range 1.." +
                std::to_string(C));
    return ref;
  }
};

// Shape of the parameter block: C x p_beta mean coefficients with one row
// fixed at zero, plus p_gamma precision coefficients.  The free vector packs
// the non-reference beta rows in ascending component order, row-major, then
// gamma.
struct CoefficientLayout {
  int C = 0;
  int p_beta = 0;
  int p_gamma = 0;
  int reference = 0;  // 0-based

  int free_size() const { return (C - 1) * p_beta + p_gamma; }
};

struct Coefficients {
  Eigen::MatrixXd beta;   // C x p_beta, reference row all zeros
  Eigen::VectorXd gamma;  // p_gamma
};

inline Eigen::VectorXd pack_free(const Coefficients& coeffs, const CoefficientLayout& layout) {
  require(coeffs.beta.rows() == layout.C && coeffs.beta.cols() == layout.p_beta &&
              coeffs.gamma.size() == layout.p_gamma,
          "DimensionMismatch", "coefficient shapes do not match layout");
  Eigen::VectorXd free(layout.free_size());
  int k = 0;
  for (int c = 0; c < layout.C; ++c) {
    if (c == layout.reference) continue;
    for (int j = 0; j < layout.p_beta; ++j) free[k++] = coeffs.beta(c, j);
  }
  for (int j = 0; j < layout.p_gamma; ++j) free[k++] = coeffs.gamma[j];
  return free;
}

inline Coefficients unpack_free(const Eigen::VectorXd& free, const CoefficientLayout& layout) {
  require(free.size() == layout.free_size(), "DimensionMismatch",
          "free vector has length " + std::to_string(free.size()) + ", layout expects " +
              std::to_string(layout.free_size()));
  Coefficients coeffs;
  coeffs.beta = Eigen::MatrixXd::Zero(layout.C, layout.p_beta);
  coeffs.gamma.resize(layout.p_gamma);
  int k = 0;
  for (int c = 0; c < layout.C; ++c) {
    if (c == layout.reference) continue;
    for (int j = 0; j < layout.p_beta; ++j) coeffs.beta(c, j) = free[k++];
  }
  for (int j = 0; j < layout.p_gamma; ++j) coeffs.gamma[j] = free[k++];
  return coeffs;
}

// eta = X beta^T; the reference column is identically zero because the
// reference row of beta is.
inline Eigen::MatrixXd linear_predictors(const Eigen::MatrixXd& X, const Coefficients& coeffs) {
  require(X.cols() == coeffs.beta.cols(), "DimensionMismatch",
          "design has " + std::to_string(X.cols()) + " columns, beta expects " +
              std::to_string(coeffs.beta.cols()));
  return X * coeffs.beta.transpose();
}

// mu_c = exp(eta_c) / sum_d exp(eta_d), computed with max subtraction.
// Shifted predictors below -700 would underflow the corresponding component
// to exactly zero; that is treated as a hard error rather than a silent
// boundary mean.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& eta) {
  for (Eigen::Index c = 0; c < eta.size(); ++c)
    require(std::isfinite(eta[c]), "NonFiniteInput", "linear predictor is not finite");
  const double max = eta.maxCoeff();
  Eigen::VectorXd mu(eta.size());
  double sum = 0.0;
  for (Eigen::Index c = 0; c < eta.size(); ++c) {
    const double shifted = eta[c] - max;
    require(shifted > -700.0, "NonFiniteInput",
            "linear predictor spread exceeds 700; softmax would underflow");
    mu[c] = std::exp(shifted);
    sum += mu[c];
  }
  return mu / sum;
}

// theta_i = exp(z_i . gamma).
inline Eigen::VectorXd precision_values(const Eigen::MatrixXd& Z, const Eigen::VectorXd& gamma) {
  require(Z.cols() == gamma.size(), "DimensionMismatch",
          "precision design has " + std::to_string(Z.cols()) + " columns, gamma has " +
              std::to_string(gamma.size()));
  Eigen::VectorXd theta(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double log_theta = Z.row(i).dot(gamma);
    theta[i] = std::exp(log_theta);
    require(std::isfinite(theta[i]), "OverflowToInfinity",
            "precision overflows at row " + std::to_string(i + 1));
  }
  return theta;
}

// alpha = mu * theta, so that sum(alpha) = theta.
inline DirichletParams alpha_from(const Eigen::VectorXd& mu, double theta) {
  require(theta > 0.0 && std::isfinite(theta), "NonPositiveTheta",
          "precision must be positive and finite");
  return DirichletParams::from(mu * theta);
}

}  // namespace dirreg

#endif  // DIRREG_MODEL_HPP
