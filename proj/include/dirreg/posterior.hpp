// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_POSTERIOR_HPP
#define DIRREG_POSTERIOR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dirreg/errors.hpp"
#include "dirreg/infer_hmc.hpp"
#include "dirreg/likelihood.hpp"
#include "dirreg/model.hpp"

namespace dirreg {

// Expected-value simplex per posterior draw at one covariate setting.
struct ExpectedValueDraws {
  Eigen::MatrixXd values;  // S x C, each row a simplex
  std::string covariate_label;
};

// For each draw: unpack the coefficients (reference row zero), form the
// linear predictors at x and push them through the softmax.  The reference
// component comes out as a full posterior sample, and the rows sum to one by
// construction, making any post-hoc renormalization a no-op.
inline ExpectedValueDraws expected_values_per_draw(const Eigen::MatrixXd& draws,
                                                   const Eigen::VectorXd& x,
                                                   const CoefficientLayout& layout,
                                                   std::string label = {}) {
  require(x.size() == layout.p_beta, "DimensionMismatch",
          "covariate vector has length " + std::to_string(x.size()) + ", design expects " +
              std::to_string(layout.p_beta));
  require(draws.cols() == layout.free_size(), "DimensionMismatch",
          "draw matrix width does not match the free parameter layout");

  ExpectedValueDraws out;
  out.covariate_label = std::move(label);
  out.values.resize(draws.rows(), layout.C);
  for (Eigen::Index s = 0; s < draws.rows(); ++s) {
    const Coefficients coeffs = unpack_free(draws.row(s).transpose(), layout);
    out.values.row(s) = softmax(coeffs.beta * x).transpose();
  }
  return out;
}

// Row-wise division by the row sum.  Kept as a comparison operation; on
// softmax-generated rows it changes nothing.
inline Eigen::MatrixXd renormalize_adjustment(const Eigen::MatrixXd& raw_mu) {
  Eigen::MatrixXd out(raw_mu.rows(), raw_mu.cols());
  for (Eigen::Index s = 0; s < raw_mu.rows(); ++s) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < raw_mu.cols(); ++c) {
      require(raw_mu(s, c) > 0.0, "NonPositiveEntry",
              "expected-value draws must be positive before renormalization");
      sum += raw_mu(s, c);
    }
    out.row(s) = raw_mu.row(s) / sum;
  }
  return out;
}

// Empirical quantile with inclusive linear interpolation between order
// statistics: index h = (n-1)p on the sorted sample.
inline double quantile(std::vector<double> samples, double p) {
  require(!samples.empty(), "InsufficientSamples", "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "InvalidProbability", "quantile level outside [0,1]");
  std::sort(samples.begin(), samples.end());
  const double h = (static_cast<double>(samples.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= samples.size()) return samples.back();
  const double frac = h - static_cast<double>(lo);
  return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

inline double quantile(const Eigen::VectorXd& samples, double p) {
  return quantile(std::vector<double>(samples.data(), samples.data() + samples.size()), p);
}

// Central credible interval at the given level.
inline std::pair<double, double> credible_interval(const Eigen::VectorXd& samples,
                                                   double level) {
  require(samples.size() >= 2, "InsufficientSamples",
          "credible interval needs at least 2 samples");
  require(level > 0.0 && level < 1.0, "InvalidProbability",
          "credible level must lie in (0,1)");
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
  };
  return {q(0.5 * (1.0 - level)), q(0.5 * (1.0 + level))};
}

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool fixed_zero = false;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  double level = 0.95;
};

struct SummaryTargets {
  bool coefficients = true;
  // (label, covariate vector) pairs for expected-value summaries
  std::vector<std::pair<std::string, Eigen::VectorXd>> expected_value_settings;
};

// Mean and central interval per quantity: coefficients first (reference rows
// as fixed zeros), then the expected-value components per covariate setting.
inline SummaryTable summarize_fit(const PosteriorDraws& draws, const EvalContext& ctx,
                                  const SummaryTargets& targets, double level = 0.95) {
  SummaryTable table;
  table.level = level;
  const CoefficientLayout& lay = ctx.layout;

  if (targets.coefficients) {
    int k = 0;
    for (int c = 0; c < lay.C; ++c)
      for (int j = 0; j < lay.p_beta; ++j) {
        SummaryRow row;
        row.name = ctx.Y.component_names[c] + ":" + ctx.X.column_names[j];
        if (c == lay.reference) {
          row.fixed_zero = true;
        } else {
          const Eigen::VectorXd col = draws.draws.col(k);
          auto [lo, hi] = credible_interval(col, level);
          row.mean = col.mean();
          row.lower = lo;
          row.upper = hi;
          ++k;
        }
        table.rows.push_back(std::move(row));
      }
    for (int j = 0; j < lay.p_gamma; ++j) {
      SummaryRow row;
      row.name = "gamma:" + ctx.Z.column_names[j];
      const Eigen::VectorXd col = draws.draws.col(k);
      auto [lo, hi] = credible_interval(col, level);
      row.mean = col.mean();
      row.lower = lo;
      row.upper = hi;
      ++k;
      table.rows.push_back(std::move(row));
    }
  }

  for (const auto& [label, x] : targets.expected_value_settings) {
    const ExpectedValueDraws ev = expected_values_per_draw(draws.draws, x, lay, label);
    for (int c = 0; c < lay.C; ++c) {
      SummaryRow row;
      row.name = "mu[" + label + "]:" + ctx.Y.component_names[c];
      const Eigen::VectorXd col = ev.values.col(c);
      auto [lo, hi] = credible_interval(col, level);
      row.mean = col.mean();
      row.lower = lo;
      row.upper = hi;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace dirreg

#endif  // DIRREG_POSTERIOR_HPP
