// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_DIAGNOSTICS_HPP
#define DIRREG_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "dirreg/errors.hpp"
#include "dirreg/infer_hmc.hpp"
#include "dirreg/special.hpp"

namespace dirreg {

struct Diagnostics {
  Eigen::VectorXd rhat;      // per free parameter
  Eigen::VectorXd ess_bulk;  // per free parameter
  int divergences = 0;
  int treedepth_saturations = 0;

  double max_rhat() const { return rhat.size() ? rhat.maxCoeff() : 1.0; }
  double min_ess() const { return ess_bulk.size() ? ess_bulk.minCoeff() : 0.0; }
};

namespace detail {

inline void check_chain_shape(const std::vector<Eigen::VectorXd>& chains) {
  require(chains.size() >= 2, "InsufficientDraws", "diagnostics need at least 2 chains");
  for (const auto& c : chains)
    require(c.size() >= 4, "InsufficientDraws", "diagnostics need at least 4 draws per chain");
  for (const auto& c : chains)
    require(c.size() == chains.front().size(), "InsufficientDraws",
            "chains must have equal length");
}

// Split each chain into halves (middle draw dropped when odd).
inline std::vector<Eigen::VectorXd> split_halves(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index h = c.size() / 2;
    out.push_back(c.head(h));
    out.push_back(c.tail(h));
  }
  return out;
}

// Pooled average ranks mapped through the normal quantile function
// (the fractional offset keeps the tails finite).
inline std::vector<Eigen::VectorXd> rank_normalize(const std::vector<Eigen::VectorXd>& chains) {
  struct Entry {
    double value;
    std::size_t chain;
    Eigen::Index index;
  };
  std::vector<Entry> all;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (Eigen::Index i = 0; i < chains[c].size(); ++i)
      all.push_back({chains[c][i], c, i});
  std::stable_sort(all.begin(), all.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });

  const double total = static_cast<double>(all.size());
  std::vector<Eigen::VectorXd> out(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) out[c].resize(chains[c].size());

  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double z = std_normal_quantile((avg_rank - 0.375) / (total + 0.25));
    for (std::size_t k = i; k < j; ++k) out[all[k].chain][all[k].index] = z;
    i = j;
  }
  return out;
}

struct VarianceDecomposition {
  double within = 0.0;    // W
  double var_plus = 0.0;  // (N-1)/N W + B/N
  bool degenerate = false;
};

inline VarianceDecomposition decompose(const std::vector<Eigen::VectorXd>& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  Eigen::VectorXd means(chains.size()), vars(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means[static_cast<Eigen::Index>(c)] = chains[c].mean();
    vars[static_cast<Eigen::Index>(c)] =
        (chains[c].array() - chains[c].mean()).square().sum() / (n - 1.0);
  }
  VarianceDecomposition d;
  d.within = vars.mean();
  const double grand = means.mean();
  const double between_over_n = (means.array() - grand).square().sum() / (m - 1.0);
  d.var_plus = (n - 1.0) / n * d.within + between_over_n;
  d.degenerate = (d.within <= 0.0 && between_over_n <= 0.0);
  return d;
}

// Biased (1/N) autocovariance of one chain.
inline Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const double mean = x.mean();
  Eigen::VectorXd centered = x.array() - mean;
  Eigen::VectorXd acov(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + t < n; ++i) s += centered[i] * centered[i + t];
    acov[t] = s / static_cast<double>(n);
  }
  return acov;
}

}  // namespace detail

struct SplitRhatResult {
  double value = 1.0;
  bool zero_variance = false;
};

// Rank-normalized split potential scale reduction.
inline SplitRhatResult split_rhat_detail(const std::vector<Eigen::VectorXd>& chains) {
  detail::check_chain_shape(chains);
  const auto halves = detail::rank_normalize(detail::split_halves(chains));
  const auto d = detail::decompose(halves);
  if (d.degenerate) return {1.0, true};
  if (d.within <= 0.0) return {std::numeric_limits<double>::infinity(), false};
  return {std::sqrt(d.var_plus / d.within), false};
}

inline double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  return split_rhat_detail(chains).value;
}

// Bulk effective sample size: rank-normalized split chains, combined
// autocorrelations, Geyer initial-monotone truncation.  Capped at the total
// number of draws.
inline double ess_bulk(const std::vector<Eigen::VectorXd>& chains) {
  detail::check_chain_shape(chains);
  const auto halves = detail::rank_normalize(detail::split_halves(chains));
  const double total_draws =
      static_cast<double>(chains.size()) * static_cast<double>(chains.front().size());

  const auto d = detail::decompose(halves);
  if (d.degenerate || d.var_plus <= 0.0) return total_draws;  // constant draws carry no signal

  const Eigen::Index n = halves.front().size();
  const std::size_t m = halves.size();
  std::vector<Eigen::VectorXd> acov(m);
  for (std::size_t c = 0; c < m; ++c) acov[c] = detail::autocovariance(halves[c]);

  auto mean_acov = [&](Eigen::Index t) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += acov[c][t];
    return s / static_cast<double>(m);
  };

  auto rho = [&](Eigen::Index t) { return 1.0 - (d.within - mean_acov(t)) / d.var_plus; };

  // Pair sums P_k = rho_{2k} + rho_{2k+1}; keep while positive, enforce
  // monotone decrease, tau = -1 + 2 sum P_k (rho_0 == 1 by construction).
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    const double r_even = (t == 0) ? 1.0 : rho(t);
    const double r_odd = rho(t + 1);
    double pair = r_even + r_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total_draws + 10.0));  // guard against tiny tau
  return std::min(total_draws / tau, total_draws);
}

// Per-parameter diagnostics over the merged sampler output.
inline Diagnostics compute_diagnostics(const PosteriorDraws& draws) {
  Diagnostics diag;
  const int chains = draws.chains();
  const Eigen::Index per_chain = draws.draws_per_chain();
  const Eigen::Index dim = draws.dim();
  diag.rhat.resize(dim);
  diag.ess_bulk.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<Eigen::VectorXd> per_chain_draws;
    per_chain_draws.reserve(chains);
    for (int c = 0; c < chains; ++c)
      per_chain_draws.push_back(
          draws.draws.col(j).segment(static_cast<Eigen::Index>(c) * per_chain, per_chain));
    diag.rhat[j] = split_rhat(per_chain_draws);
    diag.ess_bulk[j] = ess_bulk(per_chain_draws);
  }
  diag.divergences = std::accumulate(draws.divergence_count.begin(),
                                     draws.divergence_count.end(), 0);
  diag.treedepth_saturations = std::accumulate(draws.treedepth_saturation_count.begin(),
                                               draws.treedepth_saturation_count.end(), 0);
  return diag;
}

}  // namespace dirreg

#endif  // DIRREG_DIAGNOSTICS_HPP
