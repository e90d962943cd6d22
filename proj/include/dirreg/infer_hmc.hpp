// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_INFER_HMC_HPP
#define DIRREG_INFER_HMC_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "dirreg/errors.hpp"
#include "dirreg/likelihood.hpp"
#include "dirreg/rng.hpp"

namespace dirreg {

// Target log density with gradient.  Returns -inf for out-of-support points
// (the gradient is then ignored).
using LogDensityFn = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct SamplerConfig {
  int chains = 4;
  int iterations = 2000;  // per chain, warmup included
  int warmup = 1000;
  double target_accept = 0.95;
  int max_treedepth = 20;
  std::uint64_t seed = 4294967291ULL;
  double init_radius = 2.0;

  void validate() const {
    require(chains >= 1, "DimensionError", "need at least one chain");
    require(warmup >= 0 && warmup < iterations, "DimensionError",
            "warmup must be smaller than iterations");
    require(target_accept > 0.0 && target_accept < 1.0, "InvalidProbability",
            "target_accept must lie in (0,1)");
    require(max_treedepth >= 0, "DimensionError", "max_treedepth must be >= 0");
  }
};

struct PosteriorDraws {
  Eigen::MatrixXd draws;               // S x dim, post-warmup, ordered by chain
  std::vector<int> chain_ids;          // length S
  std::vector<int> divergence_count;   // per chain, sampling phase
  std::vector<int> treedepth_saturation_count;
  std::vector<double> step_sizes;      // final adapted step size per chain
  std::vector<Eigen::VectorXd> mass_diag;  // adapted inverse-mass diagonal per chain
  std::vector<double> accept_mean;     // mean acceptance statistic, sampling phase

  Eigen::Index S() const { return draws.rows(); }
  Eigen::Index dim() const { return draws.cols(); }
  int chains() const { return static_cast<int>(divergence_count.size()); }
  Eigen::Index draws_per_chain() const { return draws.rows() / std::max(1, chains()); }
};

namespace hmc {

// Position/momentum pair with the cached gradient and log density at q.
struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

// One leapfrog step with a diagonal metric.  Returns false when the new
// point leaves the support or produces non-finite values.
inline bool leapfrog(PhasePoint& z, double eps, const Eigen::VectorXd& inv_mass,
                     const LogDensityFn& fn) {
  Eigen::VectorXd p_half = z.p + 0.5 * eps * z.grad;
  Eigen::VectorXd q_new = z.q + eps * inv_mass.cwiseProduct(p_half);
  if (!q_new.allFinite()) return false;
  Eigen::VectorXd grad_new(q_new.size());
  const double logp_new = fn(q_new, grad_new);
  if (!std::isfinite(logp_new) || !grad_new.allFinite()) return false;
  z.q = std::move(q_new);
  z.p = p_half + 0.5 * eps * grad_new;
  z.grad = std::move(grad_new);
  z.logp = logp_new;
  return true;
}

// Convenience overload on bare (q, p).
inline bool leapfrog(Eigen::VectorXd& q, Eigen::VectorXd& p, double eps,
                     const Eigen::VectorXd& inv_mass, const LogDensityFn& fn) {
  PhasePoint z;
  z.q = q;
  z.p = p;
  z.grad.resize(q.size());
  z.logp = fn(z.q, z.grad);
  if (!std::isfinite(z.logp)) return false;
  if (!leapfrog(z, eps, inv_mass, fn)) return false;
  q = std::move(z.q);
  p = std::move(z.p);
  return true;
}

inline double kinetic_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  return 0.5 * p.dot(inv_mass.cwiseProduct(p));
}

// Joint log density of the extended system (negative Hamiltonian).
inline double joint_logp(const PhasePoint& z, const Eigen::VectorXd& inv_mass) {
  return z.logp - kinetic_energy(z.p, inv_mass);
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct NutsStats {
  double accept_stat = 1.0;  // mean Metropolis statistic over visited states
  int depth = 0;
  bool divergent = false;
  bool saturated = false;    // doubling stopped only by max_treedepth
  int n_leapfrog = 0;
};

namespace detail {

constexpr double kDivergenceThreshold = 1000.0;  // energy error that prunes a tree

// Trajectory subtree.  Endpoints are stored in global time orientation
// (bck = earliest, fwd = latest state of the trajectory segment).
struct Tree {
  PhasePoint bck, fwd;
  Eigen::VectorXd rep;   // multinomial representative (position only)
  double log_sum_w = 0.0;
  bool divergent = false;
  bool turning = false;
  double sum_accept = 0.0;
  int n_states = 0;
};

inline bool uturn(const PhasePoint& bck, const PhasePoint& fwd,
                  const Eigen::VectorXd& inv_mass) {
  const Eigen::VectorXd dq = fwd.q - bck.q;
  return dq.dot(inv_mass.cwiseProduct(bck.p)) < 0.0 ||
         dq.dot(inv_mass.cwiseProduct(fwd.p)) < 0.0;
}

// Builds a balanced subtree of 2^depth states extending from `edge` in
// direction `dir`, with multinomial weighting relative to joint_logp0.
inline Tree build_tree(int depth, const PhasePoint& edge, int dir, double eps,
                       const Eigen::VectorXd& inv_mass, double joint_logp0,
                       const LogDensityFn& fn, Rng& rng) {
  if (depth == 0) {
    Tree leaf;
    PhasePoint z = edge;
    const bool ok = leapfrog(z, dir * eps, inv_mass, fn);
    if (!ok) {
      leaf.divergent = true;
      leaf.log_sum_w = -std::numeric_limits<double>::infinity();
      leaf.n_states = 1;
      leaf.bck = leaf.fwd = edge;  // placeholders; a divergent tree is discarded
      leaf.rep = edge.q;
      return leaf;
    }
    const double log_w = joint_logp(z, inv_mass) - joint_logp0;
    leaf.divergent = (log_w < -kDivergenceThreshold);
    leaf.log_sum_w = log_w;
    leaf.sum_accept = std::exp(std::min(0.0, log_w));
    leaf.n_states = 1;
    leaf.rep = z.q;
    leaf.bck = leaf.fwd = std::move(z);
    return leaf;
  }

  Tree inner = build_tree(depth - 1, edge, dir, eps, inv_mass, joint_logp0, fn, rng);
  if (inner.divergent || inner.turning) return inner;

  const PhasePoint& next_edge = (dir > 0) ? inner.fwd : inner.bck;
  Tree outer = build_tree(depth - 1, next_edge, dir, eps, inv_mass, joint_logp0, fn, rng);

  Tree merged;
  merged.sum_accept = inner.sum_accept + outer.sum_accept;
  merged.n_states = inner.n_states + outer.n_states;
  merged.divergent = outer.divergent;
  merged.turning = outer.turning;
  merged.log_sum_w = log_sum_exp(inner.log_sum_w, outer.log_sum_w);
  if (merged.divergent || merged.turning) {
    merged.rep = inner.rep;  // never used; caller discards flagged trees
    merged.bck = inner.bck;
    merged.fwd = inner.fwd;
    return merged;
  }
  merged.rep = (std::log(rng.uniform()) < outer.log_sum_w - merged.log_sum_w) ? outer.rep
                                                                              : inner.rep;
  merged.bck = (dir > 0) ? inner.bck : outer.bck;
  merged.fwd = (dir > 0) ? outer.fwd : inner.fwd;
  merged.turning = uturn(merged.bck, merged.fwd, inv_mass);
  return merged;
}

}  // namespace detail

// One NUTS transition (multinomial sampling within doubling).  Momentum is
// refreshed internally; `z` carries the cached gradient across calls.
inline NutsStats nuts_transition(PhasePoint& z, double eps, int max_depth,
                                 const Eigen::VectorXd& inv_mass, const LogDensityFn& fn,
                                 Rng& rng) {
  const Eigen::Index dim = z.q.size();
  for (Eigen::Index k = 0; k < dim; ++k)
    z.p[k] = rng.normal() / std::sqrt(inv_mass[k]);

  const double joint0 = joint_logp(z, inv_mass);

  detail::Tree tree;
  tree.bck = z;
  tree.fwd = z;
  tree.rep = z.q;
  tree.log_sum_w = 0.0;

  NutsStats stats;
  double sum_accept = 0.0;
  int n_states = 0;

  for (int depth = 0; depth < max_depth; ++depth) {
    const int dir = (rng.uniform() < 0.5) ? -1 : 1;
    const PhasePoint& edge = (dir > 0) ? tree.fwd : tree.bck;
    detail::Tree subtree =
        detail::build_tree(depth, edge, dir, eps, inv_mass, joint0, fn, rng);
    sum_accept += subtree.sum_accept;
    n_states += subtree.n_states;

    if (subtree.divergent) {
      stats.divergent = true;
      break;
    }
    if (subtree.turning) break;

    // Biased progressive sampling: favor the fresh half of the trajectory.
    if (std::log(rng.uniform()) < subtree.log_sum_w - tree.log_sum_w)
      tree.rep = subtree.rep;
    tree.log_sum_w = log_sum_exp(tree.log_sum_w, subtree.log_sum_w);
    if (dir > 0)
      tree.fwd = subtree.fwd;
    else
      tree.bck = subtree.bck;

    stats.depth = depth + 1;
    if (detail::uturn(tree.bck, tree.fwd, inv_mass)) break;
    if (depth + 1 == max_depth) stats.saturated = true;
  }

  stats.accept_stat = (n_states > 0) ? sum_accept / n_states : 1.0;
  stats.n_leapfrog = n_states;

  const bool moved = (tree.rep.array() != z.q.array()).any();
  if (moved) {
    Eigen::VectorXd grad(dim);
    const double logp = fn(tree.rep, grad);
    z.q = tree.rep;
    z.grad = std::move(grad);
    z.logp = logp;
  }
  return stats;
}

// Evaluates the target once to seed a phase point at position q.
inline PhasePoint make_phase_point(const Eigen::VectorXd& q, const LogDensityFn& fn) {
  PhasePoint z;
  z.q = q;
  z.p = Eigen::VectorXd::Zero(q.size());
  z.grad.resize(q.size());
  z.logp = fn(z.q, z.grad);
  require(std::isfinite(z.logp), "NonFiniteInit", "point has non-finite density");
  return z;
}

// Convenience entry point used by the oracle tests: transition from a bare
// position vector.
inline Eigen::VectorXd nuts_transition(const Eigen::VectorXd& q, double eps, int max_depth,
                                       const Eigen::VectorXd& inv_mass, const LogDensityFn& fn,
                                       Rng& rng, NutsStats* stats_out = nullptr) {
  PhasePoint z;
  z.q = q;
  z.p = Eigen::VectorXd::Zero(q.size());
  z.grad.resize(q.size());
  z.logp = fn(z.q, z.grad);
  require(std::isfinite(z.logp), "NonFiniteInit", "initial point has non-finite density");
  NutsStats stats = nuts_transition(z, eps, max_depth, inv_mass, fn, rng);
  if (stats_out) *stats_out = stats;
  return z.q;
}

// Nesterov dual averaging of log step size toward a target acceptance.
class DualAveraging {
 public:
  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    log_eps_ = std::log(eps);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    count_ = 1;
  }

  void update(double accept, double target) {
    const double eta = 1.0 / (count_ + t0_);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target - accept);
    log_eps_ = mu_ - h_bar_ * std::sqrt(static_cast<double>(count_)) / gamma_;
    const double weight = std::pow(static_cast<double>(count_), -kappa_);
    log_eps_bar_ = weight * log_eps_ + (1.0 - weight) * log_eps_bar_;
    ++count_;
  }

  double current() const { return std::exp(log_eps_); }
  double averaged() const { return std::exp(log_eps_bar_); }

 private:
  double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0;
  int count_ = 1;
  const double gamma_ = 0.05, t0_ = 10.0, kappa_ = 0.75;
};

// Crude but robust bracketing of a workable initial step size: double or
// halve until the one-step acceptance crosses 1/2.
inline double find_initial_step_size(const PhasePoint& z, const Eigen::VectorXd& inv_mass,
                                     const LogDensityFn& fn, Rng& rng) {
  double eps = 1.0;
  PhasePoint trial = z;
  for (Eigen::Index k = 0; k < trial.p.size(); ++k)
    trial.p[k] = rng.normal() / std::sqrt(inv_mass[k]);
  const double joint0 = joint_logp(trial, inv_mass);

  auto one_step_accept = [&](double step) {
    PhasePoint w = trial;
    if (!leapfrog(w, step, inv_mass, fn)) return 0.0;
    return std::exp(std::min(0.0, joint_logp(w, inv_mass) - joint0));
  };

  double accept = one_step_accept(eps);
  const double dir = (accept > 0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    if (dir > 0 && !(accept > 0.5)) break;
    if (dir < 0 && !(accept < 0.5)) break;
    eps *= (dir > 0) ? 2.0 : 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
    accept = one_step_accept(eps);
  }
  return std::clamp(eps, 1e-10, 1e7);
}

// Warmup layout: step-size buffers bracket expanding mass-estimation windows
// (75 / 25-doubling / 50).  Below 150 warmup iterations only the step size
// adapts.
struct WarmupSchedule {
  int warmup = 0;
  int init_buffer = 75;
  int term_buffer = 50;
  int base_window = 25;
  bool windowed = false;
  std::vector<int> window_ends;  // 0-based iteration index ending each window

  static WarmupSchedule make(int warmup) {
    WarmupSchedule s;
    s.warmup = warmup;
    s.windowed = warmup >= s.init_buffer + s.base_window + s.term_buffer;
    if (!s.windowed) return s;
    int start = s.init_buffer;
    int size = s.base_window;
    for (;;) {
      int end = start + size;
      if (end + 2 * size + s.term_buffer > warmup) end = warmup - s.term_buffer;
      s.window_ends.push_back(end);
      if (end >= warmup - s.term_buffer) break;
      start = end;
      size *= 2;
    }
    return s;
  }

  bool in_mass_window(int iter) const {
    return windowed && iter >= init_buffer && iter < warmup - term_buffer;
  }
  bool is_window_end(int iter) const {
    return windowed &&
           std::find(window_ends.begin(), window_ends.end(), iter + 1) != window_ends.end();
  }
};

// Streaming mean/variance.
class Welford {
 public:
  void add(const Eigen::VectorXd& x) {
    if (count_ == 0) {
      mean_ = Eigen::VectorXd::Zero(x.size());
      m2_ = Eigen::VectorXd::Zero(x.size());
    }
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  int count() const { return count_; }

  Eigen::VectorXd regularized_variance() const {
    const double n = static_cast<double>(count_);
    Eigen::VectorXd var = (count_ > 1) ? (m2_ / (n - 1.0)).eval()
                                       : Eigen::VectorXd::Zero(mean_.size());
    return (n / (n + 5.0)) * var +
           Eigen::VectorXd::Constant(mean_.size(), 1e-3 * (5.0 / (n + 5.0)));
  }

  void reset() { count_ = 0; }

 private:
  int count_ = 0;
  Eigen::VectorXd mean_, m2_;
};

struct AdaptationResult {
  double step_size = 0.0;
  Eigen::VectorXd inv_mass;
  PhasePoint state;                 // chain state at the end of warmup
  double accept_mean_tail = 0.0;    // mean acceptance over the last 200 warmup iters
};

// Runs the full warmup phase on `z`, adapting step size by dual averaging
// and the diagonal metric over expanding windows.
inline AdaptationResult adapt_warmup(PhasePoint z, const SamplerConfig& config,
                                     const LogDensityFn& fn, Rng& rng) {
  const Eigen::Index dim = z.q.size();
  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(dim);
  const WarmupSchedule schedule = WarmupSchedule::make(config.warmup);

  DualAveraging da;
  double eps = find_initial_step_size(z, inv_mass, fn, rng);
  da.restart(eps);

  Welford window_acc;
  double tail_accept_sum = 0.0;
  int tail_count = 0;
  const int tail_start = std::max(0, config.warmup - 200);

  for (int iter = 0; iter < config.warmup; ++iter) {
    NutsStats stats = nuts_transition(z, eps, config.max_treedepth, inv_mass, fn, rng);
    da.update(stats.accept_stat, config.target_accept);
    eps = da.current();
    if (iter >= tail_start) {
      tail_accept_sum += stats.accept_stat;
      ++tail_count;
    }
    if (schedule.in_mass_window(iter)) window_acc.add(z.q);
    if (schedule.is_window_end(iter) && window_acc.count() > 1) {
      inv_mass = window_acc.regularized_variance();
      window_acc.reset();
      eps = find_initial_step_size(z, inv_mass, fn, rng);
      da.restart(eps);
    }
  }

  AdaptationResult result;
  result.step_size = (config.warmup > 0) ? da.averaged() : eps;
  result.inv_mass = std::move(inv_mass);
  result.state = std::move(z);
  result.accept_mean_tail = (tail_count > 0) ? tail_accept_sum / tail_count : 1.0;
  return result;
}

struct ChainOutput {
  Eigen::MatrixXd draws;  // (iterations - warmup) x dim
  int divergences = 0;
  int treedepth_saturations = 0;
  double step_size = 0.0;
  Eigen::VectorXd inv_mass;
  double accept_mean = 0.0;
};

inline ChainOutput run_chain(const LogDensityFn& fn, Eigen::Index dim,
                             const SamplerConfig& config, int chain_id) {
  Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(chain_id));

  PhasePoint z;
  z.q.resize(dim);
  z.p = Eigen::VectorXd::Zero(dim);
  z.grad.resize(dim);
  bool initialized = false;
  for (int attempt = 0; attempt < 100 && !initialized; ++attempt) {
    for (Eigen::Index k = 0; k < dim; ++k)
      z.q[k] = config.init_radius * (2.0 * rng.uniform() - 1.0);
    z.logp = fn(z.q, z.grad);
    initialized = std::isfinite(z.logp) && z.grad.allFinite();
  }
  require(initialized, "NonFiniteInit",
          "chain " + std::to_string(chain_id + 1) +
              " found no finite starting point in 100 attempts");

  AdaptationResult adapted = adapt_warmup(std::move(z), config, fn, rng);

  ChainOutput out;
  out.step_size = adapted.step_size;
  out.inv_mass = adapted.inv_mass;
  const int n_draws = config.iterations - config.warmup;
  out.draws.resize(n_draws, dim);

  PhasePoint state = std::move(adapted.state);
  double accept_sum = 0.0;
  for (int s = 0; s < n_draws; ++s) {
    NutsStats stats = nuts_transition(state, adapted.step_size, config.max_treedepth,
                                      adapted.inv_mass, fn, rng);
    if (stats.divergent) ++out.divergences;
    if (stats.saturated) ++out.treedepth_saturations;
    accept_sum += stats.accept_stat;
    out.draws.row(s) = state.q;
  }
  out.accept_mean = (n_draws > 0) ? accept_sum / n_draws : 0.0;
  return out;
}

}  // namespace hmc

// Samples `config.chains` independent chains.  Chains run concurrently with
// per-chain RNG streams derived from the master seed, and results are merged
// by chain index, so the output is invariant to scheduling.
inline PosteriorDraws run_chains(const LogDensityFn& fn, Eigen::Index dim,
                                 const SamplerConfig& config) {
  config.validate();

  std::vector<hmc::ChainOutput> outputs(config.chains);
  std::vector<std::exception_ptr> failures(config.chains);
  {
    std::vector<std::thread> workers;
    workers.reserve(config.chains);
    for (int chain = 0; chain < config.chains; ++chain) {
      workers.emplace_back([&, chain] {
        try {
          outputs[chain] = hmc::run_chain(fn, dim, config, chain);
        } catch (...) {
          failures[chain] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  const int n_draws = config.iterations - config.warmup;
  PosteriorDraws result;
  result.draws.resize(static_cast<Eigen::Index>(config.chains) * n_draws, dim);
  result.chain_ids.reserve(result.draws.rows());
  int total_divergent = 0;
  for (int chain = 0; chain < config.chains; ++chain) {
    const hmc::ChainOutput& out = outputs[chain];
    result.draws.middleRows(static_cast<Eigen::Index>(chain) * n_draws, n_draws) = out.draws;
    for (int s = 0; s < n_draws; ++s) result.chain_ids.push_back(chain);
    result.divergence_count.push_back(out.divergences);
    result.treedepth_saturation_count.push_back(out.treedepth_saturations);
    result.step_sizes.push_back(out.step_size);
    result.mass_diag.push_back(out.inv_mass);
    result.accept_mean.push_back(out.accept_mean);
    total_divergent += out.divergences;
  }
  require(total_divergent < config.chains * n_draws, "AllChainsDiverged",
          "every post-warmup transition diverged");
  return result;
}

inline LogDensityFn posterior_target(const EvalContext& ctx) {
  return [&ctx](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
    auto r = detail::eval_log_density(q, ctx, /*include_prior=*/true, /*want_grad=*/true);
    grad = std::move(*r.gradient);
    return r.value;
  };
}

inline PosteriorDraws run_chains(const EvalContext& ctx, const SamplerConfig& config) {
  return run_chains(posterior_target(ctx), ctx.layout.free_size(), config);
}

}  // namespace dirreg

#endif  // DIRREG_INFER_HMC_HPP
