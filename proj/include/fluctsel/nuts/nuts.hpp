#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/log_density.hpp"

namespace fluctsel {

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int total_iters = 3000;
  int thin = 2;
  double adapt_delta = 0.95;
  int max_treedepth = 10;
  std::uint64_t seed = 1;
  double max_delta_h = 1000.0;
  bool parallel = true;
  int init_tries = 100;
  double init_radius = 2.0;
  /// Jitter is added to this point when set (default: the origin).
  std::optional<Eigen::VectorXd> init_center;

  /// Throws ConfigError.
  void validate() const;
  int retained_per_chain() const { return (total_iters - warmup + thin - 1) / thin; }
};

struct ChainDraws {
  Eigen::MatrixXd draws;            // retained x reported coordinates
  std::vector<bool> divergent;      // one per post-warmup iteration
  std::vector<int> treedepth;       // one per iteration, warmup included
  std::vector<double> energy;       // one per iteration
  std::vector<double> accept_stat;  // one per iteration
  std::vector<int> n_leapfrog;      // one per iteration
  double seconds = 0.0;
  double step_size = 0.0;
  Eigen::VectorXd inv_metric;
  Eigen::VectorXd init;
  int warmup = 0;

  int num_divergent() const;
  double mean_accept_post_warmup() const;
};

struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<ChainDraws> chains;
  bool parallel = false;

  std::size_t num_params() const { return names.size(); }
  /// All chains stacked in chain order.
  Eigen::MatrixXd merged() const;
  /// One column of every chain.
  std::vector<Eigen::VectorXd> column(std::size_t j) const;
  int total_divergences() const;
  int post_warmup_iterations() const;
  /// Sum of chain times when run serially, max when run in parallel.
  /// `parallel` is set only when more than one thread actually ran chains.
  double wall_seconds() const;
};

/// Uniform(-radius, radius) point, reproducible per (seed, chain, attempt).
Eigen::VectorXd init_jitter(std::size_t dim, std::uint64_t seed, int chain = 0, int attempt = 0,
                            double radius = 2.0);

/// Runs one chain on `target` (which it may mutate).
ChainDraws sample_chain(LogDensity& target, const SamplerConfig& cfg, int chain);

/// Runs cfg.chains chains, each on its own clone of `target`; chains run
/// concurrently when cfg.parallel.
PosteriorDraws sample(const LogDensity& target, const SamplerConfig& cfg);

}  // namespace fluctsel
