#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/observation.hpp"
#include "fluctsel/nuts/nuts.hpp"

namespace fluctsel {

/// Rank-normalized split-chain ESS with Geyer's initial monotone sequence.
/// Throws TooFewDraws for < 2 chains or < 100 draws in any chain; returns
/// NaN when the draws have zero variance.
double ess(const std::vector<Eigen::VectorXd>& chains);
/// Same estimator without rank normalization (split chains only).
double ess_raw(const std::vector<Eigen::VectorXd>& chains);
/// Rank-normalized split R-hat: max of the bulk and folded versions. NaN
/// when degenerate.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

/// Autocovariance at lags 0..n-1 (biased, divided by n).
Eigen::VectorXd autocovariance(const Eigen::VectorXd& x);
Eigen::VectorXd autocovariance_reference(const Eigen::VectorXd& x);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  double rhat = 0.0;
};

struct Summary {
  std::vector<ParamSummary> params;
  double min_ess = 0.0;  // over parameters with a defined ESS
  int divergences = 0;
  int post_warmup_iterations = 0;
  double divergence_fraction = 0.0;
  double wall_seconds = 0.0;
  double seconds_sum = 0.0;  // chain times summed
  double seconds_max = 0.0;  // slowest chain
  std::string timing_mode;   // "serial" (sum) or "parallel" (max)
  double efficiency = 0.0;   // min_ess / wall_seconds
};

/// Type-7 sample quantile of unsorted data.
double quantile(std::vector<double> x, double prob);

Summary summarize(const PosteriorDraws& draws);

struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> excluded;
};

inline constexpr double kDivergenceThreshold = 0.001;

/// A run is excluded iff its divergence fraction is >= threshold.
bool excluded_by_divergences(int divergences, int iterations,
                             double threshold = kDivergenceThreshold);
FilterResult divergence_filter(const std::vector<Summary>& runs,
                               double threshold = kDivergenceThreshold);

struct KdeGrid {
  std::string x_name, y_name;
  std::string technique;
  Eigen::VectorXd x, y;     // grid coordinates, 64 each
  Eigen::MatrixXd density;  // density(i, j) at (x[i], y[j])
  double integral() const;
};

/// 2-d Gaussian KDE with Scott's-rule bandwidth (kernel covariance =
/// sample covariance * n^(-1/3)) on an n_grid x n_grid grid.
KdeGrid kde2d(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_grid = 64,
              Exec exec = Exec::Parallel);
KdeGrid kde2d_reference(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_grid = 64);

struct LaCheck {
  std::vector<std::string> names;
  /// Interleaved rows of both runs in random order; technique 0 = full,
  /// 1 = laplace.
  Eigen::MatrixXd rows;
  std::vector<int> technique;
  Eigen::VectorXd mean_full, mean_laplace, sd_full, sd_laplace;
  /// Per parameter: sorted-quantile pairs (full, laplace).
  std::vector<Eigen::MatrixXd> qq;
  std::vector<KdeGrid> contours;
  /// max over parameters of |mean difference| / pooled posterior sd.
  double max_std_mean_diff() const;
};

/// Throws NameMismatch when the runs disagree on coordinate names. Contours
/// are computed for `pairs` (index pairs), or every pair when empty.
LaCheck la_check_export(const PosteriorDraws& full, const PosteriorDraws& laplace,
                        std::uint64_t seed,
                        std::vector<std::pair<int, int>> pairs = {}, int n_grid = 64,
                        Exec exec = Exec::Parallel);

}  // namespace fluctsel
