#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/priors/priors.hpp"

namespace fluctsel {

/// Five-point central differences. The step is chosen per coordinate from
/// 10 * rel_step * max(1, |x_i|) down by decades, keeping the estimate that
/// agrees best with its coarser neighbour; infeasible evaluations are skipped.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double rel_step = 1e-3);

/// max_i |a_i - b_i| / max(1, |b_i|).
double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// One-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf);

/// Analytic CDF of sigma under the scale prior.
double scale_cdf(const PriorSpec& spec, double sigma);

struct JacobianCheck {
  double ks = 0.0;
  double mean_log_sigma = 0.0;
  std::vector<double> sigma;  // the draws
};

/// Draws log sigma by inverse-CDF sampling of exp(log_scale_density(e^l) +
/// sign * jacobian_adjustment(l)) on a fine grid, maps them to sigma and
/// compares with the analytic sigma-space CDF. sign = -1 injects an error.
JacobianCheck jacobian_check(const PriorSpec& spec, int draws, std::uint64_t seed,
                             int sign = 1);

}  // namespace fluctsel
