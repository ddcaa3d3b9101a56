#include <algorithm>
#include <cmath>
#include <limits>

#include "fluctsel/core/error.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"

namespace fluctsel {

double quantile(std::vector<double> x, double prob) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const double h = (x.size() - 1) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - lo) * (x[hi] - x[lo]);
}

Summary summarize(const PosteriorDraws& draws) {
  Summary s;
  const Eigen::MatrixXd all = draws.merged();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.min_ess = nan;
  for (std::size_t j = 0; j < draws.num_params(); ++j) {
    ParamSummary p;
    p.name = draws.names[j];
    const Eigen::VectorXd col = all.col(static_cast<Eigen::Index>(j));
    const double n = static_cast<double>(col.size());
    p.mean = col.mean();
    p.sd = n > 1 ? std::sqrt((col.array() - p.mean).square().sum() / (n - 1.0)) : 0.0;
    std::vector<double> v(col.data(), col.data() + col.size());
    p.q025 = quantile(v, 0.025);
    p.q50 = quantile(v, 0.5);
    p.q975 = quantile(v, 0.975);
    const auto chains = draws.column(j);
    try {
      p.ess = ess(chains);
    } catch (const Error& e) {
      if (e.code() != Errc::TooFewDraws) throw;
      p.ess = nan;
    }
    p.rhat = split_rhat(chains);
    if (!std::isnan(p.ess) && !(p.ess >= s.min_ess)) s.min_ess = p.ess;
    s.params.push_back(p);
  }
  s.divergences = draws.total_divergences();
  s.post_warmup_iterations = draws.post_warmup_iterations();
  s.divergence_fraction =
      s.post_warmup_iterations > 0 ? double(s.divergences) / s.post_warmup_iterations : 0.0;
  for (const auto& c : draws.chains) {
    s.seconds_sum += c.seconds;
    s.seconds_max = std::max(s.seconds_max, c.seconds);
  }
  s.timing_mode = draws.parallel ? "parallel" : "serial";
  s.wall_seconds = draws.wall_seconds();
  s.efficiency = s.wall_seconds > 0.0 ? s.min_ess / s.wall_seconds : nan;
  return s;
}

bool excluded_by_divergences(int divergences, int iterations, double threshold) {
  if (iterations <= 0) return false;
  // fraction >= threshold, compared without rounding the quotient twice
  return static_cast<double>(divergences) >= threshold * iterations * (1.0 - 1e-12);
}

FilterResult divergence_filter(const std::vector<Summary>& runs, double threshold) {
  FilterResult r;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (excluded_by_divergences(runs[i].divergences, runs[i].post_warmup_iterations, threshold))
      r.excluded.push_back(i);
    else
      r.kept.push_back(i);
  }
  return r;
}

}  // namespace fluctsel
