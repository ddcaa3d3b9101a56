#include "fluctsel/oracles/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/rng.hpp"

namespace fluctsel {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd y = x;
    auto stencil = [&](double h) {
      auto at = [&](double k) {
        y[i] = x[i] + k * h;
        try {
          return f(y);
        } catch (const Error&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      };
      const double d = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
      y[i] = x[i];
      return d;
    };
    // step ladder; keep the estimate that agrees best with the next finer one
    const double base = rel_step * 10.0 * std::max(1.0, std::abs(x[i]));
    double prev = stencil(base), best = prev, best_gap = INFINITY;
    for (int k = 1; k < 7; ++k) {
      const double cur = stencil(base * std::pow(10.0, -k));
      if (!std::isfinite(cur)) continue;
      const double gap = std::isfinite(prev) ? std::abs(cur - prev) : INFINITY;
      if (gap > 100.0 * best_gap) break;
      if (gap < best_gap || !std::isfinite(best)) {
        best_gap = gap;
        best = cur;
      }
      prev = cur;
    }
    g[i] = best;
  }
  return g;
}

double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) fail(Errc::DimensionMismatch, "max_rel_error: sizes differ");
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    e = std::max(e, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return e;
}

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

double scale_cdf(const PriorSpec& spec, double sigma) {
  if (sigma <= 0.0) return 0.0;
  switch (spec.scale) {
    case ScalePrior::HalfCauchy: return 2.0 / std::numbers::pi * std::atan(sigma / spec.hc_scale);
    case ScalePrior::LogNormal:
      return boost::math::cdf(boost::math::lognormal_distribution<>(spec.ln_meanlog, spec.ln_sdlog),
                              sigma);
    case ScalePrior::InvGamma:
      return boost::math::gamma_q(spec.ig_shape, spec.ig_scale / (sigma * sigma));
    case ScalePrior::Flat: break;
  }
  fail(Errc::InvalidArgument, "scale_cdf: flat prior has no CDF");
}

JacobianCheck jacobian_check(const PriorSpec& spec, int draws, std::uint64_t seed, int sign) {
  constexpr int kGrid = 400001;
  constexpr double lo = -40.0, hi = 40.0;
  const double dl = (hi - lo) / (kGrid - 1);
  std::vector<double> logd(kGrid), cum(kGrid, 0.0);
  double mx = -INFINITY;
  for (int i = 0; i < kGrid; ++i) {
    const double l = lo + i * dl;
    logd[i] = log_scale_density(spec, std::exp(l)) + sign * jacobian_adjustment(spec, l);
    mx = std::max(mx, logd[i]);
  }
  for (int i = 1; i < kGrid; ++i)
    cum[i] = cum[i - 1] + 0.5 * dl * (std::exp(logd[i - 1] - mx) + std::exp(logd[i] - mx));
  const double total = cum.back();

  CounterRng rng(seed, {0x1ac0b});
  JacobianCheck out;
  out.sigma.reserve(draws);
  double sum_l = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t i = std::clamp<std::size_t>(it - cum.begin(), 1, kGrid - 1);
    const double c0 = cum[i - 1], c1 = cum[i];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    const double l = lo + (i - 1 + frac) * dl;
    sum_l += l;
    out.sigma.push_back(std::exp(l));
  }
  out.mean_log_sigma = sum_l / draws;
  out.ks = ks_statistic(out.sigma, [&](double s) { return scale_cdf(spec, s); });
  return out;
}

}  // namespace fluctsel
