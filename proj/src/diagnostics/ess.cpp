#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <unsupported/Eigen/FFT>

#include "fluctsel/core/error.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"

namespace fluctsel {

namespace {

using Chains = std::vector<Eigen::VectorXd>;

void check_draws(const Chains& c) {
  if (c.size() < 2) fail(Errc::TooFewDraws, "ess: need at least 2 chains");
  for (const auto& x : c)
    if (x.size() < 100) fail(Errc::TooFewDraws, "ess: need at least 100 draws per chain");
}

Chains split(const Chains& c) {
  Chains out;
  for (const auto& x : c) {
    const Eigen::Index h = x.size() / 2;
    out.emplace_back(x.head(h));
    out.emplace_back(x.tail(h));
  }
  return out;
}

bool constant(const Chains& c) {
  const double v0 = c.front()[0];
  for (const auto& x : c)
    for (double v : x)
      if (v != v0) return false;
  return true;
}

Chains rank_normalize(const Chains& c) {
  std::vector<std::pair<double, std::size_t>> all;
  std::size_t s = 0;
  for (const auto& x : c)
    for (double v : x) all.emplace_back(v, s++);
  std::sort(all.begin(), all.end());
  std::vector<double> rank(all.size());
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].first == all[i].first) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // average rank, 1-based
    for (std::size_t k = i; k <= j; ++k) rank[all[k].second] = r;
    i = j + 1;
  }
  const boost::math::normal_distribution<> nd;
  const double n = static_cast<double>(all.size());
  Chains out;
  s = 0;
  for (const auto& x : c) {
    Eigen::VectorXd z(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      z[i] = boost::math::quantile(nd, (rank[s++] - 0.375) / (n + 0.25));
    out.push_back(z);
  }
  return out;
}

double ess_chains(const Chains& c) {
  const std::size_t m = c.size();
  Eigen::Index n = c.front().size();
  for (const auto& x : c) n = std::min(n, x.size());
  std::vector<Eigen::VectorXd> acov(m);
  Eigen::VectorXd means(m), vars(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::VectorXd x = c[k].head(n);
    acov[k] = autocovariance(x);
    means[k] = x.mean();
    vars[k] = acov[k][0] * n / (n - 1.0);
  }
  const double mean_var = vars.mean();
  double var_plus = mean_var * (n - 1.0) / n;
  if (m > 1) var_plus += (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto acov_s = [&](Eigen::Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return s / m;
  };
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double even = 1.0;
  rho[0] = even;
  double odd = 1.0 - (mean_var - acov_s(1)) / var_plus;
  rho[1] = odd;
  Eigen::Index t = 1;
  while (t < n - 4 && even + odd > 0.0) {
    even = 1.0 - (mean_var - acov_s(t + 1)) / var_plus;
    odd = 1.0 - (mean_var - acov_s(t + 2)) / var_plus;
    if (even + odd >= 0.0) {
      rho[t + 1] = even;
      rho[t + 2] = odd;
    }
    t += 2;
  }
  const Eigen::Index max_t = t;
  if (even > 0.0) rho[max_t + 1] = even;
  // initial monotone sequence
  for (t = 1; t <= max_t - 3; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
      rho[t + 2] = rho[t + 1];
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0 + 2.0 * rho.head(max_t).sum() + rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double rhat_chains(const Chains& c) {
  const std::size_t m = c.size();
  const double n = static_cast<double>(c.front().size());
  Eigen::VectorXd means(m), vars(m);
  for (std::size_t k = 0; k < m; ++k) {
    means[k] = c[k].mean();
    vars[k] = (c[k].array() - means[k]).square().sum() / (n - 1.0);
  }
  const double w = vars.mean();
  const double b = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

}  // namespace

Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::Index len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> buf(len, 0.0);
  const double mu = x.mean();
  for (Eigen::Index i = 0; i < n; ++i) buf[i] = x[i] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  Eigen::VectorXd ac(n);
  for (Eigen::Index i = 0; i < n; ++i) ac[i] = back[i] / n;
  return ac;
}

Eigen::VectorXd autocovariance_reference(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd d = x.array() - x.mean();
  Eigen::VectorXd ac(n);
  for (Eigen::Index t = 0; t < n; ++t) ac[t] = d.head(n - t).dot(d.tail(n - t)) / n;
  return ac;
}

double ess(const std::vector<Eigen::VectorXd>& chains) {
  check_draws(chains);
  if (constant(chains)) return std::numeric_limits<double>::quiet_NaN();
  return ess_chains(rank_normalize(split(chains)));
}

double ess_raw(const std::vector<Eigen::VectorXd>& chains) {
  check_draws(chains);
  if (constant(chains)) return std::numeric_limits<double>::quiet_NaN();
  return ess_chains(split(chains));
}

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty() || chains.front().size() < 4)
    return std::numeric_limits<double>::quiet_NaN();
  const Chains s = split(chains);
  if (constant(s)) return std::numeric_limits<double>::quiet_NaN();
  const double bulk = rhat_chains(rank_normalize(s));
  std::vector<double> all;
  for (const auto& x : s) all.insert(all.end(), x.data(), x.data() + x.size());
  const double med = quantile(all, 0.5);
  Chains folded;
  for (const auto& x : s) folded.emplace_back((x.array() - med).abs());
  const double tail = rhat_chains(rank_normalize(folded));
  if (std::isnan(tail)) return bulk;
  return std::max(bulk, tail);
}

}  // namespace fluctsel
