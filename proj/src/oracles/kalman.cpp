#include "fluctsel/oracles/kalman.hpp"

#include <cmath>
#include <numbers>

#include "fluctsel/core/error.hpp"

namespace fluctsel {

KalmanResult kalman(const StateSpace& ss, const std::vector<std::vector<double>>& y, bool smooth) {
  const std::size_t n = y.size();
  const Eigen::Index m = ss.a1.size();
  KalmanResult r;
  Eigen::VectorXd a = ss.a1;
  Eigen::MatrixXd p = ss.p1;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      a = ss.transition * a;
      p = ss.transition * p * ss.transition.transpose() + ss.state_cov;
    }
    r.predicted.push_back(a);
    r.predicted_cov.push_back(p);
    Eigen::VectorXd k = Eigen::VectorXd::Zero(m);
    for (double obs : y[t]) {
      const Eigen::VectorXd pz = p * ss.z;
      const double f = ss.z.dot(pz) + ss.h;
      if (!(f > 1e-300) || !std::isfinite(f))
        fail(Errc::NotPositiveDefinite, "kalman: prediction-error variance is not positive");
      const double v = obs - ss.d - ss.z.dot(a);
      k = pz / f;
      a += k * v;
      p -= k * pz.transpose();
      p = (0.5 * (p + p.transpose())).eval();
      r.nll += 0.5 * (log2pi + std::log(f) + v * v / f);
    }
    r.gain.push_back(k);
    r.filtered.push_back(a);
    r.filtered_cov.push_back(p);
  }
  if (!smooth || n == 0) return r;
  r.smoothed.resize(n);
  r.smoothed_cov.resize(n);
  r.smoothed[n - 1] = r.filtered[n - 1];
  r.smoothed_cov[n - 1] = r.filtered_cov[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const Eigen::MatrixXd& pp = r.predicted_cov[t + 1];
    Eigen::LDLT<Eigen::MatrixXd> ldlt(pp);
    const Eigen::MatrixXd j =
        ldlt.solve(ss.transition * r.filtered_cov[t]).transpose();  // P_t T^T P_{t+1|t}^{-1}
    r.smoothed[t] = r.filtered[t] + j * (r.smoothed[t + 1] - r.predicted[t + 1]);
    r.smoothed_cov[t] = r.filtered_cov[t] + j * (r.smoothed_cov[t + 1] - pp) * j.transpose();
  }
  return r;
}

StateSpace linear_gaussian_state_space(const ModelParams& p, const GaussianObservation& obs) {
  check_params(p);
  const auto act = p.structure.active_indices();
  const int m = static_cast<int>(act.size());
  const Eigen::Matrix3d g0 = stationary_corr(p.rho);
  const Eigen::Matrix3d sw = innovation_cov(p.phi, g0);
  StateSpace ss;
  ss.transition.resize(m, m);
  ss.p1.resize(m, m);
  ss.state_cov.resize(m, m);
  ss.z.resize(m);
  for (int a = 0; a < m; ++a) {
    ss.z[a] = obs.h()[act[a]] * p.sigma(act[a]);
    for (int b = 0; b < m; ++b) {
      ss.transition(a, b) = p.phi(act[a], act[b]);
      ss.p1(a, b) = g0(act[a], act[b]);
      ss.state_cov(a, b) = sw(act[a], act[b]);
    }
  }
  ss.a1 = Eigen::VectorXd::Zero(m);
  ss.d = obs.h().dot(p.mu);
  ss.h = obs.tau() * obs.tau();
  return ss;
}

double kalman_nll(const ModelParams& p, const GaussianObservation& obs) {
  return kalman(linear_gaussian_state_space(p, obs), obs.y(), false).nll;
}

Eigen::MatrixXd kalman_smoothed_latents(const ModelParams& p, const GaussianObservation& obs) {
  const auto r = kalman(linear_gaussian_state_space(p, obs), obs.y(), true);
  const Eigen::Index m = r.smoothed.empty() ? 0 : r.smoothed.front().size();
  Eigen::MatrixXd u(static_cast<Eigen::Index>(r.smoothed.size()), m);
  for (std::size_t t = 0; t < r.smoothed.size(); ++t) u.row(t) = r.smoothed[t].transpose();
  return u;
}

}  // namespace fluctsel
