#include "fluctsel/simulate/simulate.hpp"

#include <cmath>
#include <random>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/rng.hpp"

namespace fluctsel {

namespace {

CounterRng stream(std::uint64_t seed, int year, int individual, Purpose p) {
  return CounterRng(seed, {static_cast<std::uint64_t>(year), static_cast<std::uint64_t>(individual),
                           static_cast<std::uint64_t>(p)});
}

Eigen::Matrix3d lower_chol(const Eigen::Matrix3d& a, const std::vector<int>& act) {
  const int m = static_cast<int>(act.size());
  Eigen::MatrixXd sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub(i, j) = a(act[i], act[j]);
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) fail(Errc::NotPositiveDefinite, "simulation covariance");
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out(act[i], act[j]) = l(i, j);
  return out;
}

}  // namespace

ModelParams SimDesign::truth() const {
  ModelParams p;
  p.structure = StructureMask::ar1_theta();
  p.mu = mu;
  p.phi(kTheta, kTheta) = phi_theta;
  p.log_sigma[kTheta] = std::log(sigma_theta);
  p.normalize();
  return p;
}

double selection_strength(double mu_omega, double sigma_z) {
  const double z2 = sigma_z * sigma_z;
  return z2 / (std::exp(2.0 * mu_omega) + z2);
}

double selection_strength(const SimDesign& d) { return selection_strength(d.mu[kOmega], d.sigma_z); }

SimResult simulate_model(const ModelParams& p, int tmax, int first_year, const SizeRule& sizes,
                         double z_mean, double z_sd, std::uint64_t seed) {
  if (tmax < 1) fail(Errc::InvalidArgument, "simulate: tmax must be positive");
  if (!(sizes.mean_n > 0.0)) fail(Errc::InvalidArgument, "simulate: mean sample size must be positive");
  check_params(p);
  const auto act = p.structure.active_indices();
  const Eigen::Matrix3d g0 = stationary_corr(p.rho);
  const Eigen::Matrix3d sw = innovation_cov(p.phi, g0);
  const Eigen::Matrix3d l0 = act.empty() ? Eigen::Matrix3d::Zero() : lower_chol(g0, act);
  const Eigen::Matrix3d lw = act.empty() ? Eigen::Matrix3d::Zero() : lower_chol(sw, act);

  SimResult r;
  r.truth = p;
  r.latents.states = Eigen::MatrixXd::Zero(tmax, 3);
  r.innovations = Eigen::MatrixXd::Zero(tmax, 3);
  for (int t = 0; t < tmax; ++t) {
    auto g = stream(seed, t, 0, Purpose::Latent);
    std::normal_distribution<double> nd;
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    for (int k : act) e[k] = nd(g);
    r.innovations.row(t) = e.transpose();
    Eigen::Vector3d u;
    if (t == 0)
      u = l0 * e;
    else
      u = p.phi * r.latents.states.row(t - 1).transpose() + lw * e;
    for (int k = 0; k < 3; ++k)
      if (!p.structure.active[k]) u[k] = 0.0;
    r.latents.states.row(t) = u.transpose();
  }
  const NaturalProcesses eta = natural_processes(p, r.latents);
  for (int t = 0; t < tmax; ++t) {
    auto gs = stream(seed, t, 0, Purpose::Size);
    std::poisson_distribution<int> pd(sizes.mean_n);
    int n = pd(gs);
    if (sizes.clamp) {
      n = std::max(n, sizes.min_size);
      if (sizes.max_size > 0) n = std::min(n, sizes.max_size);
    } else {
      while (n < std::max(1, sizes.min_size)) n = pd(gs);
    }
    std::vector<double> z(n);
    std::vector<int> x(n);
    const Eigen::Vector3d e = eta.eta.row(t).transpose();
    for (int i = 0; i < n; ++i) {
      auto gz = stream(seed, t, i, Purpose::Phenotype);
      z[i] = std::normal_distribution<double>(z_mean, z_sd)(gz);
      auto gx = stream(seed, t, i, Purpose::Offspring);
      x[i] = std::poisson_distribution<int>(std::exp(log_fitness(e, z[i])))(gx);
    }
    r.data.add_year(first_year + t, std::move(z), std::move(x));
  }
  return r;
}

SimResult simulate_dataset(const SimDesign& d) {
  if (!(d.phi_theta >= 0.0 && d.phi_theta < 1.0))
    fail(Errc::InvalidArgument, "design: phi_theta must lie in [0, 1)");
  if (!(d.sigma_theta > 0.0) || !(d.sigma_z >= 0.0))
    fail(Errc::InvalidArgument, "design: scales must be positive");
  SizeRule sizes;
  sizes.mean_n = d.mean_n;
  return simulate_model(d.truth(), d.tmax, d.first_year, sizes, d.mu[kTheta], d.sigma_z, d.seed);
}

ModelParams standin_truth() {
  ModelParams p;
  p.structure.active = {true, true, false};
  p.structure.phi_free[kAlpha][kAlpha] = true;
  p.structure.phi_free[kTheta][kTheta] = true;
  p.structure.rho_free[0] = true;
  p.mu = {2.0, 18.5, 3.88};
  p.phi(kAlpha, kAlpha) = 0.379;
  p.phi(kTheta, kTheta) = 0.48;
  p.rho[0] = -0.728;
  p.log_sigma = {-1.72, 3.07, 0.0};
  p.normalize();
  return p;
}

SimResult simulate_standin(std::uint64_t seed, double z_sd) {
  SizeRule sizes;
  sizes.mean_n = 81.0;
  sizes.min_size = 10;
  sizes.max_size = 164;
  sizes.clamp = true;
  const ModelParams p = standin_truth();
  return simulate_model(p, 61, 1955, sizes, p.mu[kTheta], z_sd, seed);
}

}  // namespace fluctsel
