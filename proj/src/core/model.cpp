#include "fluctsel/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/joint.hpp"
#include "fluctsel/core/params.hpp"

namespace fluctsel {

const std::array<const char*, 3> kProcessNames{"alpha", "theta", "omega"};

int StructureMask::num_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

int StructureMask::n_free() const {
  int n = 3 + num_active();
  for (const auto& r : phi_free) n += static_cast<int>(std::count(r.begin(), r.end(), true));
  n += static_cast<int>(std::count(rho_free.begin(), rho_free.end(), true));
  return n;
}

std::vector<int> StructureMask::active_indices() const {
  std::vector<int> a;
  for (int k = 0; k < 3; ++k)
    if (active[k]) a.push_back(k);
  return a;
}

void StructureMask::validate() const {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (phi_free[i][j] && !(active[i] && active[j]))
        fail(Errc::InvalidArgument, "free phi entry touches an inactive process");
  for (int r = 0; r < 3; ++r)
    if (rho_free[r] && !(active[kRhoPairs[r][0]] && active[kRhoPairs[r][1]]))
      fail(Errc::InvalidArgument, "free rho entry touches an inactive process");
}

StructureMask StructureMask::ar1_theta() {
  StructureMask s;
  s.active = {false, true, false};
  s.phi_free[kTheta][kTheta] = true;
  return s;
}

double ModelParams::sigma(int k) const {
  return structure.active[k] ? std::exp(log_sigma[k]) : 0.0;
}

void ModelParams::normalize() {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!structure.phi_free[i][j]) phi(i, j) = 0.0;
  for (int r = 0; r < 3; ++r)
    if (!structure.rho_free[r]) rho[r] = 0.0;
  for (int k = 0; k < 3; ++k)
    if (!structure.active[k]) log_sigma[k] = -std::numeric_limits<double>::infinity();
}

void Dataset::add_year(int year, std::vector<double> z, std::vector<int> x) {
  if (z.size() != x.size()) fail(Errc::DimensionMismatch, "add_year: z and x sizes differ");
  if (z.empty()) fail(Errc::InvalidArgument, "add_year: year without observations");
  if (!years_.empty() && year <= years_.back().year)
    fail(Errc::InvalidArgument, "add_year: years must be strictly increasing");
  std::vector<std::size_t> idx(z.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return z[a] != z[b] ? z[a] < z[b] : x[a] < x[b];
  });
  YearData y;
  y.year = year;
  y.z.reserve(z.size());
  y.x.reserve(x.size());
  for (std::size_t i : idx) {
    if (x[i] < 0) fail(Errc::InvalidArgument, "add_year: negative offspring count");
    if (!std::isfinite(z[i])) fail(Errc::NonFiniteValue, "add_year: non-finite phenotype");
    y.z.push_back(z[i]);
    y.x.push_back(x[i]);
    const double xi = x[i];
    y.sum_x += xi;
    y.sum_xz += xi * z[i];
    y.sum_xzz += xi * z[i] * z[i];
    y.sum_lgamma += std::lgamma(xi + 1.0);
  }
  years_.push_back(std::move(y));
}

Dataset Dataset::from_broods(const std::vector<Brood>& broods) {
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> by_year;
  for (const auto& b : broods) {
    auto& e = by_year[b.year];
    e.first.push_back(b.laying_date);
    e.second.push_back(b.n_fledglings);
  }
  Dataset d;
  for (auto& [year, e] : by_year) d.add_year(year, std::move(e.first), std::move(e.second));
  return d;
}

std::vector<Brood> Dataset::to_broods() const {
  std::vector<Brood> out;
  for (const auto& y : years_)
    for (std::size_t i = 0; i < y.z.size(); ++i) out.push_back({y.year, y.z[i], y.x[i]});
  return out;
}

std::size_t Dataset::num_obs() const {
  std::size_t n = 0;
  for (const auto& y : years_) n += y.z.size();
  return n;
}

double log_fitness(const Eigen::Vector3d& eta, double z) {
  const double d = z - eta[kTheta];
  return eta[kAlpha] - 0.5 * d * d * std::exp(-2.0 * eta[kOmega]);
}

Eigen::Matrix3d stationary_corr(const Eigen::Vector3d& rho) {
  for (int r = 0; r < 3; ++r)
    if (!(std::abs(rho[r]) < 1.0)) fail(Errc::InvalidArgument, "correlation outside (-1, 1)");
  Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
  for (int r = 0; r < 3; ++r) {
    g(kRhoPairs[r][0], kRhoPairs[r][1]) = rho[r];
    g(kRhoPairs[r][1], kRhoPairs[r][0]) = rho[r];
  }
  Mat3T<double> a, l;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = g(i, j);
  if (!chol_small(a, 3, l)) fail(Errc::NotPositiveDefinite, "correlations are jointly infeasible");
  return g;
}

double spectral_radius(const Eigen::Matrix3d& phi) {
  Eigen::EigenSolver<Eigen::Matrix3d> es(phi, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::Matrix3d innovation_cov(const Eigen::Matrix3d& phi, const Eigen::Matrix3d& gamma0) {
  if (spectral_radius(phi) >= 1.0 - kStabilityEps)
    fail(Errc::Unstable, "transition matrix has an eigenvalue outside the unit circle");
  Eigen::Matrix3d sw = gamma0 - phi * gamma0 * phi.transpose();
  sw = 0.5 * (sw + sw.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sw, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    fail(Errc::NotPositiveSemidefinite, "innovation covariance has a negative eigenvalue");
  return sw;
}

void check_params(const ModelParams& p) {
  p.structure.validate();
  const auto g0 = stationary_corr(p.rho);
  innovation_cov(p.phi, g0);
}

NaturalProcesses natural_processes(const ModelParams& p, const LatentStates& u) {
  if (u.states.cols() != 3) fail(Errc::DimensionMismatch, "latent states must have 3 columns");
  NaturalProcesses n;
  n.eta.resize(u.states.rows(), 3);
  for (int k = 0; k < 3; ++k) {
    const double s = p.sigma(k);
    for (Eigen::Index t = 0; t < u.states.rows(); ++t)
      n.eta(t, k) = p.mu[k] + (s > 0.0 ? s * u.states(t, k) : 0.0);
  }
  return n;
}

double joint_neg_log_density(const ModelParams& p, const LatentStates& u, const Dataset& d) {
  if (static_cast<std::size_t>(u.states.rows()) != d.num_years() || u.states.cols() != 3)
    fail(Errc::DimensionMismatch, "latent states do not match the dataset");
  check_params(p);
  const auto act = p.structure.active_indices();
  const Eigen::VectorXd nat = to_natural(p);
  std::vector<double> x(nat.data(), nat.data() + nat.size());
  for (Eigen::Index t = 0; t < u.states.rows(); ++t)
    for (int k : act) x.push_back(u.states(t, k));
  return joint_nll_t<double>(x, p.structure, d);
}

}  // namespace fluctsel
