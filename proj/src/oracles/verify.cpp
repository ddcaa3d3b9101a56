#include "fluctsel/oracles/verify.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "fluctsel/ad/tape.hpp"
#include "fluctsel/core/error.hpp"
#include "fluctsel/core/joint.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/core/rng.hpp"
#include "fluctsel/laplace/laplace.hpp"
#include "fluctsel/nuts/nuts.hpp"
#include "fluctsel/oracles/checks.hpp"
#include "fluctsel/oracles/ghq.hpp"
#include "fluctsel/oracles/kalman.hpp"
#include "fluctsel/simulate/simulate.hpp"

namespace fluctsel {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

StructureMask rich_structure() {
  StructureMask s;
  for (int k = 0; k < 3; ++k) s.phi_free[k][k] = true;
  s.phi_free[kTheta][kAlpha] = true;
  s.rho_free = {true, true, true};
  return s;
}

/// Random parameters of `s` with a feasible stationary/innovation pair.
template <class G>
ModelParams random_params(const StructureMask& s, G& g, const Eigen::Vector3d& mu,
                          const Eigen::Vector3d& log_sigma) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    ModelParams p;
    p.structure = s;
    for (int k = 0; k < 3; ++k) {
      p.mu[k] = mu[k] + 0.2 * u(g);
      p.log_sigma[k] = log_sigma[k] + 0.3 * u(g);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) p.phi(i, j) = (i == j ? 0.8 : 0.3) * u(g);
    for (int r = 0; r < 3; ++r) p.rho[r] = 0.6 * u(g);
    p.normalize();
    try {
      check_params(p);
      return p;
    } catch (const Error&) {
    }
  }
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(3);
  o << v;
  return o.str();
}

}  // namespace

CheckResult check_stationarity(int instances, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CounterRng g(seed, {0x57a7});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int done = 0;
  while (done < instances) {
    Eigen::Matrix3d phi;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) phi(i, j) = (i == j ? 0.9 : 0.4) * u(g);
    const Eigen::Vector3d rho(0.7 * u(g), 0.7 * u(g), 0.7 * u(g));
    try {
      const Eigen::Matrix3d g0 = stationary_corr(rho);
      const Eigen::Matrix3d sw = innovation_cov(phi, g0);
      worst = std::max(worst, (g0 - (phi * g0 * phi.transpose() + sw)).cwiseAbs().maxCoeff());
      ++done;
    } catch (const Error&) {
    }
  }
  CheckResult r{"stationarity identity", worst < 1e-12, worst, 1e-12,
                std::to_string(instances) + " random stable (Phi, rho)", since(t0)};
  return r;
}

CheckResult check_ad_vs_fd(int points, int tmax, int n, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const StructureMask s = rich_structure();
  CounterRng g(seed, {0xadfd});
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const ModelParams p = random_params(s, g, {2.0, 20.0, 3.5}, {std::log(0.2), std::log(20.0), std::log(0.2)});
    SizeRule sizes;
    sizes.mean_n = n;
    const SimResult sim = simulate_model(p, tmax, 1, sizes, 20.0, 20.0, seed * 1000 + k);
    const Eigen::VectorXd nat = to_natural(p);
    std::vector<double> x(nat.data(), nat.data() + nat.size());
    for (int t = 0; t < tmax; ++t)
      for (int a = 0; a < s.num_active(); ++a) x.push_back(nd(g));
    auto f = [&](std::span<const ad::Var> v) { return joint_nll_t<ad::Var>(v, s, sim.data); };
    const auto ga = ad::gradient(f, std::span<const double>(x));
    const Eigen::VectorXd xe = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    const Eigen::VectorXd gf = fd_gradient(
        [&](const Eigen::VectorXd& y) {
          return joint_nll_t<double>(std::span<const double>(y.data(), y.size()), s, sim.data);
        },
        xe);
    const double e = max_rel_error(Eigen::Map<const Eigen::VectorXd>(ga.data(), ga.size()), gf);
    worst = std::max(worst, e);
  }
  return {"AD vs finite differences", worst < 1e-6, worst, 1e-6,
          std::to_string(points) + " points, tmax=" + std::to_string(tmax) + ", n=" + std::to_string(n),
          since(t0)};
}

CheckResult check_laplace_vs_kalman(int instances, int tmax, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const StructureMask s = rich_structure();
  CounterRng g(seed, {0x4a1a});
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const ModelParams p = random_params(s, g, {0.5, 2.0, -0.5}, {0.0, 0.0, -0.5});
    std::vector<std::vector<double>> y(tmax);
    for (auto& v : y) {
      const int m = 1 + static_cast<int>(g() % 5);
      for (int i = 0; i < m; ++i) v.push_back(2.0 + 3.0 * nd(g));
    }
    const Eigen::Vector3d h(0.5 + u(g), u(g) - 0.5, 0.5 * u(g));
    GaussianObservation obs(std::move(y), h, 0.3 + u(g));
    worst = std::max(worst, std::abs(marginal_nll(p, obs) - kalman_nll(p, obs)));
  }
  return {"Laplace vs Kalman (max abs nll error)", worst < 1e-6, worst, 1e-6,
          std::to_string(instances) + " linear-Gaussian instances, tmax=" + std::to_string(tmax),
          since(t0)};
}

CheckResult check_laplace_vs_ghq(int instances, int tmax, int n, int nodes, std::uint64_t seed) {
  const auto t0 = Clock::now();
  ModelParams p;
  for (int k = 0; k < 3; ++k) p.structure.phi_free[k][k] = true;
  p.structure.rho_free[0] = true;
  p.mu = {2.0, 20.0, 3.5};
  p.phi.diagonal() << 0.3, 0.4, 0.2;
  p.rho[0] = -0.5;
  p.log_sigma = {std::log(0.2), std::log(20.0), std::log(0.2)};
  p.normalize();
  SizeRule sizes;
  sizes.mean_n = n;
  sizes.min_size = n;
  sizes.max_size = n;
  sizes.clamp = true;
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const SimResult sim = simulate_model(p, tmax, 1, sizes, 20.0, 20.0, seed + k);
    PoissonObservation obs(sim.data);
    const double q = ghq_marginal(p, obs, nodes);
    const double l = marginal_nll(p, obs);
    worst = std::max(worst, std::abs(l - q) / std::abs(q));
  }
  return {"Laplace vs adaptive GHQ (relative nll difference)", worst < 0.005, worst, 0.005,
          std::to_string(instances) + " Poisson toys, tmax=" + std::to_string(tmax) +
              ", n=" + std::to_string(n) + ", " + std::to_string(nodes) + " nodes",
          since(t0)};
}

namespace {

struct StdNormal final : LogDensity {
  explicit StdNormal(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) override {
    if (g) *g = -x;
    return -0.5 * x.squaredNorm();
  }
  std::unique_ptr<LogDensity> clone() const override { return std::make_unique<StdNormal>(*this); }
  std::size_t d_;
};

}  // namespace

CheckResult check_sampler(std::uint64_t seed) {
  const auto t0 = Clock::now();
  SamplerConfig cfg;
  cfg.seed = seed;
  const PosteriorDraws d10 = sample(StdNormal(10), cfg);
  const Eigen::MatrixXd m = d10.merged();
  double mean_err = 0.0, var_err = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mu = m.col(j).mean();
    const double var = (m.col(j).array() - mu).square().sum() / (m.rows() - 1.0);
    mean_err = std::max(mean_err, std::abs(mu));
    var_err = std::max(var_err, std::abs(var - 1.0));
  }
  const int div = d10.total_divergences();
  const PosteriorDraws d1 = sample(StdNormal(1), cfg);
  const Eigen::VectorXd x = d1.merged().col(0);
  const double ks = ks_statistic(std::vector<double>(x.data(), x.data() + x.size()),
                                 [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); });
  const bool ok = mean_err < 0.05 && var_err < 0.1 && div == 0 && ks < 0.02;
  return {"NUTS calibration", ok, ks, 0.02,
          "max|mean|=" + fmt(mean_err) + " max|var-1|=" + fmt(var_err) +
              " divergences=" + std::to_string(div) + " KS(1-d)=" + fmt(ks),
          since(t0)};
}

CheckResult check_jacobian(const PriorSpec& spec, int draws, std::uint64_t seed, int sign) {
  const auto t0 = Clock::now();
  const JacobianCheck j = jacobian_check(spec, draws, seed, sign);
  bool ok = j.ks < 0.02;
  std::string detail = std::to_string(draws) + " draws";
  if (spec.scale == ScalePrior::LogNormal) {
    ok = ok && std::abs(j.mean_log_sigma - spec.ln_meanlog) < 0.01;
    detail += ", mean log sigma=" + fmt(j.mean_log_sigma);
  }
  return {"Jacobian change of variables (" + spec.name + ")", ok, j.ks, 0.02, detail, since(t0)};
}

std::vector<CheckResult> verify_suite(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const std::uint64_t s = opt.seed;
  out.push_back(check_stationarity(100, s));
  out.push_back(check_ad_vs_fd(opt.quick ? 5 : 20, 25, 50, s));
  out.push_back(check_laplace_vs_kalman(opt.quick ? 10 : 50, 25, s));
  out.push_back(check_laplace_vs_ghq(opt.quick ? 1 : 5, 2, 5, opt.quick ? 11 : 21, s));
  out.push_back(check_sampler(s));
  for (const auto& p : {PriorSpec::prior1(), PriorSpec::prior2(), PriorSpec::invgamma()})
    out.push_back(check_jacobian(p, 100000, s, opt.jacobian_sign));
  return out;
}

}  // namespace fluctsel
