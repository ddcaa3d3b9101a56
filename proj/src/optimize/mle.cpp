#include "fluctsel/optimize/mle.hpp"

#include <cmath>
#include <limits>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"

namespace fluctsel {

ModelParams default_init(const Dataset& d, const StructureMask& s) {
  double n = 0.0, sx = 0.0, sxz = 0.0, sz = 0.0, szz = 0.0;
  for (const auto& y : d.years()) {
    for (std::size_t i = 0; i < y.z.size(); ++i) {
      n += 1.0;
      sz += y.z[i];
      szz += y.z[i] * y.z[i];
    }
    sx += y.sum_x;
    sxz += y.sum_xz;
  }
  ModelParams p;
  p.structure = s;
  const double mean_x = sx / n;
  const double mean_z = sz / n;
  const double var_z = std::max(szz / n - mean_z * mean_z, 1e-8);
  p.mu[kAlpha] = std::log(std::max(mean_x, 1e-3));
  p.mu[kTheta] = sx > 0.0 ? sxz / sx : mean_z;
  p.mu[kOmega] = 0.5 * std::log(var_z);
  p.log_sigma.setZero();
  p.normalize();
  return p;
}

double stability_barrier(const Eigen::Matrix3d& phi, double weight, double width) {
  const double gap = 1.0 - spectral_radius(phi);
  if (gap >= width) return 0.0;
  if (gap <= 0.0) return std::numeric_limits<double>::infinity();
  const double r = gap / width;
  return -weight * (std::log(r) - r + 1.0);
}

namespace {

bool has_phi(const StructureMask& s) {
  for (const auto& r : s.phi_free)
    for (bool b : r)
      if (b) return true;
  return false;
}

class MleObjective {
 public:
  MleObjective(const ObservationModel& obs, const StructureMask& s, const MleOptions& opt)
      : obs_(obs), s_(s), opt_(opt), cs_(coordinates(s)) {}

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const ModelParams p = from_unconstrained(x, s_, Transform::Mle);
    double barrier = 0.0;
    if (has_phi(s_)) {
      barrier = stability_barrier(p.phi, opt_.barrier_weight, opt_.barrier_width);
      if (!std::isfinite(barrier)) return std::numeric_limits<double>::infinity();
    }
    MarginalResult m;
    try {
      const Eigen::MatrixXd* warm = warm_.size() > 0 ? &warm_ : nullptr;
      m = marginal(p, obs_, grad != nullptr, warm, opt_.laplace);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(m.value)) return std::numeric_limits<double>::infinity();
    warm_ = m.inner.mode;
    if (grad) {
      *grad = m.grad.cwiseProduct(dnatural_dx(x, s_, Transform::Mle));
      if (barrier > 0.0) {
        for (std::size_t j = 0; j < cs_.size(); ++j) {
          if (cs_[j].kind != CoordKind::Phi) continue;
          const double h = 1e-7;
          Eigen::Matrix3d a = p.phi, b = p.phi;
          a(cs_[j].i, cs_[j].j) += h;
          b(cs_[j].i, cs_[j].j) -= h;
          const double fa = stability_barrier(a, opt_.barrier_weight, opt_.barrier_width);
          const double fb = stability_barrier(b, opt_.barrier_weight, opt_.barrier_width);
          if (!std::isfinite(fa) || !std::isfinite(fb)) return std::numeric_limits<double>::infinity();
          (*grad)[j] += (fa - fb) / (2.0 * h);
        }
      }
    }
    return m.value + barrier;
  }

 private:
  const ObservationModel& obs_;
  StructureMask s_;
  MleOptions opt_;
  std::vector<Coord> cs_;
  Eigen::MatrixXd warm_;
};

}  // namespace

Eigen::MatrixXd observed_information(const ModelParams& at, const ObservationModel& obs,
                                     const LaplaceOptions& opt) {
  const StructureMask& s = at.structure;
  const Eigen::VectorXd x0 = to_natural(at);
  const Eigen::Index n = x0.size();
  Eigen::MatrixXd h(n, n);
  const Eigen::MatrixXd warm = marginal(at, obs, false, nullptr, opt).inner.mode;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-4 * std::max(1.0, std::abs(x0[j]));
    Eigen::VectorXd xp = x0, xm = x0;
    xp[j] += step;
    xm[j] -= step;
    const Eigen::VectorXd gp = marginal(from_natural(xp, s), obs, true, &warm, opt).grad;
    const Eigen::VectorXd gm = marginal(from_natural(xm, s), obs, true, &warm, opt).grad;
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd standard_errors(const Eigen::MatrixXd& info) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-8 * std::max(top, 1e-300)))
    fail(Errc::SingularInformation, "observed information is not positive definite");
  const Eigen::MatrixXd cov =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return cov.diagonal().cwiseSqrt();
}

MleFit fit_mle(const ObservationModel& obs, const StructureMask& s, const ModelParams& init,
               const MleOptions& opt) {
  s.validate();
  ModelParams start = init;
  start.structure = s;
  for (int k = 0; k < 3; ++k)
    if (s.active[k] && !std::isfinite(start.log_sigma[k])) start.log_sigma[k] = 0.0;
  start.normalize();
  MleObjective obj(obs, s, opt);
  const Eigen::VectorXd x0 = to_unconstrained(start, Transform::Mle);
  const BfgsResult br = bfgs_minimize(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return obj(x, g); }, x0, opt.bfgs);

  MleFit fit;
  fit.estimates = from_unconstrained(br.x, s, Transform::Mle);
  fit.names = coordinate_names(s);
  fit.n_free = s.n_free();
  fit.converged = br.converged;
  fit.iterations = br.iterations;
  const MarginalResult m = marginal(fit.estimates, obs, true, nullptr, opt.laplace);
  fit.nll_at_opt = m.value;
  fit.grad_max = m.grad.cwiseAbs().maxCoeff();
  fit.aic = aic(fit.n_free, fit.nll_at_opt);
  fit.std_errors = Eigen::VectorXd::Constant(fit.n_free, std::numeric_limits<double>::quiet_NaN());
  if (opt.compute_se) {
    fit.information = observed_information(fit.estimates, obs, opt.laplace);
    try {
      fit.std_errors = standard_errors(fit.information);
    } catch (const Error& e) {
      fit.se_error = e.what();
    }
  }
  return fit;
}

MleFit fit_mle(const Dataset& d, const StructureMask& s, const ModelParams* init,
               const MleOptions& opt) {
  for (const auto& y : d.years())
    if (y.z.empty()) fail(Errc::InvalidArgument, "fit_mle: year without observations");
  PoissonObservation obs(d);
  const ModelParams start = init ? *init : default_init(d, s);
  return fit_mle(obs, s, start, opt);
}

}  // namespace fluctsel
