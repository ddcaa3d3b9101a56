#include "fluctsel/priors/priors.hpp"

#include <cmath>
#include <numbers>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"

namespace fluctsel {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * kPi);

bool is_tanh_coord(const Coord& c) { return c.kind == CoordKind::Phi || c.kind == CoordKind::Rho; }

}  // namespace

PriorSpec PriorSpec::prior1() {
  PriorSpec s;
  s.name = "prior1";
  s.scale = ScalePrior::HalfCauchy;
  return s;
}

PriorSpec PriorSpec::prior2() {
  PriorSpec s;
  s.name = "prior2";
  s.scale = ScalePrior::LogNormal;
  return s;
}

PriorSpec PriorSpec::invgamma() {
  PriorSpec s;
  s.name = "invgamma";
  s.scale = ScalePrior::InvGamma;
  return s;
}

PriorSpec PriorSpec::flat_spec() {
  PriorSpec s;
  s.name = "flat";
  s.flat = true;
  s.scale = ScalePrior::Flat;
  return s;
}

PriorSpec PriorSpec::by_name(const std::string& name) {
  if (name == "prior1") return prior1();
  if (name == "prior2") return prior2();
  if (name == "invgamma") return invgamma();
  if (name == "flat") return flat_spec();
  fail(Errc::ConfigError, "unknown prior '" + name + "' (expected prior1, prior2, invgamma)");
}

double log_scale_density(const PriorSpec& spec, double sigma) {
  if (!(sigma >= 0.0)) fail(Errc::OutOfSupport, "scale prior: negative sigma");
  switch (spec.scale) {
    case ScalePrior::HalfCauchy: {
      const double r = sigma / spec.hc_scale;
      return std::log(2.0 / (kPi * spec.hc_scale)) - std::log1p(r * r);
    }
    case ScalePrior::LogNormal: {
      if (sigma == 0.0) return -INFINITY;
      const double z = (std::log(sigma) - spec.ln_meanlog) / spec.ln_sdlog;
      return -std::log(sigma) - std::log(spec.ln_sdlog) - kLogSqrt2Pi - 0.5 * z * z;
    }
    case ScalePrior::InvGamma: {
      const double s2 = sigma * sigma;
      if (s2 == 0.0) return -INFINITY;
      const double a = spec.ig_shape, b = spec.ig_scale;
      return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(s2) - b / s2;
    }
    case ScalePrior::Flat: return 0.0;
  }
  return 0.0;
}

double log_phi_density(const PriorSpec& spec, double phi) {
  if (!(std::abs(phi) < 1.0)) fail(Errc::OutOfSupport, "phi prior: |phi| >= 1");
  if (spec.flat) return 0.0;
  const double sd = spec.phi_sd;
  const double z = std::erf(1.0 / (sd * std::numbers::sqrt2));
  return -std::log(sd) - kLogSqrt2Pi - 0.5 * phi * phi / (sd * sd) - std::log(z);
}

double log_prior(const ModelParams& p, const PriorSpec& spec) {
  const StructureMask& s = p.structure;
  double lp = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (spec.flat) break;
    const double d = p.mu[k] - spec.mu_mean;
    lp += -0.5 * std::log(2.0 * kPi * spec.mu_var) - 0.5 * d * d / spec.mu_var;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (s.phi_free[i][j]) lp += log_phi_density(spec, p.phi(i, j));
  for (int r = 0; r < 3; ++r) {
    if (!s.rho_free[r]) continue;
    if (!(std::abs(p.rho[r]) < 1.0)) fail(Errc::OutOfSupport, "rho prior: |rho| >= 1");
    if (!spec.flat) lp += -std::log(2.0);
  }
  if (s.rho_free[0] || s.rho_free[1] || s.rho_free[2]) {
    Eigen::Vector3d rho = Eigen::Vector3d::Zero();
    for (int r = 0; r < 3; ++r)
      if (s.rho_free[r]) rho[r] = p.rho[r];
    Eigen::LLT<Eigen::Matrix3d> llt(stationary_corr(rho));
    if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
      fail(Errc::OutOfSupport, "rho prior: correlation matrix not positive definite");
  }
  for (int k = 0; k < 3; ++k)
    if (s.active[k]) lp += log_scale_density(spec, std::exp(p.log_sigma[k]));
  return lp;
}

double jacobian_adjustment(const PriorSpec& spec, double log_sigma) {
  switch (spec.scale) {
    case ScalePrior::HalfCauchy:
    case ScalePrior::LogNormal: return log_sigma;
    case ScalePrior::InvGamma: return std::log(2.0) + 2.0 * log_sigma;
    case ScalePrior::Flat: return 0.0;
  }
  return 0.0;
}

double log_sigma_density(const PriorSpec& spec, double ls, double* dlog) {
  double v = 0.0, dv = 0.0;
  switch (spec.scale) {
    case ScalePrior::HalfCauchy: {
      const double r = std::exp(ls) / spec.hc_scale;
      v = std::log(2.0 / (kPi * spec.hc_scale)) - std::log1p(r * r) + ls;
      dv = 1.0 - 2.0 * r * r / (1.0 + r * r);
      break;
    }
    case ScalePrior::LogNormal: {
      const double sd = spec.ln_sdlog;
      const double z = (ls - spec.ln_meanlog) / sd;
      v = -std::log(sd) - kLogSqrt2Pi - 0.5 * z * z;
      dv = -z / sd;
      break;
    }
    case ScalePrior::InvGamma: {
      const double a = spec.ig_shape, b = spec.ig_scale;
      const double inv = std::exp(-2.0 * ls);
      v = a * std::log(b) - std::lgamma(a) - 2.0 * a * ls - b * inv + std::log(2.0);
      dv = -2.0 * a + 2.0 * b * inv;
      break;
    }
    case ScalePrior::Flat: break;
  }
  if (dlog) *dlog = dv;
  return v;
}

double log_posterior(const ModelParams& p, const LatentStates& states, const Dataset& d,
                     const PriorSpec& spec, bool marginalize, const LaplaceOptions& opt) {
  const double nll = marginalize ? marginal_nll(p, d, opt) : joint_neg_log_density(p, states, d);
  double lp = -nll + log_prior(p, spec);
  for (int k = 0; k < 3; ++k)
    if (p.structure.active[k]) lp += jacobian_adjustment(spec, p.log_sigma[k]);
  return lp;
}

// ---------------------------------------------------------------------------

PosteriorTarget::PosteriorTarget(std::shared_ptr<const ObservationModel> obs,
                                 const StructureMask& s, const PriorSpec& spec, LatentMode mode,
                                 const LaplaceOptions& opt)
    : obs_(std::move(obs)), s_(s), spec_(spec), mode_(mode), opt_(opt) {
  s_.validate();
  n_fixed_ = static_cast<std::size_t>(s_.n_free());
  tmax_ = static_cast<int>(obs_->num_years());
  m_ = s_.num_active();
}

std::size_t PosteriorTarget::dim() const {
  return n_fixed_ + (mode_ == LatentMode::Full ? static_cast<std::size_t>(tmax_ * m_) : 0);
}

std::unique_ptr<LogDensity> PosteriorTarget::clone() const {
  return std::make_unique<PosteriorTarget>(*this);
}

std::vector<std::string> PosteriorTarget::names() const { return coordinate_names(s_); }

Eigen::VectorXd PosteriorTarget::report(const Eigen::VectorXd& x) const {
  return natural_from_unconstrained(x.head(n_fixed_), s_, Transform::Sampling);
}

Eigen::VectorXd PosteriorTarget::pack(const ModelParams& p) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim());
  ModelParams q = p;
  q.structure = s_;
  q.normalize();
  x.head(n_fixed_) = to_unconstrained(q, Transform::Sampling);
  return prepare_init(x);
}

Eigen::VectorXd PosteriorTarget::prepare_init(const Eigen::VectorXd& x) const {
  if (mode_ != LatentMode::Full || m_ == 0 || static_cast<std::size_t>(x.size()) != dim())
    return x;
  Eigen::VectorXd out = x;
  try {
    const ModelParams p = from_unconstrained(x.head(n_fixed_), s_, Transform::Sampling);
    check_params(p);
    const Eigen::MatrixXd u = LatentModel(p, *obs_).screened_start();
    for (int t = 0; t < tmax_; ++t)
      for (int a = 0; a < m_; ++a) out[n_fixed_ + t * m_ + a] = u(t, a);
  } catch (const Error&) {
  }
  return out;
}

double PosteriorTarget::prior_part(const Eigen::VectorXd& nat, const ModelParams& p,
                                   Eigen::VectorXd* gnat) const {
  double lp = log_prior(p, spec_);
  const auto cs = coordinates(s_);
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const Coord& c = cs[j];
    if (c.kind == CoordKind::LogSigma) {
      double dv = 0.0;
      log_sigma_density(spec_, nat[j], &dv);
      lp += jacobian_adjustment(spec_, nat[j]);
      if (gnat) (*gnat)[j] += dv;
    } else if (gnat && !spec_.flat) {
      if (c.kind == CoordKind::Mu) (*gnat)[j] -= (nat[j] - spec_.mu_mean) / spec_.mu_var;
      if (c.kind == CoordKind::Phi) (*gnat)[j] -= nat[j] / (spec_.phi_sd * spec_.phi_sd);
    }
  }
  return lp;
}

double PosteriorTarget::log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
  if (static_cast<std::size_t>(x.size()) != dim())
    fail(Errc::DimensionMismatch, "PosteriorTarget: wrong dimension");
  if (!x.allFinite()) return -INFINITY;
  const Eigen::VectorXd xf = x.head(n_fixed_);
  try {
    const Eigen::VectorXd nat = natural_from_unconstrained(xf, s_, Transform::Sampling);
    const ModelParams p = from_natural(nat, s_);
    check_params(p);
    Eigen::VectorXd gnat = Eigen::VectorXd::Zero(n_fixed_);
    double lp = prior_part(nat, p, grad ? &gnat : nullptr);
    if (!std::isfinite(lp)) return -INFINITY;

    if (mode_ == LatentMode::Laplace) {
      const MarginalResult r = marginal(p, *obs_, grad != nullptr, nullptr, opt_);
      lp -= r.value;
      if (grad) gnat -= r.grad;
    } else {
      LatentModel lm(p, *obs_);
      Eigen::MatrixXd u(tmax_, m_);
      for (int t = 0; t < tmax_; ++t)
        for (int a = 0; a < m_; ++a) u(t, a) = x[n_fixed_ + t * m_ + a];
      std::vector<YearDerivs> d;
      lp -= lm.joint(u, grad ? 1 : 0, d, opt_.exec);
      if (grad) {
        gnat -= lm.grad_theta(u, d);
        const Eigen::MatrixXd gu = lm.grad_u(u, d);
        grad->resize(dim());
        for (int t = 0; t < tmax_; ++t)
          for (int a = 0; a < m_; ++a) (*grad)[n_fixed_ + t * m_ + a] = -gu(t, a);
      }
    }
    lp += log_abs_jacobian(xf, s_, Transform::Sampling);
    if (!std::isfinite(lp)) return -INFINITY;
    if (grad) {
      grad->conservativeResize(dim());
      const Eigen::VectorXd dn = dnatural_dx(xf, s_, Transform::Sampling);
      const auto cs = coordinates(s_);
      for (std::size_t j = 0; j < n_fixed_; ++j) {
        (*grad)[j] = gnat[j] * dn[j];
        if (is_tanh_coord(cs[j])) (*grad)[j] -= 2.0 * std::tanh(xf[j]);
      }
      if (!grad->allFinite()) return -INFINITY;
    }
    return lp;
  } catch (const Error&) {
    return -INFINITY;
  }
}

}  // namespace fluctsel
