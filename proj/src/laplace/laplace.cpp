#include "fluctsel/laplace/laplace.hpp"

#include <cmath>
#include <numbers>

#include "fluctsel/ad/dual.hpp"
#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"

namespace fluctsel {

namespace {

template <class T, class F>
Blk to_blk(const Mat3T<T>& a, int m, F&& part) {
  Blk b(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b(i, j) = part(a[i][j]);
  return b;
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

PriorTerms prior_terms(const ModelParams& p) {
  PriorTerms pt;
  pt.act = p.structure.active_indices();
  pt.m = static_cast<int>(pt.act.size());
  if (pt.m == 0) return pt;
  const Eigen::VectorXd nat = to_natural(p);
  std::vector<double> v(nat.data(), nat.data() + nat.size());
  const auto u = unpack_natural<double>(v, p.structure);
  Mat3T<double> phi, g0;
  active_blocks(u, pt.act, phi, g0);
  const auto b = var_blocks(phi, g0, pt.m);
  auto id = [](double x) { return x; };
  pt.phi = to_blk(phi, pt.m, id);
  pt.p0 = to_blk(b.p0, pt.m, id);
  pt.p = to_blk(b.p, pt.m, id);
  pt.p_phi = to_blk(b.p_phi, pt.m, id);
  pt.phit_p_phi = to_blk(b.phit_p_phi, pt.m, id);
  pt.logdet_g0 = b.logdet_g0;
  pt.logdet_sw = b.logdet_sw;
  return pt;
}

std::vector<PriorDeriv> prior_derivs(const ModelParams& p) {
  using ad::Dual1;
  std::vector<PriorDeriv> out;
  const auto act = p.structure.active_indices();
  const int m = static_cast<int>(act.size());
  if (m == 0) return out;
  const auto cs = coordinates(p.structure);
  const Eigen::VectorXd nat = to_natural(p);
  auto tan = [](const Dual1& x) { return x.tan; };
  for (std::size_t j = 0; j < cs.size(); ++j) {
    if (cs[j].kind != CoordKind::Phi && cs[j].kind != CoordKind::Rho) continue;
    std::vector<Dual1> v(nat.size());
    for (Eigen::Index i = 0; i < nat.size(); ++i)
      v[i] = Dual1(nat[i], static_cast<std::size_t>(i) == j ? 1.0 : 0.0);
    const auto u = unpack_natural<Dual1>(v, p.structure);
    Mat3T<Dual1> phi, g0;
    active_blocks(u, act, phi, g0);
    const auto b = var_blocks(phi, g0, m);
    PriorDeriv d;
    d.coord = j;
    d.dp0 = to_blk(b.p0, m, tan);
    d.dp = to_blk(b.p, m, tan);
    d.dp_phi = to_blk(b.p_phi, m, tan);
    d.dphit_p_phi = to_blk(b.phit_p_phi, m, tan);
    d.dlogdet_g0 = b.logdet_g0.tan;
    d.dlogdet_sw = b.logdet_sw.tan;
    out.push_back(std::move(d));
  }
  return out;
}

LatentModel::LatentModel(const ModelParams& p, const ObservationModel& obs)
    : p_(p), obs_(obs), tmax_(static_cast<int>(obs.num_years())) {
  p_.structure.validate();
  if (tmax_ < 1) fail(Errc::InvalidArgument, "dataset has no years");
  for (int k = 0; k < 3; ++k)
    if (!std::isfinite(p_.mu[k])) fail(Errc::NonFiniteValue, "non-finite mean");
  prior_ = prior_terms(p_);
  for (int k : prior_.act) {
    if (!std::isfinite(p_.log_sigma[k])) fail(Errc::NonFiniteValue, "non-finite log scale");
    sigma_.push_back(std::exp(p_.log_sigma[k]));
  }
}

Eigen::MatrixXd LatentModel::eta(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd e(tmax_, 3);
  for (int t = 0; t < tmax_; ++t) e.row(t) = p_.mu.transpose();
  for (int a = 0; a < m(); ++a) e.col(prior_.act[a]) += sigma_[a] * u.col(a);
  return e;
}

BlockTridiag LatentModel::prior_precision() const {
  const int mm = m();
  BlockTridiag q(tmax_, mm);
  if (mm == 0) return q;
  for (int t = 0; t < tmax_; ++t) {
    q.diag[t] = t == 0 ? prior_.p0 : prior_.p;
    if (t + 1 < tmax_) q.diag[t] += prior_.phit_p_phi;
    if (t > 0) q.sub[t] = -prior_.p_phi;
  }
  return q;
}

Eigen::MatrixXd LatentModel::prior_multiply(const Eigen::MatrixXd& u) const {
  const int mm = m();
  Eigen::MatrixXd y(tmax_, mm);
  for (int t = 0; t < tmax_; ++t) {
    Eigen::VectorXd ut = u.row(t).transpose();
    Eigen::VectorXd r = (t == 0 ? prior_.p0 : prior_.p) * ut;
    if (t + 1 < tmax_) {
      r += prior_.phit_p_phi * ut;
      r -= prior_.p_phi.transpose() * u.row(t + 1).transpose();
    }
    if (t > 0) r -= prior_.p_phi * u.row(t - 1).transpose();
    y.row(t) = r.transpose();
  }
  return y;
}

double LatentModel::prior_constant() const {
  return 0.5 * prior_.logdet_g0 + 0.5 * (tmax_ - 1) * prior_.logdet_sw +
         0.5 * tmax_ * m() * kLog2Pi;
}

double LatentModel::joint(const Eigen::MatrixXd& u, int order, std::vector<YearDerivs>& d,
                          Exec exec) const {
  evaluate_years(obs_, eta(u), order, d, exec);
  double f = 0.0;
  for (const auto& y : d) f += y.value;
  if (m() > 0) {
    // 0.5 * sum_t e_t^T P e_t with e_t the innovation
    double q = 0.0;
    for (int t = 0; t < tmax_; ++t) {
      Eigen::VectorXd e = u.row(t).transpose();
      if (t > 0) e -= prior_.phi * u.row(t - 1).transpose();
      q += e.dot((t == 0 ? prior_.p0 : prior_.p) * e);
    }
    f += 0.5 * q + prior_constant();
  }
  return f;
}

Eigen::MatrixXd LatentModel::grad_u(const Eigen::MatrixXd& u,
                                    const std::vector<YearDerivs>& d) const {
  Eigen::MatrixXd g = prior_multiply(u);
  for (int t = 0; t < tmax_; ++t)
    for (int a = 0; a < m(); ++a) g(t, a) += sigma_[a] * d[t].grad[prior_.act[a]];
  return g;
}

BlockTridiag LatentModel::hessian(const std::vector<YearDerivs>& d) const {
  BlockTridiag h = prior_precision();
  const int mm = m();
  for (int t = 0; t < tmax_; ++t)
    for (int a = 0; a < mm; ++a)
      for (int b = 0; b < mm; ++b)
        h.diag[t](a, b) += sigma_[a] * sigma_[b] * d[t].hess(prior_.act[a], prior_.act[b]);
  return h;
}

Eigen::VectorXd LatentModel::grad_theta(const Eigen::MatrixXd& u,
                                        const std::vector<YearDerivs>& d) const {
  const auto cs = coordinates(p_.structure);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(cs.size());
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const auto& c = cs[j];
    if (c.kind == CoordKind::Mu) {
      for (int t = 0; t < tmax_; ++t) g[j] += d[t].grad[c.i];
    } else if (c.kind == CoordKind::LogSigma) {
      int a = 0;
      while (prior_.act[a] != c.i) ++a;
      for (int t = 0; t < tmax_; ++t) g[j] += d[t].grad[c.i] * sigma_[a] * u(t, a);
    }
  }
  for (const auto& pd : prior_derivs(p_)) {
    double q = 0.0;
    for (int t = 0; t < tmax_; ++t) {
      Eigen::VectorXd ut = u.row(t).transpose();
      Blk dd = t == 0 ? pd.dp0 : pd.dp;
      if (t + 1 < tmax_) dd += pd.dphit_p_phi;
      q += ut.dot(dd * ut);
      if (t > 0) q -= 2.0 * ut.dot(pd.dp_phi * u.row(t - 1).transpose());
    }
    g[pd.coord] = 0.5 * q + 0.5 * pd.dlogdet_g0 + 0.5 * (tmax_ - 1) * pd.dlogdet_sw;
  }
  return g;
}

LatentStates LatentModel::expand(const Eigen::MatrixXd& u) const {
  LatentStates s;
  s.states = Eigen::MatrixXd::Zero(tmax_, 3);
  for (int a = 0; a < m(); ++a) s.states.col(prior_.act[a]) = u.col(a);
  return s;
}

Eigen::MatrixXd LatentModel::compress(const LatentStates& s) const {
  if (s.states.rows() != tmax_ || s.states.cols() != 3)
    fail(Errc::DimensionMismatch, "latent states do not match the dataset");
  Eigen::MatrixXd u(tmax_, m());
  for (int a = 0; a < m(); ++a) u.col(a) = s.states.col(prior_.act[a]);
  return u;
}

Eigen::MatrixXd LatentModel::screened_start() const {
  constexpr int kHalf = 8;
  constexpr double kStep = 0.5;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(tmax_, m());
  YearDerivs d;
  for (int t = 0; t < tmax_; ++t) {
    Eigen::Vector3d eta = p_.mu;
    for (int a = 0; a < m(); ++a) {
      const int k = prior_.act[a];
      double best = INFINITY, arg = 0.0;
      for (int i = -kHalf; i <= kHalf; ++i) {
        const double v = i * kStep;
        eta[k] = p_.mu[k] + sigma_[a] * v;
        obs_.year(t, eta, 0, d);
        const double f = d.value + 0.5 * v * v;
        if (f < best) {
          best = f;
          arg = v;
        }
      }
      u(t, a) = arg;
      eta[k] = p_.mu[k] + sigma_[a] * arg;
    }
  }
  return u;
}

InnerSolve inner_mode(const LatentModel& lm, const Eigen::MatrixXd* warm_start,
                      const LaplaceOptions& opt) {
  const int tmax = lm.tmax();
  const int m = lm.m();
  InnerSolve r;
  r.mode = Eigen::MatrixXd::Zero(tmax, m);
  if (warm_start && warm_start->rows() == tmax && warm_start->cols() == m &&
      warm_start->allFinite())
    r.mode = *warm_start;
  else if (opt.screen_start && m > 0)
    r.mode = lm.screened_start();
  std::vector<YearDerivs> trial;
  double f = lm.joint(r.mode, 2, r.derivs, opt.exec);
  if (!std::isfinite(f)) {
    r.mode.setZero();
    f = lm.joint(r.mode, 2, r.derivs, opt.exec);
    if (!std::isfinite(f)) fail(Errc::NonFiniteValue, "inner_mode: non-finite joint density");
  }
  Eigen::MatrixXd g = lm.grad_u(r.mode, r.derivs);
  for (int it = 0;; ++it) {
    r.grad_norm = m > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    r.hessian = lm.hessian(r.derivs);
    const bool pd = m == 0 || r.hessian.factorize();
    if (r.grad_norm < opt.tol && pd) {
      r.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;
    BlockTridiag damped = r.hessian;
    if (!pd) {
      double lambda = 1e-6;
      double scale = 0.0;
      for (const auto& b : damped.diag) scale = std::max(scale, b.cwiseAbs().maxCoeff());
      bool ok = false;
      for (int k = 0; k < 60 && !ok; ++k, lambda *= 4.0) {
        damped = r.hessian;
        for (auto& b : damped.diag) b += (lambda * std::max(1.0, scale)) * Blk::Identity(m, m);
        ok = damped.factorize();
      }
      if (!ok) fail(Errc::InnerDivergence, "inner_mode: cannot regularize the Hessian");
    }
    const Eigen::MatrixXd step = -damped.solve(g);
    const double slope = (g.array() * step.array()).sum();
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      const Eigen::MatrixXd cand = r.mode + alpha * step;
      double fc;
      try {
        fc = lm.joint(cand, 2, trial, opt.exec);
      } catch (const Error&) {
        continue;
      }
      if (!std::isfinite(fc)) continue;
      if (fc <= f + 1e-4 * alpha * slope) {
        accepted = true;
      } else if (std::abs(fc - f) <= 1e-12 * std::max(1.0, std::abs(f))) {
        // roundoff regime: accept if the gradient shrinks
        const Eigen::MatrixXd gc = lm.grad_u(cand, trial);
        accepted = gc.cwiseAbs().maxCoeff() < r.grad_norm;
      }
      if (accepted) {
        r.mode = cand;
        f = fc;
        std::swap(r.derivs, trial);
        break;
      }
    }
    if (!accepted) fail(Errc::InnerDivergence, "inner_mode: line search failed to decrease");
    ++r.newton_iters;
    g = lm.grad_u(r.mode, r.derivs);
  }
  r.joint = f;
  return r;
}

MarginalResult marginal(const ModelParams& p, const ObservationModel& obs, bool with_grad,
                        const Eigen::MatrixXd* warm_start, const LaplaceOptions& opt) {
  LatentModel lm(p, obs);
  MarginalResult res;
  res.inner = inner_mode(lm, warm_start, opt);
  InnerSolve& in = res.inner;
  if (!in.converged) fail(Errc::InnerDivergence, "inner_mode did not converge");
  const int tmax = lm.tmax();
  const int m = lm.m();
  if (m > 0 && !in.hessian.factorized())
    fail(Errc::NotPositiveDefinite, "inner Hessian at the mode");
  res.value = in.joint;
  if (m > 0) res.value += 0.5 * in.hessian.logdet() - 0.5 * tmax * m * kLog2Pi;
  if (!with_grad) return res;

  const auto& act = lm.prior().act;
  const auto& sig = lm.sigma();
  const Eigen::MatrixXd& u = in.mode;
  if (m > 0) {
    // third derivatives only needed here
    evaluate_years(obs, lm.eta(u), 3, in.derivs, opt.exec);
  }
  const auto& d = in.derivs;
  res.grad = lm.grad_theta(u, d);
  if (m == 0) return res;

  std::vector<Blk> sdiag, ssub;
  in.hessian.selected_inverse(sdiag, ssub);

  // r_{t,a} = 0.5 tr(H^{-1} dH/du_{t,a})
  Eigen::MatrixXd rr(tmax, m);
  for (int t = 0; t < tmax; ++t)
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          s += sdiag[t](b, c) * sig[b] * sig[c] * d[t].third[act[a]](act[b], act[c]);
      rr(t, a) = 0.5 * sig[a] * s;
    }
  const Eigen::MatrixXd v = in.hessian.solve(rr);

  const auto cs = coordinates(p.structure);
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const auto& c = cs[j];
    if (c.kind == CoordKind::Mu) {
      const int k = c.i;
      double tr = 0.0, vdg = 0.0;
      for (int t = 0; t < tmax; ++t)
        for (int a = 0; a < m; ++a) {
          vdg += v(t, a) * sig[a] * d[t].hess(act[a], k);
          for (int b = 0; b < m; ++b)
            tr += sdiag[t](a, b) * sig[a] * sig[b] * d[t].third[k](act[a], act[b]);
        }
      res.grad[j] += 0.5 * tr - vdg;
    } else if (c.kind == CoordKind::LogSigma) {
      const int k = c.i;
      int ak = 0;
      while (act[ak] != k) ++ak;
      const double sk = sig[ak];
      double tr = 0.0, vdg = 0.0;
      for (int t = 0; t < tmax; ++t) {
        const double ut = u(t, ak);
        for (int a = 0; a < m; ++a) {
          double dg = sig[a] * d[t].hess(act[a], k) * sk * ut;
          if (a == ak) dg += sig[a] * d[t].grad[act[a]];
          vdg += v(t, a) * dg;
          for (int b = 0; b < m; ++b) {
            const double ss = sig[a] * sig[b];
            double dh = ss * d[t].third[k](act[a], act[b]) * sk * ut;
            dh += ((a == ak) + (b == ak)) * ss * d[t].hess(act[a], act[b]);
            tr += sdiag[t](a, b) * dh;
          }
        }
      }
      res.grad[j] += 0.5 * tr - vdg;
    }
  }
  for (const auto& pd : prior_derivs(p)) {
    double tr = 0.0;
    Eigen::MatrixXd dqu(tmax, m);
    for (int t = 0; t < tmax; ++t) {
      Blk dd = t == 0 ? pd.dp0 : pd.dp;
      if (t + 1 < tmax) dd += pd.dphit_p_phi;
      tr += (sdiag[t].array() * dd.array()).sum();
      if (t > 0) tr -= 2.0 * (ssub[t].array() * pd.dp_phi.array()).sum();
      Eigen::VectorXd r = dd * u.row(t).transpose();
      if (t > 0) r -= pd.dp_phi * u.row(t - 1).transpose();
      if (t + 1 < tmax) r -= pd.dp_phi.transpose() * u.row(t + 1).transpose();
      dqu.row(t) = r.transpose();
    }
    res.grad[pd.coord] += 0.5 * tr - (v.array() * dqu.array()).sum();
  }
  return res;
}

double marginal_nll(const ModelParams& p, const ObservationModel& obs, const LaplaceOptions& opt) {
  return marginal(p, obs, false, nullptr, opt).value;
}

double marginal_nll(const ModelParams& p, const Dataset& d, const LaplaceOptions& opt) {
  PoissonObservation obs(d);
  return marginal_nll(p, obs, opt);
}

Eigen::VectorXd marginal_nll_grad(const ModelParams& p, const ObservationModel& obs,
                                  const LaplaceOptions& opt) {
  return marginal(p, obs, true, nullptr, opt).grad;
}

Eigen::VectorXd marginal_nll_grad(const ModelParams& p, const Dataset& d,
                                  const LaplaceOptions& opt) {
  PoissonObservation obs(d);
  return marginal_nll_grad(p, obs, opt);
}

}  // namespace fluctsel
