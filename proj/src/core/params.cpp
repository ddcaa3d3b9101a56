#include "fluctsel/core/params.hpp"

#include <cmath>
#include <limits>

namespace fluctsel {

std::vector<Coord> coordinates(const StructureMask& s) {
  std::vector<Coord> c;
  for (int k = 0; k < 3; ++k)
    c.push_back({CoordKind::Mu, k, 0, std::string("mu_") + kProcessNames[k]});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (s.phi_free[i][j])
        c.push_back({CoordKind::Phi, i, j,
                     std::string("phi_") + kProcessNames[i] + "_" + kProcessNames[j]});
  for (int r = 0; r < 3; ++r)
    if (s.rho_free[r])
      c.push_back({CoordKind::Rho, r, 0,
                   std::string("rho_") + kProcessNames[kRhoPairs[r][0]] + "_" +
                       kProcessNames[kRhoPairs[r][1]]});
  for (int k = 0; k < 3; ++k)
    if (s.active[k])
      c.push_back({CoordKind::LogSigma, k, 0, std::string("log_sigma_") + kProcessNames[k]});
  return c;
}

std::vector<std::string> coordinate_names(const StructureMask& s) {
  std::vector<std::string> n;
  for (const auto& c : coordinates(s)) n.push_back(c.name);
  return n;
}

Eigen::VectorXd to_natural(const ModelParams& p) {
  const auto cs = coordinates(p.structure);
  Eigen::VectorXd v(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& c = cs[i];
    switch (c.kind) {
      case CoordKind::Mu: v[i] = p.mu[c.i]; break;
      case CoordKind::Phi: v[i] = p.phi(c.i, c.j); break;
      case CoordKind::Rho: v[i] = p.rho[c.i]; break;
      case CoordKind::LogSigma: v[i] = p.log_sigma[c.i]; break;
    }
  }
  return v;
}

ModelParams from_natural(const Eigen::VectorXd& v, const StructureMask& s) {
  const auto cs = coordinates(s);
  if (static_cast<std::size_t>(v.size()) != cs.size())
    fail(Errc::DimensionMismatch, "from_natural: wrong coordinate count");
  ModelParams p;
  p.structure = s;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& c = cs[i];
    switch (c.kind) {
      case CoordKind::Mu: p.mu[c.i] = v[i]; break;
      case CoordKind::Phi: p.phi(c.i, c.j) = v[i]; break;
      case CoordKind::Rho: p.rho[c.i] = v[i]; break;
      case CoordKind::LogSigma: p.log_sigma[c.i] = v[i]; break;
    }
  }
  p.normalize();
  return p;
}

namespace {

bool tanh_coord(CoordKind k, Transform t) {
  if (t == Transform::Natural) return false;
  if (k == CoordKind::Rho) return true;
  return k == CoordKind::Phi && t == Transform::Sampling;
}

}  // namespace

Eigen::VectorXd to_unconstrained(const ModelParams& p, Transform t) {
  const auto cs = coordinates(p.structure);
  Eigen::VectorXd v = to_natural(p);
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (tanh_coord(cs[i].kind, t)) {
      if (!(std::abs(v[i]) < 1.0)) fail(Errc::OutOfSupport, "to_unconstrained: |value| >= 1");
      v[i] = std::atanh(v[i]);
    }
  return v;
}

Eigen::VectorXd natural_from_unconstrained(const Eigen::VectorXd& x, const StructureMask& s,
                                           Transform t) {
  const auto cs = coordinates(s);
  if (static_cast<std::size_t>(x.size()) != cs.size())
    fail(Errc::DimensionMismatch, "natural_from_unconstrained: wrong coordinate count");
  Eigen::VectorXd v = x;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (tanh_coord(cs[i].kind, t)) v[i] = std::tanh(x[i]);
  return v;
}

ModelParams from_unconstrained(const Eigen::VectorXd& x, const StructureMask& s, Transform t) {
  return from_natural(natural_from_unconstrained(x, s, t), s);
}

Eigen::VectorXd dnatural_dx(const Eigen::VectorXd& x, const StructureMask& s, Transform t) {
  const auto cs = coordinates(s);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(x.size());
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (tanh_coord(cs[i].kind, t)) {
      const double th = std::tanh(x[i]);
      d[i] = 1.0 - th * th;
    }
  return d;
}

double log_abs_jacobian(const Eigen::VectorXd& x, const StructureMask& s, Transform t) {
  const auto cs = coordinates(s);
  double j = 0.0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (tanh_coord(cs[i].kind, t)) {
      // log(1 - tanh^2 x) = 2 (log 2 - |x| - log1p(exp(-2|x|)))
      const double a = std::abs(x[i]);
      j += 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
    }
  return j;
}

}  // namespace fluctsel
