#pragma once

#include <cmath>
#include <numbers>
#include <span>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"

namespace fluctsel {

/// Joint negative log-density of data and active latents, generic in the
/// scalar type. `x` holds the natural coordinates followed by the active
/// latent columns row by row (tmax x m).
template <class T>
T joint_nll_t(std::span<const T> x, const StructureMask& s, const Dataset& d) {
  using std::exp;
  const auto act = s.active_indices();
  const int m = static_cast<int>(act.size());
  const std::size_t nfree = static_cast<std::size_t>(s.n_free());
  const std::size_t tmax = d.num_years();
  if (x.size() != nfree + tmax * static_cast<std::size_t>(m))
    fail(Errc::DimensionMismatch, "joint_nll_t: coordinate vector size");
  const auto u = unpack_natural<T>(x.first(nfree), s);
  const T* lat = x.data() + nfree;

  T nll(0.0);
  if (m > 0) {
    Mat3T<T> phi, g0;
    active_blocks(u, act, phi, g0);
    const auto b = var_blocks(phi, g0, m);
    T q(0.0);
    for (std::size_t t = 0; t < tmax; ++t) {
      std::array<T, 3> e;
      for (int a = 0; a < m; ++a) {
        e[a] = lat[t * m + a];
        if (t > 0)
          for (int c = 0; c < m; ++c) e[a] -= phi[a][c] * lat[(t - 1) * m + c];
      }
      const auto& prec = t == 0 ? b.p0 : b.p;
      for (int a = 0; a < m; ++a) {
        T row(0.0);
        for (int c = 0; c < m; ++c) row += prec[a][c] * e[c];
        q += e[a] * row;
      }
    }
    nll += 0.5 * q + 0.5 * b.logdet_g0 + (0.5 * static_cast<double>(tmax - 1)) * b.logdet_sw +
           (0.5 * static_cast<double>(tmax) * m) * std::log(2.0 * std::numbers::pi);
  }

  std::array<T, 3> sigma;
  for (int a = 0; a < m; ++a) sigma[a] = exp(u.log_sigma[act[a]]);
  for (std::size_t t = 0; t < tmax; ++t) {
    std::array<T, 3> eta = u.mu;
    for (int a = 0; a < m; ++a) eta[act[a]] = eta[act[a]] + sigma[a] * lat[t * m + a];
    const T half_s = 0.5 * exp(-2.0 * eta[kOmega]);
    const YearData& y = d.year(t);
    for (std::size_t i = 0; i < y.z.size(); ++i) {
      const T dz = y.z[i] - eta[kTheta];
      const T lw = eta[kAlpha] - half_s * (dz * dz);
      nll += exp(lw);
      if (y.x[i] != 0) nll -= static_cast<double>(y.x[i]) * lw;
    }
    nll += y.sum_lgamma;
  }
  return nll;
}

}  // namespace fluctsel
