#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/core/var_blocks.hpp"

namespace fluctsel {

enum class CoordKind { Mu, Phi, Rho, LogSigma };

/// One free fixed-effect coordinate. For Phi, (i, j) is the matrix entry;
/// for Rho, i is the correlation slot; otherwise i is the process.
struct Coord {
  CoordKind kind;
  int i = 0;
  int j = 0;
  std::string name;
};

/// Order: mu (alpha, theta, omega), free phi row-major, free rho, active log sigma.
std::vector<Coord> coordinates(const StructureMask& s);
std::vector<std::string> coordinate_names(const StructureMask& s);

/// Natural: everything raw. Mle: rho through atanh. Sampling: phi and rho
/// through atanh.
enum class Transform { Natural, Mle, Sampling };

Eigen::VectorXd to_natural(const ModelParams& p);
ModelParams from_natural(const Eigen::VectorXd& v, const StructureMask& s);
Eigen::VectorXd to_unconstrained(const ModelParams& p, Transform t);
Eigen::VectorXd natural_from_unconstrained(const Eigen::VectorXd& x, const StructureMask& s,
                                           Transform t);
ModelParams from_unconstrained(const Eigen::VectorXd& x, const StructureMask& s, Transform t);
/// Diagonal of d(natural)/d(x).
Eigen::VectorXd dnatural_dx(const Eigen::VectorXd& x, const StructureMask& s, Transform t);
/// Sum of log |d(natural)/d(x)|.
double log_abs_jacobian(const Eigen::VectorXd& x, const StructureMask& s, Transform t);

template <class T>
struct UnpackedT {
  std::array<T, 3> mu;
  Mat3T<T> phi;
  std::array<T, 3> rho;
  std::array<T, 3> log_sigma;
};

/// Scatters natural coordinates into full-size arrays; pinned entries are 0
/// (log_sigma of inactive processes is left at 0 and must not be used).
template <class T>
UnpackedT<T> unpack_natural(std::span<const T> v, const StructureMask& s) {
  UnpackedT<T> u;
  u.phi = zero3<T>();
  for (int k = 0; k < 3; ++k) {
    u.rho[k] = T(0.0);
    u.log_sigma[k] = T(0.0);
  }
  std::size_t c = 0;
  for (int k = 0; k < 3; ++k) u.mu[k] = v[c++];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (s.phi_free[i][j]) u.phi[i][j] = v[c++];
  for (int r = 0; r < 3; ++r)
    if (s.rho_free[r]) u.rho[r] = v[c++];
  for (int k = 0; k < 3; ++k)
    if (s.active[k]) u.log_sigma[k] = v[c++];
  return u;
}

/// Active sub-blocks of Phi and Gamma0.
template <class T>
void active_blocks(const UnpackedT<T>& u, const std::vector<int>& act, Mat3T<T>& phi,
                   Mat3T<T>& g0) {
  const int m = static_cast<int>(act.size());
  phi = zero3<T>();
  g0 = zero3<T>();
  for (int a = 0; a < m; ++a) {
    g0[a][a] = T(1.0);
    for (int b = 0; b < m; ++b) phi[a][b] = u.phi[act[a]][act[b]];
  }
  for (int r = 0; r < 3; ++r) {
    int ia = -1, ib = -1;
    for (int a = 0; a < m; ++a) {
      if (act[a] == kRhoPairs[r][0]) ia = a;
      if (act[a] == kRhoPairs[r][1]) ib = a;
    }
    if (ia >= 0 && ib >= 0) {
      g0[ia][ib] = u.rho[r];
      g0[ib][ia] = u.rho[r];
    }
  }
}

}  // namespace fluctsel
