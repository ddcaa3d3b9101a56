#pragma once

#include <array>
#include <cmath>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/model.hpp"
#include "fluctsel/core/scalar.hpp"

namespace fluctsel {

template <class T>
using Mat3T = std::array<std::array<T, 3>, 3>;

template <class T>
Mat3T<T> zero3() {
  Mat3T<T> a;
  for (auto& r : a)
    for (auto& v : r) v = T(0.0);
  return a;
}

/// Lower Cholesky factor of the leading m x m block. Returns false when a
/// pivot falls to kPivotTol or below.
template <class T>
bool chol_small(const Mat3T<T>& a, int m, Mat3T<T>& l) {
  using std::sqrt;
  l = zero3<T>();
  for (int j = 0; j < m; ++j) {
    T d = a[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(value_of(d) > kPivotTol)) return false;
    l[j][j] = sqrt(d);
    for (int i = j + 1; i < m; ++i) {
      T s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return true;
}

/// Inverse of L L^T from its Cholesky factor.
template <class T>
Mat3T<T> chol_inverse(const Mat3T<T>& l, int m) {
  Mat3T<T> li = zero3<T>();
  for (int j = 0; j < m; ++j) {
    li[j][j] = 1.0 / l[j][j];
    for (int i = j + 1; i < m; ++i) {
      T s(0.0);
      for (int k = j; k < i; ++k) s -= l[i][k] * li[k][j];
      li[i][j] = s / l[i][i];
    }
  }
  Mat3T<T> inv = zero3<T>();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      T s(0.0);
      for (int k = i; k < m; ++k) s += li[k][i] * li[k][j];
      inv[i][j] = s;
      inv[j][i] = s;
    }
  return inv;
}

template <class T>
T chol_logdet(const Mat3T<T>& l, int m) {
  using std::log;
  T s(0.0);
  for (int i = 0; i < m; ++i) s += log(l[i][i]);
  return 2.0 * s;
}

template <class T>
Mat3T<T> matmul(const Mat3T<T>& a, const Mat3T<T>& b, int m) {
  Mat3T<T> c = zero3<T>();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      T s(0.0);
      for (int k = 0; k < m; ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

template <class T>
Mat3T<T> transpose(const Mat3T<T>& a, int m) {
  Mat3T<T> c = zero3<T>();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c[i][j] = a[j][i];
  return c;
}

/// Precision blocks of the stationary VAR(1) prior on the active latent
/// columns, plus the log-determinants entering its normalizing constant.
template <class T>
struct VarBlocksT {
  int m = 0;
  Mat3T<T> p0;        // Gamma0^{-1}
  Mat3T<T> p;         // Sigma_w^{-1}
  Mat3T<T> p_phi;     // P Phi
  Mat3T<T> phit_p_phi;  // Phi^T P Phi
  T logdet_g0{};
  T logdet_sw{};
};

/// `phi` and `g0` are the active sub-blocks. Throws NotPositiveDefinite when
/// Gamma0 or Sigma_w fails the pivot test.
template <class T>
VarBlocksT<T> var_blocks(const Mat3T<T>& phi, const Mat3T<T>& g0, int m) {
  VarBlocksT<T> b;
  b.m = m;
  Mat3T<T> l;
  if (!chol_small(g0, m, l)) fail(Errc::NotPositiveDefinite, "stationary correlation matrix");
  b.p0 = chol_inverse(l, m);
  b.logdet_g0 = chol_logdet(l, m);
  Mat3T<T> pg = matmul(phi, g0, m);
  Mat3T<T> pgp = matmul(pg, transpose(phi, m), m);
  Mat3T<T> sw = zero3<T>();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sw[i][j] = g0[i][j] - 0.5 * (pgp[i][j] + pgp[j][i]);
  if (!chol_small(sw, m, l)) fail(Errc::NotPositiveDefinite, "innovation covariance");
  b.p = chol_inverse(l, m);
  b.logdet_sw = chol_logdet(l, m);
  b.p_phi = matmul(b.p, phi, m);
  b.phit_p_phi = matmul(transpose(phi, m), b.p_phi, m);
  return b;
}

}  // namespace fluctsel
