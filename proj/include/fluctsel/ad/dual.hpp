#pragma once

#include <cmath>
#include <ostream>

#include "fluctsel/core/scalar.hpp"

namespace fluctsel::ad {

/// Forward-mode dual number. `V` may itself be a Dual, which gives
/// higher-order directional derivatives by nesting.
template <class V>
struct Dual {
  V val{};
  V tan{};

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v), tan(0.0) {}  // NOLINT(implicit)
  constexpr Dual(V v, V t) : val(v), tan(t) {}

  Dual& operator+=(const Dual& o) {
    val += o.val;
    tan += o.tan;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    tan -= o.tan;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    tan = tan * o.val + val * o.tan;
    val *= o.val;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    V q = val / o.val;
    tan = (tan - q * o.tan) / o.val;
    val = q;
    return *this;
  }
};

using Dual1 = Dual<double>;

template <class V>
inline Dual<V> operator+(Dual<V> a, const Dual<V>& b) {
  return a += b;
}
template <class V>
inline Dual<V> operator-(Dual<V> a, const Dual<V>& b) {
  return a -= b;
}
template <class V>
inline Dual<V> operator*(Dual<V> a, const Dual<V>& b) {
  return a *= b;
}
template <class V>
inline Dual<V> operator/(Dual<V> a, const Dual<V>& b) {
  return a /= b;
}
template <class V>
inline Dual<V> operator-(const Dual<V>& a) {
  return {-a.val, -a.tan};
}

template <class V>
inline Dual<V> operator+(Dual<V> a, double b) {
  a.val += b;
  return a;
}
template <class V>
inline Dual<V> operator+(double a, Dual<V> b) {
  b.val += a;
  return b;
}
template <class V>
inline Dual<V> operator-(Dual<V> a, double b) {
  a.val -= b;
  return a;
}
template <class V>
inline Dual<V> operator-(double a, const Dual<V>& b) {
  return {a - b.val, -b.tan};
}
template <class V>
inline Dual<V> operator*(const Dual<V>& a, double b) {
  return {a.val * b, a.tan * b};
}
template <class V>
inline Dual<V> operator*(double a, const Dual<V>& b) {
  return {a * b.val, a * b.tan};
}
template <class V>
inline Dual<V> operator/(const Dual<V>& a, double b) {
  return {a.val / b, a.tan / b};
}
template <class V>
inline Dual<V> operator/(double a, const Dual<V>& b) {
  V q = a / b.val;
  return {q, -q * b.tan / b.val};
}

template <class V>
inline bool operator<(const Dual<V>& a, const Dual<V>& b) {
  return a.val < b.val;
}
template <class V>
inline bool operator>(const Dual<V>& a, const Dual<V>& b) {
  return a.val > b.val;
}

template <class V>
inline Dual<V> exp(const Dual<V>& a) {
  using std::exp;
  V e = exp(a.val);
  return {e, e * a.tan};
}
template <class V>
inline Dual<V> log(const Dual<V>& a) {
  using std::log;
  return {log(a.val), a.tan / a.val};
}
template <class V>
inline Dual<V> log1p(const Dual<V>& a) {
  using std::log1p;
  return {log1p(a.val), a.tan / (1.0 + a.val)};
}
template <class V>
inline Dual<V> sqrt(const Dual<V>& a) {
  using std::sqrt;
  V s = sqrt(a.val);
  return {s, a.tan / (2.0 * s)};
}
template <class V>
inline Dual<V> tanh(const Dual<V>& a) {
  using std::tanh;
  V t = tanh(a.val);
  return {t, (1.0 - t * t) * a.tan};
}
template <class V>
inline Dual<V> pow(const Dual<V>& a, double c) {
  using std::pow;
  return {pow(a.val, c), c * pow(a.val, c - 1.0) * a.tan};
}

template <class V>
inline double value_of(const Dual<V>& a) {
  using fluctsel::value_of;
  return value_of(a.val);
}

template <class V>
std::ostream& operator<<(std::ostream& os, const Dual<V>& a) {
  return os << '(' << a.val << ", " << a.tan << ')';
}

}  // namespace fluctsel::ad
