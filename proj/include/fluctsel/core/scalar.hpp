#pragma once

#include <cmath>

// Scalar helpers shared by code templated on the evaluation type (double,
// ad::Dual, ad::Var). AD types provide their own overloads found by ADL.
namespace fluctsel {

inline double value_of(double x) noexcept { return x; }

template <class T>
inline T square(const T& x) {
  return x * x;
}

}  // namespace fluctsel
