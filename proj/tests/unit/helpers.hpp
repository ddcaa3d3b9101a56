#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/simulate/simulate.hpp"

namespace testing {

inline fluctsel::ModelParams ar1_params(double phi = 0.4, double sigma = 20.0) {
  fluctsel::ModelParams p;
  p.structure = fluctsel::StructureMask::ar1_theta();
  p.mu = Eigen::Vector3d(2.0, 20.0, 3.5);
  p.phi(1, 1) = phi;
  p.log_sigma(1) = std::log(sigma);
  p.normalize();
  return p;
}

inline fluctsel::ModelParams full_params() {
  fluctsel::ModelParams p;
  p.structure.active = {true, true, true};
  for (int i = 0; i < 3; ++i) p.structure.phi_free[i][i] = true;
  p.structure.rho_free = {true, false, false};
  p.mu = Eigen::Vector3d(1.5, 18.0, 3.3);
  p.phi.diagonal() = Eigen::Vector3d(0.3, 0.5, -0.2);
  p.rho(0) = 0.25;
  p.log_sigma = Eigen::Vector3d(std::log(0.3), std::log(10.0), std::log(0.1));
  p.normalize();
  return p;
}

inline fluctsel::Dataset small_data(std::uint64_t seed = 7, int tmax = 10, double n = 30.0) {
  fluctsel::SimDesign d;
  d.tmax = tmax;
  d.mean_n = n;
  d.seed = seed;
  return fluctsel::simulate_dataset(d).data;
}

inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    const double hi = h * std::max(1.0, std::abs(x[i]));
    a[i] += hi;
    b[i] -= hi;
    g[i] = (f(a) - f(b)) / (2.0 * hi);
  }
  return g;
}

}  // namespace testing
