#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluctsel/priors/priors.hpp"

namespace fluctsel {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// max |Gamma0 - (Phi Gamma0 Phi^T + Sigma_w)| over random stable (Phi, rho).
CheckResult check_stationarity(int instances, std::uint64_t seed);
/// Tape gradient of the joint vs five-point finite differences.
CheckResult check_ad_vs_fd(int points, int tmax, int n, std::uint64_t seed);
/// Laplace marginal vs Kalman likelihood on random linear-Gaussian instances.
CheckResult check_laplace_vs_kalman(int instances, int tmax, std::uint64_t seed);
/// Laplace marginal vs adaptive Gauss-Hermite on Poisson toys (relative nll).
CheckResult check_laplace_vs_ghq(int instances, int tmax, int n, int nodes, std::uint64_t seed);
/// NUTS on a 10-d standard normal (moments, divergences) and a 1-d normal (KS).
CheckResult check_sampler(std::uint64_t seed);
/// Change-of-variables check of one scale prior.
CheckResult check_jacobian(const PriorSpec& spec, int draws, std::uint64_t seed, int sign = 1);

struct VerifyOptions {
  std::uint64_t seed = 1;
  bool quick = false;      // smaller instance counts
  int jacobian_sign = 1;   // -1 injects a sign error into the Jacobian check
};

std::vector<CheckResult> verify_suite(const VerifyOptions& opt);

}  // namespace fluctsel
