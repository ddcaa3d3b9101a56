#pragma once

#include <cstdint>
#include <vector>

#include "fluctsel/core/model.hpp"

namespace fluctsel {

/// Simulation design: AR(1) optimum, constant height and width.
struct SimDesign {
  int tmax = 50;
  double mean_n = 100.0;
  double phi_theta = 0.4;
  Eigen::Vector3d mu{2.0, 20.0, 3.5};
  double sigma_theta = 20.0;
  double sigma_z = 20.0;
  int first_year = 1;
  std::uint64_t seed = 1;

  ModelParams truth() const;
};

struct SimResult {
  Dataset data;
  LatentStates latents;  // tmax x 3
  Eigen::MatrixXd innovations;  // tmax x 3, standard normal draws
  ModelParams truth;
};

/// How many observations each year gets.
struct SizeRule {
  double mean_n = 100.0;
  int min_size = 1;  // Poisson draws below this are redrawn (design) or clamped
  int max_size = 0;  // 0 = unbounded
  bool clamp = false;
};

double selection_strength(const SimDesign& d);
double selection_strength(double mu_omega, double sigma_z);

/// General generator: stationary VAR(1) latents from `p`, yearly sizes from
/// `sizes`, phenotypes N(z_mean, z_sd^2), offspring Poisson(w(z)).
SimResult simulate_model(const ModelParams& p, int tmax, int first_year, const SizeRule& sizes,
                         double z_mean, double z_sd, std::uint64_t seed);

SimResult simulate_dataset(const SimDesign& d);

/// Synthetic stand-in for the real brood data: 1955-2015, Poisson(81) broods
/// per year clamped to [10, 164], generated from the selected candidate.
ModelParams standin_truth();
SimResult simulate_standin(std::uint64_t seed, double z_sd = 20.0);

/// RNG purposes used as stream keys.
enum class Purpose : std::uint64_t { Latent = 1, Size = 2, Phenotype = 3, Offspring = 4 };

}  // namespace fluctsel
