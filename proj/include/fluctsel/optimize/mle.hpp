#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"
#include "fluctsel/laplace/laplace.hpp"
#include "fluctsel/optimize/bfgs.hpp"

namespace fluctsel {

struct MleOptions {
  BfgsOptions bfgs;
  LaplaceOptions laplace;
  bool compute_se = true;
  double barrier_weight = 1e-6;
  double barrier_width = 1e-3;
};

struct MleFit {
  ModelParams estimates;
  std::vector<std::string> names;
  Eigen::VectorXd std_errors;   // natural coordinates
  Eigen::MatrixXd information;  // natural coordinates
  double nll_at_opt = 0.0;
  int n_free = 0;
  bool converged = false;
  double aic = 0.0;
  int iterations = 0;
  double grad_max = 0.0;  // natural-coordinate gradient max-norm at the optimum
  std::string se_error;   // non-empty when the information could not be inverted
};

/// Moment-based default start: mu_alpha = log mean count, mu_theta =
/// count-weighted mean phenotype, mu_omega = log phenotype sd.
ModelParams default_init(const Dataset& d, const StructureMask& s);

/// Stability barrier added to the objective near the unit circle.
double stability_barrier(const Eigen::Matrix3d& phi, double weight, double width);

MleFit fit_mle(const Dataset& d, const StructureMask& s, const ModelParams* init = nullptr,
               const MleOptions& opt = {});
MleFit fit_mle(const ObservationModel& obs, const StructureMask& s, const ModelParams& init,
               const MleOptions& opt = {});

/// Central differences of the analytic natural-coordinate gradient,
/// h = 1e-4 max(1, |x|), symmetrized.
Eigen::MatrixXd observed_information(const ModelParams& at, const ObservationModel& obs,
                                     const LaplaceOptions& opt = {});
/// Square roots of the diagonal of the inverse. Throws SingularInformation.
Eigen::VectorXd standard_errors(const Eigen::MatrixXd& info);

inline double aic(int n_free, double nll) { return 2.0 * n_free + 2.0 * nll; }

}  // namespace fluctsel
