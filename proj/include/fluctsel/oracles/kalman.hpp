#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"

namespace fluctsel {

/// Time-invariant linear-Gaussian state space:
///   a_1 ~ N(a1, p1),  a_{t+1} = T a_t + N(0, q),
///   each observation in y[t] = d + z^T a_t + N(0, h).
struct StateSpace {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd state_cov;
  Eigen::VectorXd z;
  double d = 0.0;
  double h = 0.0;
  Eigen::VectorXd a1;
  Eigen::MatrixXd p1;
};

struct KalmanResult {
  double nll = 0.0;
  std::vector<Eigen::VectorXd> filtered;   // E[a_t | y_1..t]
  std::vector<Eigen::MatrixXd> filtered_cov;
  std::vector<Eigen::VectorXd> predicted;  // E[a_t | y_1..t-1]
  std::vector<Eigen::MatrixXd> predicted_cov;
  std::vector<Eigen::VectorXd> gain;       // gain of the last observation at t
  std::vector<Eigen::VectorXd> smoothed;   // E[a_t | all y]
  std::vector<Eigen::MatrixXd> smoothed_cov;
};

/// Prediction-error decomposition with observations processed one at a
/// time, then a Rauch-Tung-Striebel smoother. Throws NotPositiveDefinite
/// when a prediction-error variance is not positive.
KalmanResult kalman(const StateSpace& ss, const std::vector<std::vector<double>>& y,
                    bool smooth = true);

/// State space of the model's standardized active latents under a Gaussian
/// observation hook.
StateSpace linear_gaussian_state_space(const ModelParams& p, const GaussianObservation& obs);

/// Negative log-likelihood of the linear-Gaussian variant of the model.
double kalman_nll(const ModelParams& p, const GaussianObservation& obs);
/// Smoothed standardized latents, tmax x (active processes).
Eigen::MatrixXd kalman_smoothed_latents(const ModelParams& p, const GaussianObservation& obs);

}  // namespace fluctsel
