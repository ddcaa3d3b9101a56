#pragma once

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"

namespace fluctsel {

inline constexpr int kMaxQuadratureDim = 6;

/// Physicists' Gauss-Hermite rule (weight exp(-x^2)) via Golub-Welsch.
void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// -log of the latent integral by adaptive Gauss-Hermite quadrature centred
/// at the conditional mode with Cholesky scaling of the Hessian there.
/// Throws DimensionTooLarge when tmax * active processes > 6.
double ghq_marginal(const ModelParams& p, const ObservationModel& obs, int nodes_per_dim,
                    Exec exec = Exec::Parallel);
/// Same quadrature by brute-force enumeration of the full tensor grid.
double ghq_marginal_reference(const ModelParams& p, const ObservationModel& obs,
                              int nodes_per_dim);

}  // namespace fluctsel
