#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"

namespace fluctsel {

using Blk = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Symmetric block-tridiagonal matrix with m x m blocks: diag[t] = (t, t),
/// sub[t] = (t, t-1) for t >= 1 (sub[0] unused).
class BlockTridiag {
 public:
  BlockTridiag() = default;
  BlockTridiag(int tmax, int m);

  int tmax() const { return static_cast<int>(diag.size()); }
  int m() const { return m_; }
  Eigen::MatrixXd dense() const;
  /// H x for x stored tmax x m.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const;

  /// Block Cholesky. Returns false if a pivot is <= 1e-10.
  bool factorize();
  bool factorized() const { return factorized_; }
  double logdet() const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// Diagonal and sub-diagonal blocks of the inverse.
  void selected_inverse(std::vector<Blk>& sdiag, std::vector<Blk>& ssub) const;

  std::vector<Blk> diag;
  std::vector<Blk> sub;

 private:
  int m_ = 0;
  bool factorized_ = false;
  std::vector<Blk> l_;     // diagonal Cholesky factors
  std::vector<Blk> linv_;  // their inverses
  std::vector<Blk> c_;     // sub-diagonal factor blocks
};

/// VAR(1) prior on the active latent columns.
struct PriorTerms {
  int m = 0;
  std::vector<int> act;
  Blk phi;
  Blk p0, p, p_phi, phit_p_phi;
  double logdet_g0 = 0.0;
  double logdet_sw = 0.0;
};

/// Derivative of the prior terms with respect to one phi or rho coordinate.
struct PriorDeriv {
  std::size_t coord = 0;
  Blk dp0, dp, dp_phi, dphit_p_phi;
  double dlogdet_g0 = 0.0;
  double dlogdet_sw = 0.0;
};

PriorTerms prior_terms(const ModelParams& p);
std::vector<PriorDeriv> prior_derivs(const ModelParams& p);

struct LaplaceOptions {
  double tol = 1e-8;
  int max_iter = 100;
  Exec exec = Exec::Parallel;
  /// Cold starts begin from a per-year grid screen instead of zero.
  bool screen_start = true;
};

/// Joint density restricted to active latents u (tmax x m) at fixed params.
class LatentModel {
 public:
  LatentModel(const ModelParams& p, const ObservationModel& obs);

  int tmax() const { return tmax_; }
  int m() const { return prior_.m; }
  const ModelParams& params() const { return p_; }
  const ObservationModel& observations() const { return obs_; }
  const PriorTerms& prior() const { return prior_; }
  const std::vector<double>& sigma() const { return sigma_; }

  Eigen::MatrixXd eta(const Eigen::MatrixXd& u) const;
  /// Q u.
  Eigen::MatrixXd prior_multiply(const Eigen::MatrixXd& u) const;
  double prior_constant() const;
  BlockTridiag prior_precision() const;

  double joint(const Eigen::MatrixXd& u, int order, std::vector<YearDerivs>& d,
               Exec exec = Exec::Parallel) const;
  Eigen::MatrixXd grad_u(const Eigen::MatrixXd& u, const std::vector<YearDerivs>& d) const;
  BlockTridiag hessian(const std::vector<YearDerivs>& d) const;
  /// Partial derivatives of the joint in the natural coordinates at fixed u.
  Eigen::VectorXd grad_theta(const Eigen::MatrixXd& u, const std::vector<YearDerivs>& d) const;

  /// Expands tmax x m to tmax x 3 (zeros for inactive columns).
  LatentStates expand(const Eigen::MatrixXd& u) const;
  /// Per-year, per-process grid maximizer of the year term plus a unit
  /// normal penalty, one coordinate sweep; a starting point for Newton.
  Eigen::MatrixXd screened_start() const;
  Eigen::MatrixXd compress(const LatentStates& s) const;

 private:
  ModelParams p_;
  const ObservationModel& obs_;
  int tmax_;
  PriorTerms prior_;
  std::vector<double> sigma_;
};

struct InnerSolve {
  Eigen::MatrixXd mode;  // tmax x m
  BlockTridiag hessian;  // factorized at the mode
  std::vector<YearDerivs> derivs;
  double joint = 0.0;
  double grad_norm = 0.0;
  int newton_iters = 0;
  bool converged = false;
};

InnerSolve inner_mode(const LatentModel& lm, const Eigen::MatrixXd* warm_start,
                      const LaplaceOptions& opt = {});

struct MarginalResult {
  double value = 0.0;
  Eigen::VectorXd grad;  // natural coordinates
  InnerSolve inner;
};

/// Laplace-approximated marginal negative log-likelihood; the gradient is
/// filled when `with_grad`. Throws InnerDivergence or NotPositiveDefinite.
MarginalResult marginal(const ModelParams& p, const ObservationModel& obs, bool with_grad,
                        const Eigen::MatrixXd* warm_start = nullptr,
                        const LaplaceOptions& opt = {});

double marginal_nll(const ModelParams& p, const ObservationModel& obs,
                    const LaplaceOptions& opt = {});
double marginal_nll(const ModelParams& p, const Dataset& d, const LaplaceOptions& opt = {});
Eigen::VectorXd marginal_nll_grad(const ModelParams& p, const ObservationModel& obs,
                                  const LaplaceOptions& opt = {});
Eigen::VectorXd marginal_nll_grad(const ModelParams& p, const Dataset& d,
                                  const LaplaceOptions& opt = {});

}  // namespace fluctsel
