#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/log_density.hpp"
#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"
#include "fluctsel/laplace/laplace.hpp"

namespace fluctsel {

enum class ScalePrior {
  HalfCauchy,   // on sigma
  LogNormal,    // on sigma
  InvGamma,     // on sigma^2
  Flat,         // improper, no Jacobian
};

struct PriorSpec {
  std::string name = "prior2";
  bool flat = false;  // every component improper-flat
  double mu_mean = 0.0;
  double mu_var = 100.0;
  double phi_sd = 0.5;  // truncated to (-1, 1)
  ScalePrior scale = ScalePrior::LogNormal;
  double hc_scale = 10.0;
  double ln_meanlog = 1.0;
  double ln_sdlog = 0.5;
  double ig_shape = 1.0;
  double ig_scale = 1.0;

  static PriorSpec prior1();
  static PriorSpec prior2();
  static PriorSpec invgamma();
  static PriorSpec flat_spec();
  /// "prior1", "prior2", "invgamma" or "flat"; throws ConfigError otherwise.
  static PriorSpec by_name(const std::string& name);
};

/// Log density of the scale prior in its own variable (sigma or sigma^2).
double log_scale_density(const PriorSpec& spec, double sigma);
/// Log density of a truncated-normal phi entry; throws OutOfSupport.
double log_phi_density(const PriorSpec& spec, double phi);

/// Sum of component log densities in the natural parameterization. Throws
/// OutOfSupport for |phi| >= 1, |rho| >= 1 or a non-positive-definite
/// correlation matrix.
double log_prior(const ModelParams& p, const PriorSpec& spec);

/// log |d sigma / d log sigma| (or of sigma^2 for the inverse-gamma mode).
double jacobian_adjustment(const PriorSpec& spec, double log_sigma);

/// Log density of log sigma: scale prior plus its Jacobian, and its derivative.
double log_sigma_density(const PriorSpec& spec, double log_sigma, double* dlog = nullptr);

/// marginalize: -marginal_nll + log_prior + Jacobians; otherwise the joint
/// density of data and `states` replaces the marginal likelihood.
double log_posterior(const ModelParams& p, const LatentStates& states, const Dataset& d,
                     const PriorSpec& spec, bool marginalize, const LaplaceOptions& opt = {});

enum class LatentMode { Laplace, Full };

/// Posterior over the sampling coordinates: mu, atanh(phi), atanh(rho),
/// log sigma, followed in Full mode by the standardized latents (row-major
/// tmax x m). Reports natural fixed effects.
class PosteriorTarget final : public LogDensity {
 public:
  PosteriorTarget(std::shared_ptr<const ObservationModel> obs, const StructureMask& s,
                  const PriorSpec& spec, LatentMode mode, const LaplaceOptions& opt = {});

  std::size_t dim() const override;
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) override;
  std::unique_ptr<LogDensity> clone() const override;
  std::vector<std::string> names() const override;
  Eigen::VectorXd report(const Eigen::VectorXd& x) const override;

  std::size_t num_fixed() const { return n_fixed_; }
  LatentMode mode() const { return mode_; }
  /// Sampling coordinates of a parameter set; in Full mode the latents
  /// come from the per-year screen at `p`.
  Eigen::VectorXd pack(const ModelParams& p) const;
  /// Full mode: replaces the latent block with the screened start at the
  /// fixed effects of `x`.
  Eigen::VectorXd prepare_init(const Eigen::VectorXd& x) const override;

 private:
  double prior_part(const Eigen::VectorXd& xf, const ModelParams& p, Eigen::VectorXd* gnat) const;

  std::shared_ptr<const ObservationModel> obs_;
  StructureMask s_;
  PriorSpec spec_;
  LatentMode mode_;
  LaplaceOptions opt_;
  std::size_t n_fixed_;
  int tmax_;
  int m_;
};

}  // namespace fluctsel
