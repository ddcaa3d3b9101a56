#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluctsel {

/// Unnormalized log density on an unconstrained space, as consumed by the
/// sampler. Evaluation may update caches, so each chain works on its own
/// clone().
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual std::size_t dim() const = 0;
  /// Returns -inf outside the support; fills `grad` when non-null.
  virtual double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* grad) = 0;
  virtual std::unique_ptr<LogDensity> clone() const = 0;

  /// Names of the reported coordinates.
  virtual std::vector<std::string> names() const;
  /// Maps a sampler state to the coordinates stored in the draws.
  virtual Eigen::VectorXd report(const Eigen::VectorXd& x) const { return x; }
  /// Adjusts a jittered starting point before the first evaluation.
  virtual Eigen::VectorXd prepare_init(const Eigen::VectorXd& x) const { return x; }
};

}  // namespace fluctsel
