#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "fluctsel/core/model.hpp"

namespace fluctsel {

/// Per-year observation negative log-likelihood and its derivatives in the
/// natural process values eta = (alpha, theta, omega).
struct YearDerivs {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
  std::array<Eigen::Matrix3d, 3> third{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                       Eigen::Matrix3d::Zero()};
};

/// order: 0 value only, 1 adds gradient, 2 adds Hessian, 3 adds third derivatives.
void poisson_year(const YearData& y, const Eigen::Vector3d& eta, int order, YearDerivs& out);
/// Same result from per-observation chain-rule terms; slower, kept as a reference.
void poisson_year_reference(const YearData& y, const Eigen::Vector3d& eta, int order,
                            YearDerivs& out);

enum class Exec { Serial, Parallel };

class ObservationModel {
 public:
  virtual ~ObservationModel() = default;
  virtual std::size_t num_years() const = 0;
  virtual void year(std::size_t t, const Eigen::Vector3d& eta, int order, YearDerivs& out) const = 0;
};

class PoissonObservation final : public ObservationModel {
 public:
  explicit PoissonObservation(const Dataset& d, bool reference = false)
      : d_(d), reference_(reference) {}
  std::size_t num_years() const override { return d_.num_years(); }
  void year(std::size_t t, const Eigen::Vector3d& eta, int order, YearDerivs& out) const override;
  const Dataset& data() const { return d_; }

 private:
  const Dataset& d_;
  bool reference_;
};

/// Linear-Gaussian test hook: y = h^T eta + N(0, tau^2) per observation.
class GaussianObservation final : public ObservationModel {
 public:
  GaussianObservation(std::vector<std::vector<double>> y, Eigen::Vector3d h, double tau);
  std::size_t num_years() const override { return y_.size(); }
  void year(std::size_t t, const Eigen::Vector3d& eta, int order, YearDerivs& out) const override;
  const std::vector<std::vector<double>>& y() const { return y_; }
  const Eigen::Vector3d& h() const { return h_; }
  double tau() const { return tau_; }

 private:
  std::vector<std::vector<double>> y_;
  Eigen::Vector3d h_;
  double tau_;
};

/// Evaluates every year; eta is tmax x 3. The parallel path splits years
/// across OpenMP threads.
void evaluate_years(const ObservationModel& obs, const Eigen::MatrixXd& eta, int order,
                    std::vector<YearDerivs>& out, Exec exec = Exec::Parallel);

}  // namespace fluctsel
