#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluctsel {

/// Process indices: 0 = alpha (log height), 1 = theta (optimum), 2 = omega (log width).
inline constexpr int kAlpha = 0;
inline constexpr int kTheta = 1;
inline constexpr int kOmega = 2;

/// Correlation slots: 0 = (alpha, theta), 1 = (alpha, omega), 2 = (theta, omega).
inline constexpr std::array<std::array<int, 2>, 3> kRhoPairs{{{0, 1}, {0, 2}, {1, 2}}};

extern const std::array<const char*, 3> kProcessNames;

/// Which parts of the model are free. Inactive processes are constant at
/// their mean (sigma pinned to zero) and carry no latent column.
struct StructureMask {
  std::array<bool, 3> active{true, true, true};
  std::array<std::array<bool, 3>, 3> phi_free{};
  std::array<bool, 3> rho_free{};

  int num_active() const;
  int n_free() const;
  /// Active process indices in increasing order.
  std::vector<int> active_indices() const;
  /// Throws InvalidArgument if a free phi/rho entry touches an inactive process.
  void validate() const;

  static StructureMask ar1_theta();
  bool operator==(const StructureMask&) const = default;
};

struct ModelParams {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Matrix3d phi = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  /// -inf marks a degenerate (constant) process.
  Eigen::Vector3d log_sigma = Eigen::Vector3d::Zero();
  StructureMask structure;

  double sigma(int k) const;
  /// Pins non-free entries to zero and inactive log-scales to -inf.
  void normalize();
};

struct LatentStates {
  Eigen::MatrixXd states;  // tmax x 3
  Eigen::Index tmax() const { return states.rows(); }
};

struct NaturalProcesses {
  Eigen::MatrixXd eta;  // tmax x 3
};

struct Brood {
  int year = 0;
  double laying_date = 0.0;
  int n_fledglings = 0;
  bool operator==(const Brood&) const = default;
};

/// One time point. Observations are kept sorted so that every statistic is
/// independent of input order.
struct YearData {
  int year = 0;
  std::vector<double> z;
  std::vector<int> x;
  double sum_x = 0.0;
  double sum_xz = 0.0;
  double sum_xzz = 0.0;
  double sum_lgamma = 0.0;  // sum of lgamma(x + 1)
};

class Dataset {
 public:
  Dataset() = default;
  /// Appends a year. Years must be strictly increasing and non-empty.
  void add_year(int year, std::vector<double> z, std::vector<int> x);

  static Dataset from_broods(const std::vector<Brood>& broods);
  std::vector<Brood> to_broods() const;

  std::size_t num_years() const { return years_.size(); }
  std::size_t num_obs() const;
  const YearData& year(std::size_t t) const { return years_[t]; }
  const std::vector<YearData>& years() const { return years_; }

 private:
  std::vector<YearData> years_;
};

double log_fitness(const Eigen::Vector3d& eta, double z);
Eigen::Matrix3d stationary_corr(const Eigen::Vector3d& rho);
Eigen::Matrix3d innovation_cov(const Eigen::Matrix3d& phi, const Eigen::Matrix3d& gamma0);
double spectral_radius(const Eigen::Matrix3d& phi);
NaturalProcesses natural_processes(const ModelParams& p, const LatentStates& u);
/// Throws Unstable / NotPositiveDefinite / NotPositiveSemidefinite.
void check_params(const ModelParams& p);

double joint_neg_log_density(const ModelParams& p, const LatentStates& u, const Dataset& d);

inline constexpr double kStabilityEps = 1e-8;
inline constexpr double kPivotTol = 1e-10;

}  // namespace fluctsel
