#include "fluctsel/core/observation.hpp"

#include <cmath>
#include <numbers>

#include "fluctsel/core/error.hpp"

namespace fluctsel {

namespace {

void fill_symmetric_third(std::array<Eigen::Matrix3d, 3>& t, int a, int b, int c, double v) {
  const int idx[6][3] = {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
  for (const auto& p : idx) t[p[0]](p[1], p[2]) = v;
}

}  // namespace

void poisson_year(const YearData& y, const Eigen::Vector3d& eta, int order, YearDerivs& out) {
  const double th = eta[kTheta];
  const double s = std::exp(-2.0 * eta[kOmega]);
  const double hs = 0.5 * s;
  double w[7] = {0, 0, 0, 0, 0, 0, 0};
  double xs = 0.0, xd = 0.0, xd2 = 0.0;
  const int nmom = order >= 3 ? 7 : order == 2 ? 5 : order == 1 ? 3 : 1;
  for (std::size_t i = 0; i < y.z.size(); ++i) {
    const double d = y.z[i] - th;
    const double d2 = d * d;
    const double wi = std::exp(eta[kAlpha] - hs * d2);
    double p = wi;
    w[0] += p;
    for (int j = 1; j < nmom; ++j) {
      p *= d;
      w[j] += p;
    }
    const double xi = y.x[i];
    xs += xi;
    xd += xi * d;
    xd2 += xi * d2;
  }
  out.value = w[0] - eta[kAlpha] * xs + hs * xd2 + y.sum_lgamma;
  if (order < 1) return;
  out.grad = {w[0] - xs, s * (w[1] - xd), s * (w[2] - xd2)};
  if (order < 2) return;
  const double s2 = s * s;
  Eigen::Matrix3d& h = out.hess;
  h(0, 0) = w[0];
  h(0, 1) = h(1, 0) = s * w[1];
  h(0, 2) = h(2, 0) = s * w[2];
  h(1, 1) = s2 * w[2] - s * w[0] + s * xs;
  h(1, 2) = h(2, 1) = s2 * w[3] - 2.0 * s * w[1] + 2.0 * s * xd;
  h(2, 2) = s2 * w[4] - 2.0 * s * w[2] + 2.0 * s * xd2;
  if (order < 3) return;
  const double s3 = s2 * s;
  auto& t = out.third;
  for (int b = 0; b < 3; ++b)
    for (int c = b; c < 3; ++c) fill_symmetric_third(t, 0, b, c, 0.0);
  // alpha slices repeat the w-part Hessian
  const double ha[3][3] = {{w[0], s * w[1], s * w[2]},
                           {s * w[1], s2 * w[2] - s * w[0], s2 * w[3] - 2.0 * s * w[1]},
                           {s * w[2], s2 * w[3] - 2.0 * s * w[1], s2 * w[4] - 2.0 * s * w[2]}};
  for (int b = 0; b < 3; ++b)
    for (int c = b; c < 3; ++c) fill_symmetric_third(t, 0, b, c, ha[b][c]);
  fill_symmetric_third(t, 1, 1, 1, s3 * w[3] - 3.0 * s2 * w[1]);
  fill_symmetric_third(t, 1, 1, 2, s3 * w[4] - 5.0 * s2 * w[2] + 2.0 * s * w[0] - 2.0 * s * xs);
  fill_symmetric_third(t, 1, 2, 2, s3 * w[5] - 6.0 * s2 * w[3] + 4.0 * s * w[1] - 4.0 * s * xd);
  fill_symmetric_third(t, 2, 2, 2, s3 * w[6] - 6.0 * s2 * w[4] + 4.0 * s * w[2] - 4.0 * s * xd2);
}

void poisson_year_reference(const YearData& y, const Eigen::Vector3d& eta, int order,
                            YearDerivs& out) {
  const double s = std::exp(-2.0 * eta[kOmega]);
  out.value = y.sum_lgamma;
  out.grad.setZero();
  out.hess.setZero();
  for (auto& m : out.third) m.setZero();
  for (std::size_t i = 0; i < y.z.size(); ++i) {
    const double d = y.z[i] - eta[kTheta];
    const double lw = eta[kAlpha] - 0.5 * s * d * d;
    const double w = std::exp(lw);
    const double x = y.x[i];
    out.value += w - x * lw;
    if (order < 1) continue;
    const double l1[3] = {1.0, d * s, d * d * s};
    double l2[3][3] = {{0, 0, 0}, {0, -s, -2.0 * d * s}, {0, -2.0 * d * s, -2.0 * d * d * s}};
    double l3[3][3][3] = {};
    l3[1][1][2] = l3[1][2][1] = l3[2][1][1] = 2.0 * s;
    l3[1][2][2] = l3[2][1][2] = l3[2][2][1] = 4.0 * d * s;
    l3[2][2][2] = 4.0 * d * d * s;
    for (int a = 0; a < 3; ++a) {
      out.grad[a] += w * l1[a] - x * l1[a];
      if (order < 2) continue;
      for (int b = 0; b < 3; ++b) {
        out.hess(a, b) += w * (l1[a] * l1[b] + l2[a][b]) - x * l2[a][b];
        if (order < 3) continue;
        for (int c = 0; c < 3; ++c)
          out.third[a](b, c) += w * (l1[a] * l1[b] * l1[c] + l2[a][b] * l1[c] + l2[a][c] * l1[b] +
                                     l2[b][c] * l1[a] + l3[a][b][c]) -
                                x * l3[a][b][c];
      }
    }
  }
}

void PoissonObservation::year(std::size_t t, const Eigen::Vector3d& eta, int order,
                              YearDerivs& out) const {
  if (reference_)
    poisson_year_reference(d_.year(t), eta, order, out);
  else
    poisson_year(d_.year(t), eta, order, out);
}

GaussianObservation::GaussianObservation(std::vector<std::vector<double>> y, Eigen::Vector3d h,
                                         double tau)
    : y_(std::move(y)), h_(std::move(h)), tau_(tau) {
  if (!(tau_ > 0.0)) fail(Errc::InvalidArgument, "observation noise must be positive");
  for (const auto& v : y_)
    if (v.empty()) fail(Errc::InvalidArgument, "year without observations");
}

void GaussianObservation::year(std::size_t t, const Eigen::Vector3d& eta, int order,
                               YearDerivs& out) const {
  const double mean = h_.dot(eta);
  const double iv = 1.0 / (tau_ * tau_);
  double ss = 0.0, sr = 0.0;
  for (double v : y_[t]) {
    const double r = v - mean;
    ss += r * r;
    sr += r;
  }
  const double n = static_cast<double>(y_[t].size());
  out.value = 0.5 * iv * ss + 0.5 * n * std::log(2.0 * std::numbers::pi * tau_ * tau_);
  if (order < 1) return;
  out.grad = -iv * sr * h_;
  if (order < 2) return;
  out.hess = n * iv * h_ * h_.transpose();
  if (order < 3) return;
  for (auto& m : out.third) m.setZero();
}

void evaluate_years(const ObservationModel& obs, const Eigen::MatrixXd& eta, int order,
                    std::vector<YearDerivs>& out, Exec exec) {
  const auto n = static_cast<long>(obs.num_years());
  if (eta.rows() != n || eta.cols() != 3)
    fail(Errc::DimensionMismatch, "evaluate_years: eta must be tmax x 3");
  out.resize(static_cast<std::size_t>(n));
  if (exec == Exec::Serial) {
    for (long t = 0; t < n; ++t) obs.year(t, eta.row(t).transpose(), order, out[t]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) obs.year(t, eta.row(t).transpose(), order, out[t]);
}

}  // namespace fluctsel
