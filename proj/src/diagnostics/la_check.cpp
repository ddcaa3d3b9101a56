#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/rng.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"

namespace fluctsel {

namespace {

struct KdeSetup {
  Eigen::Matrix2d kinv;
  double norm = 0.0;
  KdeGrid g;
};

KdeSetup kde_setup(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_grid) {
  if (a.size() != b.size() || a.size() < 3)
    fail(Errc::InvalidArgument, "kde2d: need two equal-length samples of size >= 3");
  const double n = static_cast<double>(a.size());
  const double ma = a.mean(), mb = b.mean();
  Eigen::Matrix2d cov;
  cov(0, 0) = (a.array() - ma).square().sum() / (n - 1.0);
  cov(1, 1) = (b.array() - mb).square().sum() / (n - 1.0);
  cov(0, 1) = cov(1, 0) = ((a.array() - ma) * (b.array() - mb)).sum() / (n - 1.0);
  const Eigen::Matrix2d k = cov * std::pow(n, -1.0 / 3.0);
  const double det = k.determinant();
  if (!(det > 0.0)) fail(Errc::NotPositiveDefinite, "kde2d: degenerate sample covariance");
  KdeSetup s;
  s.kinv = k.inverse();
  s.norm = 1.0 / (n * 2.0 * std::numbers::pi * std::sqrt(det));
  const double pad_a = 4.0 * std::sqrt(k(0, 0)), pad_b = 4.0 * std::sqrt(k(1, 1));
  s.g.x = Eigen::VectorXd::LinSpaced(n_grid, a.minCoeff() - pad_a, a.maxCoeff() + pad_a);
  s.g.y = Eigen::VectorXd::LinSpaced(n_grid, b.minCoeff() - pad_b, b.maxCoeff() + pad_b);
  s.g.density = Eigen::MatrixXd::Zero(n_grid, n_grid);
  return s;
}

double kde_at(const KdeSetup& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double x,
              double y) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double dx = x - a[k], dy = y - b[k];
    acc += std::exp(-0.5 * (s.kinv(0, 0) * dx * dx + 2.0 * s.kinv(0, 1) * dx * dy +
                            s.kinv(1, 1) * dy * dy));
  }
  return acc * s.norm;
}

}  // namespace

double KdeGrid::integral() const {
  if (x.size() < 2 || y.size() < 2) return 0.0;
  const double dx = x[1] - x[0], dy = y[1] - y[0];
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double wi = (i == 0 || i == x.size() - 1) ? 0.5 : 1.0;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double wj = (j == 0 || j == y.size() - 1) ? 0.5 : 1.0;
      s += wi * wj * density(i, j);
    }
  }
  return s * dx * dy;
}

KdeGrid kde2d(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_grid, Exec exec) {
  KdeSetup s = kde_setup(a, b, n_grid);
  const int cells = n_grid * n_grid;
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (int c = 0; c < cells; ++c) {
    const int i = c / n_grid, j = c % n_grid;
    s.g.density(i, j) = kde_at(s, a, b, s.g.x[i], s.g.y[j]);
  }
  return s.g;
}

KdeGrid kde2d_reference(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_grid) {
  KdeSetup s = kde_setup(a, b, n_grid);
  const double n = static_cast<double>(a.size());
  const double det = 1.0 / s.kinv.determinant();
  const double c = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  for (int i = 0; i < n_grid; ++i)
    for (int j = 0; j < n_grid; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.size(); ++k) {
        Eigen::Vector2d d(s.g.x[i] - a[k], s.g.y[j] - b[k]);
        acc += c * std::exp(-0.5 * d.dot(s.kinv * d));
      }
      s.g.density(i, j) = acc / n;
    }
  return s.g;
}

double LaCheck::max_std_mean_diff() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < mean_full.size(); ++j) {
    const double sd = std::sqrt(0.5 * (sd_full[j] * sd_full[j] + sd_laplace[j] * sd_laplace[j]));
    const double d = std::abs(mean_full[j] - mean_laplace[j]);
    m = std::max(m, sd > 0.0 ? d / sd : (d > 0.0 ? INFINITY : 0.0));
  }
  return m;
}

LaCheck la_check_export(const PosteriorDraws& full, const PosteriorDraws& laplace,
                        std::uint64_t seed, std::vector<std::pair<int, int>> pairs, int n_grid,
                        Exec exec) {
  if (full.names != laplace.names)
    fail(Errc::NameMismatch, "la_check_export: runs have different coordinate names");
  LaCheck out;
  out.names = full.names;
  const Eigen::MatrixXd f = full.merged(), l = laplace.merged();
  const Eigen::Index p = static_cast<Eigen::Index>(out.names.size());

  std::vector<std::pair<int, Eigen::Index>> idx;
  for (Eigen::Index i = 0; i < f.rows(); ++i) idx.emplace_back(0, i);
  for (Eigen::Index i = 0; i < l.rows(); ++i) idx.emplace_back(1, i);
  CounterRng rng(seed, {0x1ac4});
  std::shuffle(idx.begin(), idx.end(), rng);
  out.rows.resize(static_cast<Eigen::Index>(idx.size()), p);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& [tech, i] = idx[r];
    out.rows.row(static_cast<Eigen::Index>(r)) = tech == 0 ? f.row(i) : l.row(i);
    out.technique.push_back(tech);
  }

  auto moments = [](const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
    mean = m.colwise().mean().transpose();
    sd.resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      sd[j] = std::sqrt((m.col(j).array() - mean[j]).square().sum() / std::max<double>(1, m.rows() - 1));
  };
  moments(f, out.mean_full, out.sd_full);
  moments(l, out.mean_laplace, out.sd_laplace);

  const Eigen::Index nq = std::min(f.rows(), l.rows());
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> a(f.col(j).data(), f.col(j).data() + f.rows());
    std::vector<double> b(l.col(j).data(), l.col(j).data() + l.rows());
    Eigen::MatrixXd qq(nq, 2);
    if (f.rows() == l.rows()) {
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      for (Eigen::Index i = 0; i < nq; ++i) qq.row(i) << a[i], b[i];
    } else {
      for (Eigen::Index i = 0; i < nq; ++i) {
        const double pr = nq > 1 ? double(i) / (nq - 1) : 0.5;
        qq.row(i) << quantile(a, pr), quantile(b, pr);
      }
    }
    out.qq.push_back(qq);
  }

  if (pairs.empty())
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) pairs.emplace_back(a, b);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= p || b >= p)
      fail(Errc::InvalidArgument, "la_check_export: contour pair out of range");
    for (int tech = 0; tech < 2; ++tech) {
      const Eigen::MatrixXd& m = tech == 0 ? f : l;
      KdeGrid g = kde2d(m.col(a), m.col(b), n_grid, exec);
      g.x_name = out.names[a];
      g.y_name = out.names[b];
      g.technique = tech == 0 ? "full" : "laplace";
      out.contours.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace fluctsel
