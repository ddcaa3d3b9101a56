#include "fluctsel/oracles/ghq.hpp"

#include <array>
#include <cmath>
#include <vector>
#include <numbers>

#include "fluctsel/core/error.hpp"
#include "fluctsel/laplace/laplace.hpp"

namespace fluctsel {

void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) fail(Errc::InvalidArgument, "gauss_hermite: need at least one node");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v = es.eigenvectors()(0, k);
    weights[k] = std::sqrt(std::numbers::pi) * v * v;
  }
}

namespace {

struct Setup {
  int tmax = 0, m = 0, d = 0;
  Eigen::MatrixXd mode;   // tmax x m
  Eigen::MatrixXd scale;  // sqrt(2) L^{-T}, upper triangular, d x d
  Eigen::MatrixXd q;      // prior precision, dense
  double j_mode = 0.0;
  double log_norm = 0.0;  // log |L| - (d/2) log 2
  double prior_const = 0.0;
  Eigen::VectorXd x, lw;  // nodes and log(w e^{x^2})
};

Setup setup(const LatentModel& lm, int nodes) {
  Setup s;
  s.tmax = lm.tmax();
  s.m = lm.m();
  s.d = s.tmax * s.m;
  if (s.d > kMaxQuadratureDim)
    fail(Errc::DimensionTooLarge, "ghq_marginal: latent dimension " + std::to_string(s.d) +
                                      " exceeds " + std::to_string(kMaxQuadratureDim));
  LaplaceOptions opt;
  opt.tol = 1e-12;
  opt.exec = Exec::Serial;
  InnerSolve in = inner_mode(lm, nullptr, opt);
  if (!in.converged) fail(Errc::InnerDivergence, "ghq_marginal: mode search failed");
  s.mode = in.mode;
  s.j_mode = in.joint;
  const Eigen::MatrixXd h = in.hessian.dense();
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) fail(Errc::NotPositiveDefinite, "ghq_marginal: Hessian");
  const Eigen::MatrixXd l = llt.matrixL();
  s.scale = std::sqrt(2.0) *
            l.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(s.d, s.d));
  s.log_norm = l.diagonal().array().log().sum() - 0.5 * s.d * std::log(2.0);
  s.q = lm.prior_precision().dense();
  s.prior_const = lm.prior_constant();
  Eigen::VectorXd w;
  gauss_hermite(nodes, s.x, w);
  s.lw = w.array().log() + s.x.array().square();
  return s;
}

/// Joint at u = mode + scale * z, in the flattened t-major order.
double joint_at(const LatentModel& lm, const Setup& s, const Eigen::VectorXd& z) {
  const Eigen::VectorXd uf = s.scale * z;
  Eigen::MatrixXd u(s.tmax, s.m);
  for (int t = 0; t < s.tmax; ++t)
    for (int a = 0; a < s.m; ++a) u(t, a) = s.mode(t, a) + uf[t * s.m + a];
  std::vector<YearDerivs> d;
  return lm.joint(u, 0, d, Exec::Serial);
}

/// Incremental evaluation: u for year t depends only on z entries of years
/// >= t, so years are visited from last to first and each year's terms are
/// computed once per prefix.
class Walker {
 public:
  Walker(const LatentModel& lm, const Setup& s, int n) : lm_(lm), s_(s), m_(s.m) {
    tuples_ = 1;
    for (int a = 0; a < m_; ++a) tuples_ *= n;
    zt_.resize(tuples_ * m_);
    lw_.resize(tuples_);
    for (long k = 0; k < tuples_; ++k) {
      long r = k;
      lw_[k] = 0.0;
      for (int a = 0; a < m_; ++a) {
        const int idx = static_cast<int>(r % n);
        r /= n;
        zt_[k * m_ + a] = s.x[idx];
        lw_[k] += s.lw[idx];
      }
    }
    // v[t][k] = S_tt z_k
    v_.assign(s.tmax, std::vector<double>(tuples_ * m_, 0.0));
    for (int t = 0; t < s.tmax; ++t)
      for (long k = 0; k < tuples_; ++k)
        for (int a = 0; a < m_; ++a) {
          double acc = 0.0;
          for (int b = 0; b < m_; ++b) acc += s.scale(t * m_ + a, t * m_ + b) * zt_[k * m_ + b];
          v_[t][k * m_ + a] = acc;
        }
    for (int a = 0; a < m_; ++a) {
      act_[a] = lm.prior().act[a];
      sig_[a] = lm.sigma()[a];
    }
  }

  long tuples() const { return tuples_; }

  /// Sum over node tuples of years <= t (tuple `only` at year t when >= 0)
  /// of w * exp(J(mode) - J).
  double visit(int t, std::array<double, kMaxQuadratureDim>& z,
               std::array<double, kMaxQuadratureDim>& u, double acc_j, double acc_lw,
               long only = -1) const {
    const int m = m_, d = s_.d, r0 = t * m;
    double base[3], c[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < m; ++a) {
      base[a] = s_.mode(t, a);
      for (int j = r0 + m; j < d; ++j) base[a] += s_.scale(r0 + a, j) * z[j];
      if (t + 1 < s_.tmax)
        for (int b = 0; b < m; ++b) c[a] += s_.q(r0 + a, r0 + m + b) * u[r0 + m + b];
    }
    double qtt[3][3];
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) qtt[a][b] = s_.q(r0 + a, r0 + b);
    Eigen::Vector3d eta;
    YearDerivs yd;
    double sum = 0.0;
    const long k0 = only >= 0 ? only : 0, k1 = only >= 0 ? only + 1 : tuples_;
    for (long k = k0; k < k1; ++k) {
      const double* vk = &v_[t][k * m];
      double j = acc_j;
      for (int a = 0; a < m; ++a) {
        u[r0 + a] = base[a] + vk[a];
        z[r0 + a] = zt_[k * m + a];
      }
      for (int a = 0; a < m; ++a) {
        double qa = 0.0;
        for (int b = 0; b < m; ++b) qa += qtt[a][b] * u[r0 + b];
        j += u[r0 + a] * (0.5 * qa + c[a]);
      }
      eta = lm_.params().mu;
      for (int a = 0; a < m; ++a) eta[act_[a]] += sig_[a] * u[r0 + a];
      lm_.observations().year(t, eta, 0, yd);
      j += yd.value;
      const double lw = acc_lw + lw_[k];
      if (t == 0)
        sum += std::exp(lw + s_.j_mode - (j + s_.prior_const));
      else
        sum += visit(t - 1, z, u, j, lw);
    }
    return sum;
  }

 private:
  const LatentModel& lm_;
  const Setup& s_;
  int m_;
  long tuples_ = 1;
  std::vector<double> zt_, lw_;
  std::vector<std::vector<double>> v_;
  int act_[3] = {0, 0, 0};
  double sig_[3] = {0.0, 0.0, 0.0};
};

}  // namespace

double ghq_marginal(const ModelParams& p, const ObservationModel& obs, int nodes_per_dim,
                    Exec exec) {
  LatentModel lm(p, obs);
  if (lm.m() == 0) {
    std::vector<YearDerivs> d;
    return lm.joint(Eigen::MatrixXd(lm.tmax(), 0), 0, d, Exec::Serial);
  }
  const Setup s = setup(lm, nodes_per_dim);
  const Walker w(lm, s, nodes_per_dim);
  const long tuples = w.tuples();
  double total = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(+ : total) if (exec == Exec::Parallel)
  for (long k = 0; k < tuples; ++k) {
    std::array<double, kMaxQuadratureDim> z{}, u{};
    total += w.visit(s.tmax - 1, z, u, 0.0, 0.0, k);
  }
  return s.j_mode + s.log_norm - std::log(total);
}

double ghq_marginal_reference(const ModelParams& p, const ObservationModel& obs,
                              int nodes_per_dim) {
  LatentModel lm(p, obs);
  if (lm.m() == 0) return ghq_marginal(p, obs, nodes_per_dim, Exec::Serial);
  const Setup s = setup(lm, nodes_per_dim);
  long total_pts = 1;
  for (int i = 0; i < s.d; ++i) total_pts *= nodes_per_dim;
  double total = 0.0;
  Eigen::VectorXd z(s.d);
  for (long k = 0; k < total_pts; ++k) {
    long r = k;
    double lw = 0.0;
    for (int i = 0; i < s.d; ++i) {
      const int idx = static_cast<int>(r % nodes_per_dim);
      r /= nodes_per_dim;
      z[i] = s.x[idx];
      lw += s.lw[idx];
    }
    total += std::exp(lw + s.j_mode - joint_at(lm, s, z));
  }
  return s.j_mode + s.log_norm - std::log(total);
}

}  // namespace fluctsel
