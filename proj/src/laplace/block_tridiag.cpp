#include <cmath>

#include "fluctsel/core/error.hpp"
#include "fluctsel/laplace/laplace.hpp"

namespace fluctsel {

namespace {

bool chol_block(const Blk& a, Blk& l) {
  const int m = static_cast<int>(a.rows());
  l = Blk::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > kPivotTol)) return false;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < m; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

}  // namespace

BlockTridiag::BlockTridiag(int tmax, int m) : m_(m) {
  diag.assign(tmax, Blk::Zero(m, m));
  sub.assign(tmax, Blk::Zero(m, m));
}

Eigen::MatrixXd BlockTridiag::dense() const {
  const int n = tmax() * m_;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < tmax(); ++t) {
    h.block(t * m_, t * m_, m_, m_) = diag[t];
    if (t > 0) {
      h.block(t * m_, (t - 1) * m_, m_, m_) = sub[t];
      h.block((t - 1) * m_, t * m_, m_, m_) = sub[t].transpose();
    }
  }
  return h;
}

Eigen::MatrixXd BlockTridiag::multiply(const Eigen::MatrixXd& x) const {
  const int tm = tmax();
  Eigen::MatrixXd y(tm, m_);
  for (int t = 0; t < tm; ++t) {
    Eigen::VectorXd r = diag[t] * x.row(t).transpose();
    if (t > 0) r += sub[t] * x.row(t - 1).transpose();
    if (t + 1 < tm) r += sub[t + 1].transpose() * x.row(t + 1).transpose();
    y.row(t) = r.transpose();
  }
  return y;
}

bool BlockTridiag::factorize() {
  const int tm = tmax();
  l_.assign(tm, Blk());
  linv_.assign(tm, Blk());
  c_.assign(tm, Blk());
  factorized_ = false;
  const Blk eye = Blk::Identity(m_, m_);
  for (int t = 0; t < tm; ++t) {
    Blk a = diag[t];
    if (t > 0) {
      // C_t = E_t L_{t-1}^{-T}
      c_[t] = sub[t] * linv_[t - 1].transpose();
      a -= c_[t] * c_[t].transpose();
    }
    if (!chol_block(a, l_[t])) return false;
    linv_[t] = l_[t].triangularView<Eigen::Lower>().solve(eye);
  }
  factorized_ = true;
  return true;
}

double BlockTridiag::logdet() const {
  if (!factorized_) fail(Errc::InvalidArgument, "BlockTridiag::logdet before factorize");
  double s = 0.0;
  for (const auto& l : l_)
    for (int i = 0; i < m_; ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Eigen::MatrixXd BlockTridiag::solve(const Eigen::MatrixXd& b) const {
  if (!factorized_) fail(Errc::InvalidArgument, "BlockTridiag::solve before factorize");
  const int tm = tmax();
  Eigen::MatrixXd y(tm, m_);
  for (int t = 0; t < tm; ++t) {
    Eigen::VectorXd r = b.row(t).transpose();
    if (t > 0) r -= c_[t] * y.row(t - 1).transpose();
    y.row(t) = (linv_[t] * r).transpose();
  }
  Eigen::MatrixXd x(tm, m_);
  for (int t = tm - 1; t >= 0; --t) {
    Eigen::VectorXd r = y.row(t).transpose();
    if (t + 1 < tm) r -= c_[t + 1].transpose() * x.row(t + 1).transpose();
    x.row(t) = (linv_[t].transpose() * r).transpose();
  }
  return x;
}

void BlockTridiag::selected_inverse(std::vector<Blk>& sdiag, std::vector<Blk>& ssub) const {
  if (!factorized_) fail(Errc::InvalidArgument, "selected_inverse before factorize");
  const int tm = tmax();
  sdiag.assign(tm, Blk());
  ssub.assign(tm, Blk::Zero(m_, m_));
  sdiag[tm - 1] = linv_[tm - 1].transpose() * linv_[tm - 1];
  for (int t = tm - 2; t >= 0; --t) {
    ssub[t + 1] = -sdiag[t + 1] * c_[t + 1] * linv_[t];
    sdiag[t] = linv_[t].transpose() * linv_[t] - ssub[t + 1].transpose() * c_[t + 1] * linv_[t];
    sdiag[t] = (0.5 * (sdiag[t] + sdiag[t].transpose())).eval();
  }
}

}  // namespace fluctsel
