#include <doctest.h>

#include <random>

#include "fluctsel/core/params.hpp"
#include "fluctsel/laplace/laplace.hpp"
#include "fluctsel/oracles/checks.hpp"
#include "fluctsel/oracles/kalman.hpp"
#include "helpers.hpp"

using namespace fluctsel;

namespace {

BlockTridiag random_spd(int tmax, int m, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n01;
  BlockTridiag h(tmax, m);
  for (int t = 0; t < tmax; ++t) {
    Blk a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = n01(g);
    h.diag[t] = a * a.transpose() + Blk::Identity(m, m) * (4.0 + m);
    if (t > 0) {
      Blk s(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) = 0.5 * n01(g);
      h.sub[t - 1] = s;
    }
  }
  return h;
}

GaussianObservation gaussian_obs(int tmax, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> y(tmax);
  for (auto& v : y)
    for (int i = 0; i < 4; ++i) v.push_back(20.0 + 10.0 * n01(g));
  return GaussianObservation(y, Eigen::Vector3d(0.2, 1.0, -0.3), 5.0);
}

}  // namespace

TEST_SUITE("laplace") {

TEST_CASE("block tridiagonal factorization matches dense algebra") {
  for (int m : {1, 2, 3}) {
    BlockTridiag h = random_spd(7, m, 10 + m);
    const Eigen::MatrixXd dense = h.dense();
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(7, m);
    const Eigen::MatrixXd hb = h.multiply(b);
    Eigen::Map<const Eigen::VectorXd> bv(b.data(), b.size());
    (void)bv;
    Eigen::VectorXd flat(7 * m);
    for (int t = 0; t < 7; ++t)
      for (int a = 0; a < m; ++a) flat[t * m + a] = b(t, a);
    const Eigen::VectorXd want = dense * flat;
    for (int t = 0; t < 7; ++t)
      for (int a = 0; a < m; ++a) CHECK(hb(t, a) == doctest::Approx(want[t * m + a]));
    REQUIRE(h.factorize());
    CHECK(h.logdet() == doctest::Approx(std::log(dense.determinant())).epsilon(1e-10));
    const Eigen::MatrixXd x = h.solve(hb);
    CHECK((x - b).cwiseAbs().maxCoeff() < 1e-10);
    std::vector<Blk> sd, ss;
    h.selected_inverse(sd, ss);
    const Eigen::MatrixXd inv = dense.inverse();
    for (int t = 0; t < 7; ++t) {
      CHECK((sd[t] - inv.block(t * m, t * m, m, m)).cwiseAbs().maxCoeff() < 1e-10);
      if (t > 0)
        CHECK((ss[t] - inv.block(t * m, (t - 1) * m, m, m)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("factorization reports an indefinite matrix") {
  BlockTridiag h(3, 1);
  for (auto& d : h.diag) d = Blk::Constant(1, 1, 1.0);
  for (auto& s : h.sub) s = Blk::Constant(1, 1, 2.0);
  CHECK_FALSE(h.factorize());
}

TEST_CASE("prior precision agrees with the prior multiply") {
  const Dataset d = testing::small_data(1, 6, 10.0);
  PoissonObservation obs(d);
  LatentModel lm(testing::full_params(), obs);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Random(6, 3);
  CHECK((lm.prior_precision().multiply(u) - lm.prior_multiply(u)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("laplace marginal is exact for a linear-Gaussian model") {
  auto p = testing::full_params();
  const auto obs = gaussian_obs(12, 3);
  const double la = marginal_nll(p, obs);
  const double kf = kalman_nll(p, obs);
  CHECK(std::abs(la - kf) < 1e-6 * std::max(1.0, std::abs(kf)));
  const MarginalResult r = marginal(p, obs, false);
  const Eigen::MatrixXd ks = kalman_smoothed_latents(p, obs);
  CHECK((r.inner.mode - ks).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("marginal gradient matches finite differences") {
  const Dataset d = testing::small_data(2, 10, 40.0);
  PoissonObservation obs(d);
  for (const ModelParams& p : {testing::ar1_params(), testing::full_params()}) {
    const Eigen::VectorXd g = marginal_nll_grad(p, obs);
    auto f = [&](const Eigen::VectorXd& v) {
      return marginal_nll(from_natural(v, p.structure), obs);
    };
    const Eigen::VectorXd fd = fd_gradient(f, to_natural(p));
    CHECK(max_rel_error(g, fd) < 1e-5);
  }
}

TEST_CASE("inner solve converges and is insensitive to the execution mode") {
  const Dataset d = testing::small_data(3, 15, 30.0);
  PoissonObservation obs(d);
  LatentModel lm(testing::full_params(), obs);
  LaplaceOptions serial, par;
  serial.exec = Exec::Serial;
  const InnerSolve a = inner_mode(lm, nullptr, serial);
  const InnerSolve b = inner_mode(lm, nullptr, par);
  CHECK(a.converged);
  CHECK(a.grad_norm < 1e-8);
  CHECK(a.newton_iters <= 100);
  CHECK((a.mode - b.mode).cwiseAbs().maxCoeff() < 1e-10);
  const InnerSolve w = inner_mode(lm, &a.mode, serial);
  CHECK(w.newton_iters <= 1);
}

TEST_CASE("model without latent processes reduces to the plain likelihood") {
  const Dataset d = testing::small_data(4, 5, 10.0);
  ModelParams p;
  p.structure.active = {false, false, false};
  p.mu = Eigen::Vector3d(2.0, 20.0, 3.5);
  p.normalize();
  LatentStates u;
  u.states = Eigen::MatrixXd::Zero(5, 3);
  CHECK(marginal_nll(p, d) == doctest::Approx(joint_neg_log_density(p, u, d)).epsilon(1e-12));
}

}
