#include <doctest.h>

#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "fluctsel/core/error.hpp"
#include "fluctsel/laplace/laplace.hpp"
#include "fluctsel/oracles/checks.hpp"
#include "fluctsel/oracles/ghq.hpp"
#include "fluctsel/oracles/kalman.hpp"
#include "fluctsel/oracles/verify.hpp"
#include "helpers.hpp"

using namespace fluctsel;

TEST_SUITE("oracles") {

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  Eigen::VectorXd x, w;
  gauss_hermite(21, x, w);
  CHECK(x.size() == 21);
  const double sp = std::sqrt(std::numbers::pi);
  CHECK(w.sum() == doctest::Approx(sp).epsilon(1e-13));
  CHECK((w.array() * x.array().square()).sum() == doctest::Approx(sp / 2).epsilon(1e-13));
  CHECK((w.array() * x.array().pow(4)).sum() == doctest::Approx(3 * sp / 4).epsilon(1e-12));
  CHECK(std::abs((w.array() * x.array().pow(3)).sum()) < 1e-12);
}

TEST_CASE("Kalman likelihood equals the dense Gaussian likelihood") {
  const auto p = testing::full_params();
  std::mt19937_64 g(2);
  std::normal_distribution<double> n01;
  const int tmax = 5, per = 2;
  std::vector<std::vector<double>> y(tmax);
  for (auto& v : y)
    for (int i = 0; i < per; ++i) v.push_back(20 + 5 * n01(g));
  const GaussianObservation obs(y, Eigen::Vector3d(0.5, 1.0, 0.2), 3.0);
  const StateSpace ss = linear_gaussian_state_space(p, obs);
  const int m = static_cast<int>(ss.a1.size());
  Eigen::MatrixXd cov_a = Eigen::MatrixXd::Zero(tmax * m, tmax * m);
  std::vector<Eigen::MatrixXd> pw(tmax);
  pw[0] = ss.p1;
  for (int t = 1; t < tmax; ++t)
    pw[t] = ss.transition * pw[t - 1] * ss.transition.transpose() + ss.state_cov;
  for (int s = 0; s < tmax; ++s) {
    Eigen::MatrixXd tr = Eigen::MatrixXd::Identity(m, m);
    for (int t = s; t < tmax; ++t) {
      cov_a.block(t * m, s * m, m, m) = tr * pw[s];
      cov_a.block(s * m, t * m, m, m) = (tr * pw[s]).transpose();
      tr = ss.transition * tr;
    }
  }
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(tmax * per, tmax * m);
  Eigen::VectorXd mean(tmax * per), yy(tmax * per);
  Eigen::VectorXd am = Eigen::VectorXd::Zero(tmax * m);
  for (int t = 0; t < tmax; ++t) {
    Eigen::VectorXd at = ss.a1;
    for (int s = 0; s < t; ++s) at = ss.transition * at;
    am.segment(t * m, m) = at;
  }
  for (int t = 0; t < tmax; ++t)
    for (int i = 0; i < per; ++i) {
      z.block(t * per + i, t * m, 1, m) = ss.z.transpose();
      yy[t * per + i] = y[t][i];
    }
  mean = z * am + Eigen::VectorXd::Constant(tmax * per, ss.d);
  const Eigen::MatrixXd cov =
      z * cov_a * z.transpose() + ss.h * Eigen::MatrixXd::Identity(tmax * per, tmax * per);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd r = yy - mean;
  const double nll = 0.5 * r.dot(llt.solve(r)) +
                     Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum() +
                     0.5 * tmax * per * std::log(2 * std::numbers::pi);
  CHECK(kalman(ss, y).nll == doctest::Approx(nll).epsilon(1e-10));
  CHECK(kalman_nll(p, obs) == doctest::Approx(nll).epsilon(1e-10));
}

TEST_CASE("quadrature: parallel, reference and Laplace agree on a small toy") {
  const Dataset d = testing::small_data(8, 2, 5.0);
  PoissonObservation obs(d);
  const auto p = testing::ar1_params();
  const double a = ghq_marginal(p, obs, 15, Exec::Parallel);
  const double b = ghq_marginal(p, obs, 15, Exec::Serial);
  const double c = ghq_marginal_reference(p, obs, 15);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(a == doctest::Approx(c).epsilon(1e-10));
  CHECK(std::abs(marginal_nll(p, d) - a) / std::abs(a) < 0.01);
}

TEST_CASE("quadrature dimension limit") {
  const Dataset d = testing::small_data(8, 3, 5.0);
  PoissonObservation obs(d);
  CHECK_NOTHROW(ghq_marginal(testing::full_params(), PoissonObservation(testing::small_data(8, 2, 3.0)), 3));
  const Dataset d7 = testing::small_data(8, 7, 3.0);
  CHECK_THROWS_AS(ghq_marginal(testing::ar1_params(), PoissonObservation(d7), 5), Error);
  CHECK_THROWS_AS(ghq_marginal(testing::full_params(), obs, 5), Error);
}

TEST_CASE("Kolmogorov-Smirnov statistic") {
  std::vector<double> u;
  for (int i = 0; i < 100; ++i) u.push_back((i + 0.5) / 100.0);
  CHECK(ks_statistic(u, [](double x) { return x; }) == doctest::Approx(0.005));
  CHECK(ks_statistic({0.0}, [](double x) { return x; }) == doctest::Approx(1.0));
}

TEST_CASE("finite-difference gradient of a smooth function") {
  auto f = [](const Eigen::VectorXd& x) { return std::sin(x[0]) * std::exp(0.1 * x[1]) + x[1] * x[1] * x[1]; };
  const Eigen::Vector2d x(0.7, 30.0);
  const Eigen::VectorXd g = fd_gradient(f, x);
  CHECK(g[0] == doctest::Approx(std::cos(0.7) * std::exp(3.0)).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(0.1 * std::sin(0.7) * std::exp(3.0) + 3 * 900.0).epsilon(1e-9));
  CHECK(max_rel_error(Eigen::Vector2d(1.0, 200.0), Eigen::Vector2d(1.5, 100.0)) == doctest::Approx(1.0));
}

TEST_CASE("analytic scale CDFs") {
  CHECK(scale_cdf(PriorSpec::prior1(), 10.0) == doctest::Approx(0.5));
  CHECK(scale_cdf(PriorSpec::prior2(), std::exp(1.0)) == doctest::Approx(0.5));
  CHECK(scale_cdf(PriorSpec::invgamma(), 1.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("quick verification suite passes") {
  VerifyOptions o;
  o.quick = true;
  for (const auto& r : verify_suite(o)) CHECK_MESSAGE(r.passed, r.name << " " << r.measured);
}

}
