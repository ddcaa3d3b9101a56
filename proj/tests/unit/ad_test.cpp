#include <doctest.h>

#include <cmath>

#include "fluctsel/ad/dual.hpp"
#include "fluctsel/ad/tape.hpp"
#include "fluctsel/core/error.hpp"
#include "fluctsel/core/joint.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/oracles/checks.hpp"
#include "helpers.hpp"

using namespace fluctsel;

namespace {

template <class T>
T poly(std::span<const T> x) {
  using std::exp;
  using std::log;
  using std::sqrt;
  using std::tanh;
  return x[0] * x[1] + exp(x[2]) / x[0] - log(x[1]) * tanh(x[2]) + sqrt(x[0] * x[0] + 1.0);
}

}  // namespace

TEST_SUITE("ad") {

TEST_CASE("forward dual numbers carry derivatives") {
  ad::Dual1 x(0.7, 1.0);
  const ad::Dual1 y = exp(x) * x - log(x) / (x + 2.0);
  const double v = 0.7;
  const double dy = std::exp(v) * (v + 1.0) - ((1.0 / v) * (v + 2.0) - std::log(v)) / ((v + 2.0) * (v + 2.0));
  CHECK(y.val == doctest::Approx(std::exp(v) * v - std::log(v) / (v + 2.0)));
  CHECK(y.tan == doctest::Approx(dy).epsilon(1e-12));
}

TEST_CASE("tape gradient matches finite differences") {
  const std::vector<double> x0 = {1.3, 2.1, -0.4};
  double val = 0.0;
  const auto g = ad::gradient([](std::span<const ad::Var> x) { return poly<ad::Var>(x); },
                              std::span<const double>(x0), &val);
  CHECK(val == doctest::Approx(poly<double>(std::span<const double>(x0))));
  auto f = [](const Eigen::VectorXd& x) {
    return poly<double>(std::span<const double>(x.data(), 3));
  };
  const Eigen::VectorXd fd = fd_gradient(f, Eigen::Map<const Eigen::VectorXd>(x0.data(), 3));
  for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-9));
}

TEST_CASE("replayed tape equals a fresh recording") {
  const std::vector<double> x0 = {1.3, 2.1, -0.4}, x1 = {0.9, 1.7, 0.3};
  const ad::Tape t = ad::record([](std::span<const ad::Var> x) { return poly<ad::Var>(x); },
                                std::span<const double>(x0));
  double v = 0.0;
  const auto g1 = t.gradient(std::span<const double>(x1), &v);
  const auto g2 = ad::gradient([](std::span<const ad::Var> x) { return poly<ad::Var>(x); },
                               std::span<const double>(x1));
  CHECK(v == doctest::Approx(poly<double>(std::span<const double>(x1))));
  for (int i = 0; i < 3; ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-14));
}

TEST_CASE("forward-over-reverse Hessian block is exact for a quadratic") {
  const std::vector<double> x0 = {0.5, -1.0, 2.0};
  auto f = [](std::span<const ad::Var> x) {
    return 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[2] + square(x[2]);
  };
  const std::vector<std::size_t> blk = {0, 1, 2};
  const Eigen::MatrixXd h = ad::hessian_block(f, std::span<const double>(x0),
                                              std::span<const std::size_t>(blk));
  Eigen::Matrix3d want;
  want << 6, 2, 0, 2, 0, -1, 0, -1, 2;
  CHECK((h - want).cwiseAbs().maxCoeff() < 1e-12);
  const std::vector<std::size_t> sub = {2};
  const Eigen::MatrixXd h2 = ad::hessian_block(f, std::span<const double>(x0),
                                               std::span<const std::size_t>(sub));
  CHECK(h2.rows() == 1);
  CHECK(h2(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("non-finite values are reported") {
  const std::vector<double> x0 = {-1.0};
  CHECK_THROWS_AS(ad::gradient([](std::span<const ad::Var> x) { return log(x[0]); },
                               std::span<const double>(x0)),
                  Error);
}

TEST_CASE("tape gradient of the joint density matches finite differences") {
  const Dataset d = testing::small_data(11, 6, 15.0);
  const auto p = testing::full_params();
  const Eigen::VectorXd nat = to_natural(p);
  std::vector<double> x(nat.data(), nat.data() + nat.size());
  for (int i = 0; i < 6 * 3; ++i) x.push_back(0.1 * ((i % 5) - 2));
  auto fv = [&](std::span<const ad::Var> v) { return joint_nll_t<ad::Var>(v, p.structure, d); };
  const auto g = ad::gradient(fv, std::span<const double>(x));
  auto fd = [&](const Eigen::VectorXd& v) {
    return joint_nll_t<double>(std::span<const double>(v.data(), v.size()), p.structure, d);
  };
  const Eigen::VectorXd ref = fd_gradient(fd, Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
  CHECK(max_rel_error(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()), ref) < 1e-6);
}

}
