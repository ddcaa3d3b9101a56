#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/joint.hpp"
#include "fluctsel/core/model.hpp"
#include "fluctsel/core/observation.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/core/rng.hpp"
#include "helpers.hpp"

using namespace fluctsel;

TEST_SUITE("core") {

TEST_CASE("structure mask counts free parameters") {
  CHECK(StructureMask::ar1_theta().n_free() == 5);
  CHECK(StructureMask::ar1_theta().num_active() == 1);
  StructureMask s;
  s.phi_free[0][1] = true;
  s.rho_free = {true, true, true};
  CHECK(s.n_free() == 3 + 1 + 3 + 3);
  StructureMask bad = StructureMask::ar1_theta();
  bad.phi_free[0][0] = true;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stationary covariance satisfies its own recursion") {
  Eigen::Matrix3d phi;
  phi << 0.5, 0.1, 0.0, -0.2, 0.3, 0.05, 0.0, 0.1, -0.4;
  const Eigen::Matrix3d g0 = stationary_corr(Eigen::Vector3d(0.3, -0.1, 0.2));
  const Eigen::Matrix3d sw = innovation_cov(phi, g0);
  CHECK((g0 - (phi * g0 * phi.transpose() + sw)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g0.diagonal().isApproxToConstant(1.0));
}

TEST_CASE("parameter checks reject unstable and non-definite settings") {
  auto p = testing::ar1_params(0.4);
  CHECK_NOTHROW(check_params(p));
  p.phi(1, 1) = 1.0;
  try {
    check_params(p);
    FAIL("expected Unstable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Unstable);
  }
  auto q = testing::full_params();
  q.structure.rho_free = {true, true, true};
  q.rho = Eigen::Vector3d(0.95, 0.95, -0.95);
  try {
    check_params(q);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotPositiveDefinite);
  }
  CHECK(spectral_radius(Eigen::Matrix3d::Identity() * 0.7) == doctest::Approx(0.7));
}

TEST_CASE("dataset rejects non-increasing years and empty years") {
  Dataset d;
  d.add_year(3, {1.0, 2.0}, {0, 1});
  CHECK_THROWS_AS(d.add_year(3, {1.0}, {1}), Error);
  CHECK_THROWS_AS(d.add_year(4, {}, {}), Error);
  CHECK_THROWS_AS(d.add_year(5, {1.0}, {1, 2}), Error);
}

TEST_CASE("dataset statistics do not depend on row order") {
  std::vector<Brood> b = {{1, 10.0, 3}, {1, -5.0, 0}, {1, 2.5, 7}, {2, 4.0, 1}, {2, 9.0, 2}};
  const Dataset a = Dataset::from_broods(b);
  std::reverse(b.begin(), b.end());
  const Dataset c = Dataset::from_broods(b);
  REQUIRE(a.num_years() == 2);
  CHECK(a.num_obs() == 5);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(a.year(t).z == c.year(t).z);
    CHECK(a.year(t).x == c.year(t).x);
    CHECK(a.year(t).sum_xzz == c.year(t).sum_xzz);
  }
  const auto back = a.to_broods();
  CHECK(Dataset::from_broods(back).year(0).z == a.year(0).z);
}

TEST_CASE("poisson observation density sums to one over counts") {
  const Eigen::Vector3d eta(1.2, 3.0, 2.0);
  const double z = 5.0;
  double total = 0.0;
  for (int x = 0; x < 200; ++x) {
    Dataset d;
    d.add_year(1, {z}, {x});
    YearDerivs yd;
    poisson_year(d.year(0), eta, 0, yd);
    total += std::exp(-yd.value);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log_fitness(eta, z) == doctest::Approx(1.2 - 0.5 * 4.0 * std::exp(-4.0)));
}

TEST_CASE("closed-form year derivatives match the per-observation reference") {
  const Dataset d = testing::small_data(3, 2, 40.0);
  const Eigen::Vector3d eta(1.8, 15.0, 3.2);
  YearDerivs a, b;
  poisson_year(d.year(0), eta, 3, a);
  poisson_year_reference(d.year(0), eta, 3, b);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  CHECK((a.grad - b.grad).cwiseAbs().maxCoeff() < 1e-9 * (1 + b.grad.cwiseAbs().maxCoeff()));
  CHECK((a.hess - b.hess).cwiseAbs().maxCoeff() < 1e-9 * (1 + b.hess.cwiseAbs().maxCoeff()));
  for (int k = 0; k < 3; ++k)
    CHECK((a.third[k] - b.third[k]).cwiseAbs().maxCoeff() <
          1e-9 * (1 + b.third[k].cwiseAbs().maxCoeff()));
}

TEST_CASE("year derivatives match finite differences") {
  const Dataset d = testing::small_data(4, 1, 25.0);
  const Eigen::Vector3d eta(1.5, 18.0, 3.0);
  YearDerivs yd;
  poisson_year(d.year(0), eta, 2, yd);
  auto f = [&](const Eigen::VectorXd& e) {
    YearDerivs o;
    poisson_year(d.year(0), Eigen::Vector3d(e), 0, o);
    return o.value;
  };
  const Eigen::VectorXd g = testing::central_diff(f, eta, 1e-6);
  CHECK((g - yd.grad).cwiseAbs().maxCoeff() < 1e-4 * (1 + g.cwiseAbs().maxCoeff()));
}

TEST_CASE("serial and parallel year evaluation agree exactly") {
  const Dataset d = testing::small_data(5, 12, 30.0);
  PoissonObservation obs(d);
  Eigen::MatrixXd eta(12, 3);
  for (int t = 0; t < 12; ++t) eta.row(t) << 2.0, 20.0 + t, 3.5;
  std::vector<YearDerivs> a, b;
  evaluate_years(obs, eta, 2, a, Exec::Serial);
  evaluate_years(obs, eta, 2, b, Exec::Parallel);
  for (int t = 0; t < 12; ++t) {
    CHECK(a[t].value == b[t].value);
    CHECK(a[t].grad == b[t].grad);
  }
}

TEST_CASE("joint density matches its generic template") {
  const Dataset d = testing::small_data(6, 8, 20.0);
  const auto p = testing::full_params();
  LatentStates u;
  u.states = Eigen::MatrixXd::Zero(8, 3);
  std::mt19937_64 g(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 8; ++t)
    for (int k = 0; k < 3; ++k) u.states(t, k) = n01(g);
  const double a = joint_neg_log_density(p, u, d);
  std::vector<double> x;
  const Eigen::VectorXd nat = to_natural(p);
  x.assign(nat.data(), nat.data() + nat.size());
  for (int t = 0; t < 8; ++t)
    for (int k = 0; k < 3; ++k) x.push_back(u.states(t, k));
  const double b = joint_nll_t<double>(std::span<const double>(x), p.structure, d);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("natural and unconstrained coordinates round-trip") {
  const auto p = testing::full_params();
  for (Transform t : {Transform::Natural, Transform::Mle, Transform::Sampling}) {
    const Eigen::VectorXd x = to_unconstrained(p, t);
    const ModelParams q = from_unconstrained(x, p.structure, t);
    CHECK((to_natural(q) - to_natural(p)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd dd = dnatural_dx(x, p.structure, t);
    auto nat_i = [&](int i) {
      return [&, i](const Eigen::VectorXd& y) {
        return natural_from_unconstrained(y, p.structure, t)[i];
      };
    };
    for (int i = 0; i < x.size(); ++i) {
      const Eigen::VectorXd g = testing::central_diff(nat_i(i), x, 1e-6);
      CHECK(g[i] == doctest::Approx(dd[i]).epsilon(1e-6));
    }
    CHECK(log_abs_jacobian(x, p.structure, t) ==
          doctest::Approx(dd.array().abs().log().sum()));
  }
  CHECK(coordinate_names(StructureMask::ar1_theta()).size() == 5);
}

TEST_CASE("counter generator is reproducible and positionable") {
  CounterRng a(42, {1, 2}), b(42, {1, 2}), c(42, {1, 3});
  std::vector<std::uint64_t> va(5), vb(5), vc(5);
  for (int i = 0; i < 5; ++i) {
    va[i] = a();
    vb[i] = b();
    vc[i] = c();
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(a.counter() == 5);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
  CHECK(stream_key(1, {2}) != stream_key(2, {1}));
}

TEST_CASE("error codes carry their names") {
  try {
    fail(Errc::ParseError, "boom");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("ParseError") != std::string::npos);
  }
}

}
