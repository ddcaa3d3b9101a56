#include <doctest.h>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/optimize/bfgs.hpp"
#include "fluctsel/optimize/mle.hpp"
#include "helpers.hpp"

using namespace fluctsel;

TEST_SUITE("optimize") {

TEST_CASE("bfgs minimizes the Rosenbrock function") {
  Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    if (g) {
      g->resize(2);
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::Vector2d(-1.2, 1.0));
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.iterations < 500);
}

TEST_CASE("bfgs stops on a quadratic in at most a few iterations per dimension") {
  Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    Eigen::VectorXd w(4);
    w << 1, 10, 100, 0.5;
    if (g) *g = (w.array() * x.array()).matrix();
    return 0.5 * (w.array() * x.array().square()).sum();
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::VectorXd::Ones(4));
  CHECK(r.converged);
  CHECK(r.grad.cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("bfgs reports exhausted iterations") {
  Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = -Eigen::VectorXd::Ones(1);
    return -x[0];
  };
  BfgsOptions o;
  o.max_iter = 5;
  CHECK_THROWS_AS(bfgs_minimize(f, Eigen::VectorXd::Zero(1), o), Error);
}

TEST_CASE("stability barrier vanishes away from the unit circle") {
  Eigen::Matrix3d phi = Eigen::Matrix3d::Zero();
  phi(1, 1) = 0.5;
  CHECK(stability_barrier(phi, 1e-6, 1e-3) == 0.0);
  phi(1, 1) = 0.9995;
  CHECK(stability_barrier(phi, 1e-6, 1e-3) > 0.0);
}

TEST_CASE("aic counts parameters") { CHECK(aic(5, 100.0) == 210.0); }

TEST_CASE("maximum likelihood recovers the simulating parameters") {
  SimDesign des;
  des.tmax = 30;
  des.mean_n = 80;
  des.seed = 3;
  const SimResult sim = simulate_dataset(des);
  const MleFit fit = fit_mle(sim.data, StructureMask::ar1_theta());
  CHECK(fit.converged);
  CHECK(fit.n_free == 5);
  CHECK(fit.se_error.empty());
  CHECK(fit.grad_max < 1e-3);
  CHECK(fit.aic == doctest::Approx(aic(5, fit.nll_at_opt)));
  const Eigen::VectorXd nat = to_natural(sim.truth);
  const Eigen::VectorXd est = to_natural(fit.estimates);
  REQUIRE(fit.std_errors.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(fit.std_errors[i] > 0.0);
    CHECK(std::abs(est[i] - nat[i]) < 4.0 * fit.std_errors[i]);
  }
}

TEST_CASE("default start uses data moments") {
  const Dataset d = testing::small_data(5, 10, 50.0);
  const ModelParams p = default_init(d, StructureMask::ar1_theta());
  double sx = 0, n = 0;
  for (const auto& y : d.years()) {
    sx += y.sum_x;
    n += static_cast<double>(y.x.size());
  }
  CHECK(p.mu[0] == doctest::Approx(std::log(sx / n)));
}

TEST_CASE("singular information is reported") {
  Eigen::Matrix2d m;
  m << 1, 1, 1, 1;
  CHECK_THROWS_AS(standard_errors(m), Error);
  CHECK(standard_errors(Eigen::Matrix2d::Identity() * 4.0)[0] == doctest::Approx(0.5));
}

}
