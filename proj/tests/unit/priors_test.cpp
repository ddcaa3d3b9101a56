#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/oracles/checks.hpp"
#include "fluctsel/priors/priors.hpp"
#include "helpers.hpp"

using namespace fluctsel;

TEST_SUITE("priors") {

TEST_CASE("scale densities are normalized on their declared scale") {
  for (const auto& spec : {PriorSpec::prior1(), PriorSpec::prior2(), PriorSpec::invgamma()}) {
    const bool on_variance = spec.scale == ScalePrior::InvGamma;
    boost::math::quadrature::tanh_sinh<double> q;
    const double total = q.integrate(
        [&](double v) {
          if (!(v > 0)) return 0.0;
          return std::exp(log_scale_density(spec, on_variance ? std::sqrt(v) : v));
        },
        0.0, std::numeric_limits<double>::infinity());
    CHECK_MESSAGE(total == doctest::Approx(1.0).epsilon(1e-6), spec.name);
  }
}

TEST_CASE("log-sigma density is the sigma density times the Jacobian") {
  for (const auto& spec : {PriorSpec::prior1(), PriorSpec::prior2(), PriorSpec::invgamma()}) {
    for (double l : {-1.0, 0.5, 2.0, 3.5}) {
      CHECK(log_sigma_density(spec, l) ==
            doctest::Approx(log_scale_density(spec, std::exp(l)) + jacobian_adjustment(spec, l)));
      double dl = 0.0;
      log_sigma_density(spec, l, &dl);
      const double h = 1e-6;
      const double fd = (log_sigma_density(spec, l + h) - log_sigma_density(spec, l - h)) / (2 * h);
      CHECK(dl == doctest::Approx(fd).epsilon(1e-6));
    }
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    const double total =
        gk.integrate([&](double l) { return std::exp(log_sigma_density(spec, l)); }, -30.0, 30.0, 15);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("truncated normal on phi is normalized") {
  const auto spec = PriorSpec::prior2();
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double total =
      gk.integrate([&](double v) { return std::exp(log_phi_density(spec, v)); }, -1.0, 1.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(log_phi_density(spec, 1.0), Error);
}

TEST_CASE("flat prior leaves the negative joint density") {
  const Dataset d = testing::small_data(1, 6, 20.0);
  const auto p = testing::ar1_params();
  LatentStates u;
  u.states = Eigen::MatrixXd::Zero(6, 3);
  for (int t = 0; t < 6; ++t) u.states(t, 1) = 0.3 * t - 1.0;
  const PriorSpec flat = PriorSpec::flat_spec();
  CHECK(log_prior(p, flat) == 0.0);
  CHECK(log_posterior(p, u, d, flat, false) ==
        doctest::Approx(-joint_neg_log_density(p, u, d)).epsilon(1e-12));
  CHECK(log_posterior(p, u, d, flat, true) == doctest::Approx(-marginal_nll(p, d)).epsilon(1e-12));
}

TEST_CASE("prior names") {
  CHECK(PriorSpec::by_name("prior1").scale == ScalePrior::HalfCauchy);
  CHECK(PriorSpec::by_name("prior2").scale == ScalePrior::LogNormal);
  CHECK(PriorSpec::by_name("invgamma").scale == ScalePrior::InvGamma);
  CHECK_THROWS_AS(PriorSpec::by_name("uniform"), Error);
}

TEST_CASE("sign error in the Jacobian is caught") {
  const auto spec = PriorSpec::prior2();
  CHECK(jacobian_check(spec, 20000, 5).ks < 0.02);
  CHECK(jacobian_check(spec, 20000, 5, -1).ks > 0.1);
}

TEST_CASE("posterior target gradients match finite differences") {
  static const Dataset d = testing::small_data(9, 8, 25.0);
  auto obs = std::make_shared<PoissonObservation>(d);
  for (LatentMode mode : {LatentMode::Laplace, LatentMode::Full}) {
    PosteriorTarget tgt(obs, StructureMask::ar1_theta(), PriorSpec::prior2(), mode);
    const Eigen::VectorXd x = tgt.pack(testing::ar1_params(0.3, 15.0));
    CHECK(x.size() == static_cast<Eigen::Index>(tgt.dim()));
    Eigen::VectorXd g;
    const double v = tgt.log_density(x, &g);
    CHECK(std::isfinite(v));
    auto f = [&](const Eigen::VectorXd& y) { return tgt.log_density(y, nullptr); };
    CHECK(max_rel_error(g, fd_gradient(f, x)) < 1e-5);
    CHECK(tgt.names().size() == tgt.report(x).size());
  }
}

TEST_CASE("posterior target returns -inf outside the support") {
  static const Dataset d = testing::small_data(9, 4, 10.0);
  auto obs = std::make_shared<PoissonObservation>(d);
  PosteriorTarget tgt(obs, StructureMask::ar1_theta(), PriorSpec::prior1(), LatentMode::Laplace);
  Eigen::VectorXd x = tgt.pack(testing::ar1_params());
  x[3] = 50.0;
  CHECK(tgt.log_density(x, nullptr) == -std::numeric_limits<double>::infinity());
}

}
