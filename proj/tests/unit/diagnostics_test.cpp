#include <doctest.h>

#include <random>

#include "fluctsel/diagnostics/diagnostics.hpp"

using namespace fluctsel;

namespace {

std::vector<Eigen::VectorXd> ar1_chains(double rho, int n, int chains, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n01;
  std::vector<Eigen::VectorXd> out;
  const double s = std::sqrt(1.0 - rho * rho);
  for (int c = 0; c < chains; ++c) {
    Eigen::VectorXd x(n);
    x[0] = n01(g);
    for (int i = 1; i < n; ++i) x[i] = rho * x[i - 1] + s * n01(g);
    out.push_back(x);
  }
  return out;
}

Summary run_with(int divergences, int iterations) {
  Summary s;
  s.divergences = divergences;
  s.post_warmup_iterations = iterations;
  return s;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("divergence filter excludes at the threshold") {
  CHECK_FALSE(excluded_by_divergences(0, 8000));
  CHECK_FALSE(excluded_by_divergences(7, 8000));
  CHECK(excluded_by_divergences(8, 8000));
  CHECK(excluded_by_divergences(9, 8000));
  CHECK_FALSE(excluded_by_divergences(0, 1000));
  CHECK(excluded_by_divergences(1, 1000));
  CHECK_FALSE(excluded_by_divergences(1, 1001));
  CHECK(excluded_by_divergences(3, 3000));
  CHECK_FALSE(excluded_by_divergences(2, 3000));
  CHECK(excluded_by_divergences(5, 100, 0.05));
  CHECK_FALSE(excluded_by_divergences(4, 100, 0.05));
  const FilterResult r =
      divergence_filter({run_with(0, 8000), run_with(8, 8000), run_with(7, 8000), run_with(100, 8000)});
  CHECK(r.kept == std::vector<std::size_t>{0, 2});
  CHECK(r.excluded == std::vector<std::size_t>{1, 3});
}

TEST_CASE("effective sample size tracks the AR(1) formula") {
  for (double rho : {0.0, 0.5, 0.9}) {
    const auto ch = ar1_chains(rho, 20000, 4, 3);
    const double n = 80000.0;
    const double want = n * (1 - rho) / (1 + rho);
    CHECK_MESSAGE(std::abs(ess(ch) / want - 1.0) < 0.15, "rho " << rho);
    CHECK(split_rhat(ch) < 1.01);
  }
}

TEST_CASE("split rhat flags chains at different locations") {
  auto ch = ar1_chains(0.0, 1000, 4, 4);
  ch[0].array() += 3.0;
  CHECK(split_rhat(ch) > 1.1);
}

TEST_CASE("autocovariance matches the direct sum") {
  const auto ch = ar1_chains(0.6, 513, 1, 5);
  const Eigen::VectorXd a = autocovariance(ch[0]);
  const Eigen::VectorXd b = autocovariance_reference(ch[0]);
  REQUIRE(a.size() == b.size());
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("quantiles interpolate") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 0.0) == 1.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 1.0) == 5.0);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("kde grid integrates to one and parallel matches serial") {
  std::mt19937_64 g(7);
  std::normal_distribution<double> n01;
  Eigen::VectorXd a(2000), b(2000);
  for (int i = 0; i < 2000; ++i) {
    a[i] = n01(g);
    b[i] = 0.5 * a[i] + n01(g);
  }
  const KdeGrid p = kde2d(a, b, 64, Exec::Parallel);
  const KdeGrid s = kde2d(a, b, 64, Exec::Serial);
  const KdeGrid r = kde2d_reference(a, b, 64);
  CHECK(p.x.size() == 64);
  CHECK(p.density.rows() == 64);
  CHECK(p.density == s.density);
  CHECK((p.density - r.density).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.integral() == doctest::Approx(1.0).epsilon(0.02));
}

}
