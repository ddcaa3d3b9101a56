#include <doctest.h>

#include "fluctsel/core/error.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"
#include "fluctsel/nuts/nuts.hpp"

using namespace fluctsel;

namespace {

class Gaussian final : public LogDensity {
 public:
  explicit Gaussian(Eigen::VectorXd sd) : sd_(std::move(sd)) {}
  std::size_t dim() const override { return sd_.size(); }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) override {
    const Eigen::ArrayXd z = x.array() / sd_.array();
    if (g) *g = (-z / sd_.array()).matrix();
    return -0.5 * z.square().sum();
  }
  std::unique_ptr<LogDensity> clone() const override { return std::make_unique<Gaussian>(*this); }

 private:
  Eigen::VectorXd sd_;
};

SamplerConfig small_cfg() {
  SamplerConfig c;
  c.warmup = 300;
  c.total_iters = 900;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_SUITE("nuts") {

TEST_CASE("init jitter is reproducible and bounded") {
  const Eigen::VectorXd a = init_jitter(6, 3, 1, 0);
  const Eigen::VectorXd b = init_jitter(6, 3, 1, 0);
  CHECK(a == b);
  CHECK(a != init_jitter(6, 3, 2, 0));
  CHECK(a != init_jitter(6, 3, 1, 1));
  CHECK(a != init_jitter(6, 4, 1, 0));
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd j = init_jitter(4, 9, 0, i, 2.0);
    CHECK(j.cwiseAbs().maxCoeff() <= 2.0);
  }
}

TEST_CASE("default settings keep 1000 draws per chain") {
  SamplerConfig c;
  CHECK(c.chains == 4);
  CHECK(c.retained_per_chain() == 1000);
  CHECK(c.adapt_delta == 0.95);
  CHECK(c.max_treedepth == 10);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("invalid settings are rejected") {
  SamplerConfig c;
  c.warmup = 3000;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SamplerConfig{};
  c.adapt_delta = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SamplerConfig{};
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SamplerConfig{};
  c.chains = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("sampler recovers a scaled Gaussian") {
  Eigen::VectorXd sd(3);
  sd << 1.0, 10.0, 0.1;
  const PosteriorDraws p = sample(Gaussian(sd), small_cfg());
  REQUIRE(p.chains.size() == 4);
  const Eigen::MatrixXd m = p.merged();
  CHECK(m.rows() == 4 * 300);
  CHECK(p.total_divergences() == 0);
  for (int j = 0; j < 3; ++j) {
    const double mean = m.col(j).mean();
    const double var = (m.col(j).array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.2 * sd[j]);
    CHECK(var == doctest::Approx(sd[j] * sd[j]).epsilon(0.25));
  }
  for (const auto& c : p.chains) {
    CHECK(c.inv_metric[1] > c.inv_metric[0]);
    CHECK(c.step_size > 0.0);
    CHECK(c.treedepth.size() == 900u);
    CHECK(c.divergent.size() == 600u);
  }
}

TEST_CASE("chains are reproducible and independent of threading") {
  SamplerConfig c = small_cfg();
  c.total_iters = 500;
  c.warmup = 200;
  const Gaussian g(Eigen::VectorXd::Ones(2));
  const PosteriorDraws a = sample(g, c);
  c.parallel = false;
  const PosteriorDraws b = sample(g, c);
  CHECK(a.merged() == b.merged());
  c.seed = 18;
  CHECK(sample(g, c).merged() != b.merged());
}

TEST_CASE("initialization failure is reported") {
  class Nowhere final : public LogDensity {
   public:
    std::size_t dim() const override { return 2; }
    double log_density(const Eigen::VectorXd&, Eigen::VectorXd*) override {
      return -std::numeric_limits<double>::infinity();
    }
    std::unique_ptr<LogDensity> clone() const override { return std::make_unique<Nowhere>(); }
  };
  SamplerConfig c = small_cfg();
  c.chains = 1;
  Nowhere n;
  CHECK_THROWS_AS(sample_chain(n, c, 0), Error);
}

}
