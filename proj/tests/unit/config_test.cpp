#include <doctest.h>

#include <sstream>

#include "fluctsel/core/error.hpp"
#include "fluctsel/experiments/config.hpp"
#include "fluctsel/experiments/experiments.hpp"
#include "fluctsel/io/io.hpp"

using namespace fluctsel;

namespace {

std::string config_error(const IniMap& m, const Overrides& ov = {}) {
  try {
    make_config(m, ov);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const ExperimentConfig c = make_config({});
  CHECK(c.seed == 1);
  CHECK(c.sampler.chains == 4);
  CHECK(c.sampler.warmup == 1000);
  CHECK(c.sampler.total_iters == 3000);
  CHECK(c.sampler.thin == 2);
  CHECK(c.design.tmax == 50);
  CHECK(c.divergence_threshold == 0.001);
  CHECK(c.models.size() == 11u);
}

TEST_CASE("default text parses back to the defaults") {
  std::istringstream in(default_config_text());
  const ExperimentConfig c = make_config(read_ini(in));
  CHECK(c.to_json() == make_config({}).to_json());
}

TEST_CASE("unknown keys and bad values are all reported") {
  const std::string e = config_error({{"design.tmax", "1"}, {"run.bogus", "3"}, {"sampler.thin", "x"}});
  CHECK(e.find("run.bogus") != std::string::npos);
  CHECK(e.find("design.tmax") != std::string::npos);
  CHECK(e.find("sampler.thin") != std::string::npos);
  CHECK(config_error({{"run.priors", "prior3"}}).find("prior3") != std::string::npos);
  CHECK(config_error({{"design.phi_theta", "1.0"}}) != "");
  CHECK(config_error({{"sampler.warmup", "5000"}}) != "");
  CHECK(config_error({{"select.models", "0,3"}}) != "");
  CHECK(config_error({{"study.divergence_threshold", "0"}}) != "");
  CHECK(config_error({}, Overrides{.laplace = "maybe"}) != "");
}

TEST_CASE("command-line overrides win over the file") {
  Overrides ov;
  ov.seed = 99;
  ov.prior = "invgamma";
  ov.laplace = "off";
  ov.workers = 3;
  const ExperimentConfig c = make_config({{"run.seed", "5"}, {"run.priors", "prior1"}}, ov);
  CHECK(c.seed == 99);
  CHECK(c.sampler.seed == 99);
  CHECK(c.design.seed == 99);
  CHECK(c.priors == std::vector<std::string>{"invgamma"});
  CHECK(c.techniques == std::vector<Technique>{Technique::Full});
  CHECK(c.workers == 3);
  CHECK(make_config({{"run.laplace", "both"}}).techniques.size() == 2u);
}

TEST_CASE("derived seeds are distinct per purpose and index") {
  CHECK(seeds::data(1, 0) != seeds::data(1, 1));
  CHECK(seeds::data(1, 0) != seeds::data(2, 0));
  CHECK(seeds::chains(1, 0, 0) != seeds::chains(1, 0, 1));
  CHECK(seeds::data(1, 0, 0) != seeds::data(1, 1, 0));
}

}
