#include <random>

#include <benchmark/benchmark.h>

#include "fluctsel/core/observation.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"
#include "fluctsel/laplace/laplace.hpp"
#include "fluctsel/nuts/nuts.hpp"
#include "fluctsel/oracles/ghq.hpp"
#include "fluctsel/simulate/simulate.hpp"

using namespace fluctsel;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

const SimResult& sim(int tmax, double n) {
  static std::map<std::pair<int, double>, SimResult> cache;
  auto key = std::make_pair(tmax, n);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SimDesign d;
    d.tmax = tmax;
    d.mean_n = n;
    d.seed = 3;
    it = cache.emplace(key, simulate_dataset(d)).first;
  }
  return it->second;
}

void BM_EvaluateYears(benchmark::State& state) {
  const SimResult& s = sim(61, 81);
  PoissonObservation obs(s.data);
  Eigen::MatrixXd eta(61, 3);
  for (int t = 0; t < 61; ++t) eta.row(t) << 2.0, 20.0 + 0.1 * t, 3.5;
  std::vector<YearDerivs> out;
  for (auto _ : state) {
    evaluate_years(obs, eta, 3, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_EvaluateYears)->ArgName("parallel")->Arg(0)->Arg(1);

void BM_LaplaceMarginal(benchmark::State& state) {
  const SimResult& s = sim(50, 100);
  PoissonObservation obs(s.data);
  LaplaceOptions opt;
  opt.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(marginal(s.truth, obs, true, nullptr, opt).value);
}
BENCHMARK(BM_LaplaceMarginal)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Kde(benchmark::State& state) {
  std::mt19937_64 g(1);
  std::normal_distribution<double> n01;
  Eigen::VectorXd a(4000), b(4000);
  for (int i = 0; i < 4000; ++i) {
    a[i] = n01(g);
    b[i] = n01(g) + 0.3 * a[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(kde2d(a, b, 64, exec_of(state)).density.sum());
}
BENCHMARK(BM_Kde)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Ghq(benchmark::State& state) {
  const SimResult& s = sim(2, 5);
  PoissonObservation obs(s.data);
  for (auto _ : state) benchmark::DoNotOptimize(ghq_marginal(s.truth, obs, 41, exec_of(state)));
}
BENCHMARK(BM_Ghq)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

class StdNormal final : public LogDensity {
 public:
  std::size_t dim() const override { return 10; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) override {
    if (g) *g = -x;
    return -0.5 * x.squaredNorm();
  }
  std::unique_ptr<LogDensity> clone() const override { return std::make_unique<StdNormal>(); }
};

void BM_Chains(benchmark::State& state) {
  SamplerConfig cfg;
  cfg.warmup = 200;
  cfg.total_iters = 600;
  cfg.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample(StdNormal(), cfg).merged().sum());
}
BENCHMARK(BM_Chains)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Autocovariance(benchmark::State& state) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> n01;
  Eigen::VectorXd x(4000);
  for (auto& v : x) v = n01(g);
  for (auto _ : state) {
    if (state.range(0))
      benchmark::DoNotOptimize(autocovariance(x).sum());
    else
      benchmark::DoNotOptimize(autocovariance_reference(x).sum());
  }
}
BENCHMARK(BM_Autocovariance)->ArgName("fft")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
