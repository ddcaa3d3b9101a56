#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fluctsel/core/params.hpp"
#include "fluctsel/diagnostics/diagnostics.hpp"
#include "fluctsel/experiments/experiments.hpp"
#include "fluctsel/nuts/nuts.hpp"
#include "fluctsel/optimize/mle.hpp"
#include "fluctsel/oracles/verify.hpp"
#include "fluctsel/selection/selection.hpp"
#include "fluctsel/simulate/simulate.hpp"

using namespace fluctsel;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string measured;
};

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

Outcome from_check(const CheckResult& r, double budget) {
  const bool in_time = budget <= 0 || r.seconds < budget;
  std::string m = r.detail + "; measured " + fmt(r.measured) + " vs " + fmt(r.threshold) + "; " +
                  fmt(r.seconds) + " s";
  if (budget > 0) m += " (budget " + fmt(budget) + " s)";
  return {r.passed && in_time, m};
}

Outcome stationarity() { return from_check(check_stationarity(100, kSeed), 1.0); }

Outcome ad_gradient() { return from_check(check_ad_vs_fd(20, 25, 50, kSeed), 10.0); }

Outcome laplace_kalman() { return from_check(check_laplace_vs_kalman(50, 25, kSeed), 30.0); }

Outcome laplace_ghq() { return from_check(check_laplace_vs_ghq(5, 2, 5, 21, kSeed), 30.0); }

Outcome sampler() { return from_check(check_sampler(kSeed), 60.0); }

Outcome jacobian() {
  Outcome out{true, ""};
  for (const auto& p : {PriorSpec::prior1(), PriorSpec::prior2(), PriorSpec::invgamma()}) {
    const CheckResult r = check_jacobian(p, 100000, kSeed);
    out.pass = out.pass && r.passed;
    out.measured += p.name + " KS=" + fmt(r.measured) + " ";
  }
  out.measured += "(threshold 0.02, 1e5 draws each)";
  return out;
}

Outcome mle_recovery() {
  const auto t0 = Clock::now();
  constexpr int reps = 20;
  std::vector<int> hits(5, 0);
  int failed = 0;
  double phi_sum = 0, phi_se = 0, ls_sum = 0, ls_se = 0;
  int ok_fits = 0;
  for (int r = 0; r < reps; ++r) {
    SimDesign d;
    d.tmax = 50;
    d.mean_n = 100;
    d.phi_theta = 0.4;
    d.sigma_theta = 20;
    d.seed = seeds::data(kSeed, static_cast<std::uint64_t>(r));
    const SimResult sim = simulate_dataset(d);
    try {
      const MleFit fit = fit_mle(sim.data, StructureMask::ar1_theta());
      if (!fit.converged || fit.std_errors.size() != 5) {
        ++failed;
        continue;
      }
      const Eigen::VectorXd est = to_natural(fit.estimates);
      const Eigen::VectorXd truth = to_natural(sim.truth);
      for (int i = 0; i < 5; ++i)
        if (std::abs(est[i] - truth[i]) <= 3.0 * fit.std_errors[i]) ++hits[i];
      phi_sum += est[3];
      phi_se += fit.std_errors[3];
      ls_sum += est[4];
      ls_se += fit.std_errors[4];
      ++ok_fits;
    } catch (const std::exception&) {
      ++failed;
    }
  }
  const double secs = since(t0);
  bool pass = secs <= 900.0;
  std::string m = "within 3 SE of truth (mu_a, mu_t, mu_w, phi_tt, log sigma_t): ";
  for (int i = 0; i < 5; ++i) {
    pass = pass && hits[i] >= 18;
    m += std::to_string(hits[i]) + (i < 4 ? "/" : "");
  }
  m += " of 20 (need >= 18 each)";
  if (failed) m += ", " + std::to_string(failed) + " fits failed";
  if (ok_fits > 0) {
    m += "; mean phi=" + fmt(phi_sum / ok_fits) + "(" + fmt(phi_se / ok_fits, 2) + ")";
    m += " log sigma=" + fmt(ls_sum / ok_fits) + "(" + fmt(ls_se / ok_fits, 2) + ")";
  }
  m += "; reference 0.41(0.13), 2.89(0.12); " + fmt(secs) + " s (budget 900 s)";
  return {pass, m};
}

Outcome laplace_overlap() {
  const auto t0 = Clock::now();
  SimDesign d;
  d.tmax = 25;
  d.mean_n = 50;
  d.seed = seeds::data(kSeed, 0);
  const SimResult sim = simulate_dataset(d);
  const PriorSpec spec = PriorSpec::prior2();
  SamplerConfig cfg;
  cfg.seed = seeds::chains(kSeed, 0, 0);
  const Summary la = summarize(run_posterior(sim.data, StructureMask::ar1_theta(), spec,
                                             Technique::Laplace, cfg));
  cfg.seed = seeds::chains(kSeed, 0, 1);
  const Summary full = summarize(run_posterior(sim.data, StructureMask::ar1_theta(), spec,
                                               Technique::Full, cfg));
  const double diff = max_std_mean_diff(la, full);
  const double secs = since(t0);
  std::string m = "max |mean difference| / posterior sd = " + fmt(diff) + " (threshold 0.1); ";
  m += "divergences laplace=" + std::to_string(la.divergences) +
       " full=" + std::to_string(full.divergences) + "; " + fmt(secs) + " s (budget 600 s)";
  return {diff < 0.1 && secs <= 600.0, m};
}

Outcome divergence_filter_rule() {
  struct Case {
    int div, iters;
    bool excluded;
  };
  const std::vector<Case> cases = {{0, 8000, false}, {7, 8000, false}, {8, 8000, true},
                                   {9, 8000, true},  {1, 1000, true},  {1, 1001, false},
                                   {2, 3000, false}, {3, 3000, true},  {0, 1000, false}};
  int ok = 0;
  for (const auto& c : cases) ok += excluded_by_divergences(c.div, c.iters) == c.excluded;
  std::vector<Summary> runs(3);
  runs[0].post_warmup_iterations = runs[1].post_warmup_iterations = runs[2].post_warmup_iterations = 8000;
  runs[1].divergences = 8;
  runs[2].divergences = 7;
  const FilterResult f = divergence_filter(runs);
  const bool filter_ok = f.kept == std::vector<std::size_t>{0, 2} &&
                         f.excluded == std::vector<std::size_t>{1};
  return {ok == static_cast<int>(cases.size()) && filter_ok,
          std::to_string(ok) + "/" + std::to_string(cases.size()) +
              " boundary cases (8/8000 excluded, 7/8000 kept); run filter " +
              (filter_ok ? "ok" : "wrong")};
}

Outcome ess_ar1() {
  std::mt19937_64 g(kSeed);
  std::normal_distribution<double> n01;
  constexpr int n = 20000, chains = 4;
  bool pass = true;
  std::string m;
  for (double rho : {0.0, 0.5, 0.9}) {
    std::vector<Eigen::VectorXd> ch;
    const double s = std::sqrt(1 - rho * rho);
    for (int c = 0; c < chains; ++c) {
      Eigen::VectorXd x(n);
      x[0] = n01(g);
      for (int i = 1; i < n; ++i) x[i] = rho * x[i - 1] + s * n01(g);
      ch.push_back(x);
    }
    const double want = chains * n * (1 - rho) / (1 + rho);
    const double rel = std::abs(ess(ch) / want - 1.0);
    pass = pass && rel < 0.15;
    m += "rho=" + fmt(rho, 2) + " rel.err=" + fmt(rel) + " ";
  }
  return {pass, m + "(threshold 0.15, 4 x 20000 draws)"};
}

Outcome model_selection() {
  const auto t0 = Clock::now();
  constexpr int reps = 20;
  const std::vector<int> ids = {2, 3, 7, 10, 11};
  int picks = 0, failed = 0;
  std::vector<int> winners(kNumCandidates + 1, 0);
  for (int r = 0; r < reps; ++r) {
    const SimResult sim = simulate_standin(seeds::data(kSeed, 1, static_cast<std::uint64_t>(r)));
    try {
      const LadderReport rep = rank_by_aic(fit_ladder(sim.data, ids));
      ++winners[rep.best_id()];
      picks += rep.best_id() == kSelectedCandidate;
    } catch (const std::exception&) {
      ++failed;
    }
  }
  const double secs = since(t0);
  std::string m = "model 7 selected in " + std::to_string(picks) + "/20 (need >= 16); winners:";
  for (int id : ids) m += " m" + std::to_string(id) + "=" + std::to_string(winners[id]);
  if (failed) m += ", " + std::to_string(failed) + " ladders failed";
  m += "; " + fmt(secs) + " s (budget 900 s)";
  return {picks >= 16 && secs <= 900.0, m};
}

class StdNormal final : public LogDensity {
 public:
  std::size_t dim() const override { return 2; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) override {
    if (g) *g = -x;
    return -0.5 * x.squaredNorm();
  }
  std::unique_ptr<LogDensity> clone() const override { return std::make_unique<StdNormal>(); }
};

Outcome bookkeeping() {
  const ExperimentConfig c = make_config({});
  const PosteriorDraws d = sample(StdNormal(), c.sampler);
  bool pass = d.chains.size() == 4;
  std::string per;
  for (const auto& ch : d.chains) {
    pass = pass && ch.draws.rows() == 1000;
    per += std::to_string(ch.draws.rows()) + " ";
  }
  const auto merged = d.merged().rows();
  pass = pass && merged == 4000 && c.sampler.retained_per_chain() == 1000;
  return {pass, "retained per chain: " + per + "merged: " + std::to_string(merged)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"stationarity identity", stationarity},
      {"AD gradient vs finite differences", ad_gradient},
      {"Laplace exact on linear-Gaussian models", laplace_kalman},
      {"Laplace vs 21-node adaptive Gauss-Hermite", laplace_ghq},
      {"NUTS calibration", sampler},
      {"Jacobian change of variables", jacobian},
      {"MLE recovery", mle_recovery},
      {"full vs Laplace posterior overlap", laplace_overlap},
      {"divergence filter rule", divergence_filter_rule},
      {"ESS on AR(1) chains", ess_ar1},
      {"AIC model-selection recovery", model_selection},
      {"retained-draw bookkeeping", bookkeeping},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) which.push_back(i);
  int failures = 0;
  for (int k : which) {
    if (k < 1 || k > static_cast<int>(all.size())) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    Outcome o;
    try {
      o = all[k - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d. %s: %s\n", o.pass ? "PASS" : "FAIL", k, all[k - 1].name, o.measured.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
