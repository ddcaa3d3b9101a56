#include "fluctsel/experiments/experiments.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <sstream>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/params.hpp"
#include "fluctsel/core/rng.hpp"
#include "fluctsel/io/io.hpp"
#include "fluctsel/optimize/mle.hpp"
#include "fluctsel/oracles/verify.hpp"
#include "fluctsel/selection/selection.hpp"
#include "fluctsel/simulate/simulate.hpp"

namespace fluctsel {

namespace seeds {
std::uint64_t data(std::uint64_t master, std::uint64_t replicate) {
  return stream_key(master, {kData, replicate});
}
std::uint64_t data(std::uint64_t master, std::uint64_t setting, std::uint64_t replicate) {
  return stream_key(master, {kData, kSetting, setting, replicate});
}
std::uint64_t chains(std::uint64_t master, std::uint64_t replicate, std::uint64_t run) {
  return stream_key(master, {kChains, replicate, run});
}
}  // namespace seeds

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "" : (v > 0 ? "inf" : "-inf");
  std::ostringstream o;
  o << std::setprecision(8) << v;
  return o.str();
}

struct Run {
  std::string prior;
  Technique tech;
  std::string label;
};

std::vector<Run> bayes_runs(const ExperimentConfig& c) {
  std::vector<Run> out;
  for (const auto& p : c.priors)
    for (auto t : c.techniques) {
      std::string label = p;
      if (c.techniques.size() > 1 || t == Technique::Full) label += std::string("_") + technique_name(t);
      out.push_back({p, t, label});
    }
  return out;
}

/// Stable index of a (prior, technique) pair for seed derivation.
std::uint64_t run_index(const std::string& prior, Technique t) {
  const std::uint64_t p = prior == "prior1" ? 0 : prior == "prior2" ? 1 : 2;
  return 2 * p + (t == Technique::Full ? 1 : 0);
}

SimDesign design_for(const ExperimentConfig& c, std::uint64_t seed) {
  SimDesign d = c.design;
  d.seed = seed;
  return d;
}

std::map<std::string, double> by_name(const std::vector<std::string>& names, const Eigen::VectorXd& v) {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < names.size(); ++i) m[names[i]] = v[static_cast<Eigen::Index>(i)];
  return m;
}

nlohmann::json base_manifest(const std::string& name, const ExperimentConfig& c) {
  nlohmann::json j;
  j["command"] = name;
  j["build"] = build_info();
  j["config"] = c.to_json();
  j["seed_policy"] =
      "stream_key(master, {purpose, indices}); data 0xda7a, chains 0xc4a1, settings 0x5e77, export 0xe4e0";
  return j;
}

void rethrow_first(const std::vector<std::exception_ptr>& errs) {
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

PosteriorDraws run_posterior(const Dataset& d, const StructureMask& s, const PriorSpec& spec,
                             Technique tech, SamplerConfig cfg) {
  auto obs = std::make_shared<PoissonObservation>(d);
  PosteriorTarget target(obs, s, spec, tech == Technique::Laplace ? LatentMode::Laplace : LatentMode::Full);
  if (!cfg.init_center) cfg.init_center = target.pack(default_init(d, s));
  return sample(target, cfg);
}

double max_std_mean_diff(const Summary& a, const Summary& b) {
  if (a.params.size() != b.params.size()) fail(Errc::NameMismatch, "summaries differ in size");
  double worst = 0.0;
  for (std::size_t j = 0; j < a.params.size(); ++j) {
    if (a.params[j].name != b.params[j].name) fail(Errc::NameMismatch, "summaries differ in names");
    const double sd = std::sqrt(0.5 * (a.params[j].sd * a.params[j].sd + b.params[j].sd * b.params[j].sd));
    const double diff = std::abs(a.params[j].mean - b.params[j].mean);
    worst = std::max(worst, sd > 0.0 ? diff / sd : (diff > 0.0 ? INFINITY : 0.0));
  }
  return worst;
}

CommandResult cmd_simulate(const ExperimentConfig& c) {
  CommandResult r;
  const std::uint64_t seed = seeds::data(c.seed, 0);
  const SimDesign d = design_for(c, seed);
  const SimResult sim = simulate_dataset(d);
  const auto broods = c.out / "broods.csv";
  const auto latents = c.out / "latents.csv";
  write_broods_csv(broods, sim.data);
  write_latents_csv(latents, sim.data, sim.latents);
  r.outputs = {broods.string(), latents.string()};
  r.manifest["data_seed"] = seed;
  r.manifest["selection_strength"] = selection_strength(d);
  r.manifest["years"] = sim.data.num_years();
  r.manifest["observations"] = sim.data.num_obs();
  const auto names = coordinate_names(sim.truth.structure);
  const Eigen::VectorXd truth = to_natural(sim.truth);
  for (std::size_t i = 0; i < names.size(); ++i) r.manifest["truth"][names[i]] = truth[i];
  std::ostringstream o;
  o << "years," << sim.data.num_years() << "\nobservations," << sim.data.num_obs()
    << "\nselection_strength," << num(selection_strength(d)) << "\n";
  r.report = o.str();
  return r;
}

CommandResult cmd_compare(const ExperimentConfig& c) {
  CommandResult r;
  const StructureMask s = StructureMask::ar1_theta();
  Dataset data;
  std::optional<Eigen::VectorXd> truth;
  if (!c.data.empty()) {
    data = read_dataset_csv(c.data);
    r.manifest["data"] = c.data.string();
  } else {
    const std::uint64_t seed = seeds::data(c.seed, 0);
    const SimResult sim = simulate_dataset(design_for(c, seed));
    data = sim.data;
    truth = to_natural(sim.truth);
    r.manifest["data_seed"] = seed;
  }
  const auto names = coordinate_names(s);
  const MleFit fit = fit_mle(data, s);
  const Eigen::VectorXd mle = to_natural(fit.estimates);

  const auto runs = bayes_runs(c);
  std::vector<Summary> sums(runs.size());
  std::vector<std::exception_ptr> errs(runs.size());
  const int n = static_cast<int>(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      SamplerConfig cfg = c.sampler;
      cfg.seed = seeds::chains(c.seed, 0, run_index(runs[i].prior, runs[i].tech));
      sums[i] = summarize(run_posterior(data, s, PriorSpec::by_name(runs[i].prior), runs[i].tech, cfg));
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  rethrow_first(errs);

  std::ostringstream o;
  o << "parameter,true,mle,mle_se";
  for (const auto& run : runs) o << ',' << run.label << "_mean," << run.label << "_sd";
  o << "\ndivergences,,,";
  for (const auto& sm : sums) o << ',' << sm.divergences << ',';
  o << '\n';
  for (std::size_t j = 0; j < names.size(); ++j) {
    o << names[j] << ',' << (truth ? num((*truth)[j]) : "") << ',' << num(mle[j]) << ','
      << num(fit.std_errors[j]);
    for (const auto& sm : sums) o << ',' << num(sm.params[j].mean) << ',' << num(sm.params[j].sd);
    o << '\n';
  }
  const auto table = c.out / "compare.csv";
  write_text(table, o.str());

  std::ostringstream rs;
  rs << "run,prior,technique,divergences,post_warmup_iterations,min_ess,wall_seconds,efficiency,max_rhat\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    double rh = 0.0;
    for (const auto& p : sums[i].params)
      if (std::isfinite(p.rhat)) rh = std::max(rh, p.rhat);
    rs << runs[i].label << ',' << runs[i].prior << ',' << technique_name(runs[i].tech) << ','
       << sums[i].divergences << ',' << sums[i].post_warmup_iterations << ',' << num(sums[i].min_ess)
       << ',' << num(sums[i].wall_seconds) << ',' << num(sums[i].efficiency) << ',' << num(rh) << '\n';
  }
  const auto runs_csv = c.out / "compare_runs.csv";
  write_text(runs_csv, rs.str());
  r.outputs = {table.string(), runs_csv.string()};
  r.manifest["mle_converged"] = fit.converged;
  r.manifest["mle_nll"] = fit.nll_at_opt;
  r.report = o.str();
  return r;
}

CommandResult cmd_bias_study(const ExperimentConfig& c) {
  CommandResult r;
  const StructureMask s = StructureMask::ar1_theta();
  const auto names = coordinate_names(s);
  const auto runs = bayes_runs(c);
  const int R = c.replicates;
  const Eigen::VectorXd truth = to_natural(c.design.truth());

  struct Rep {
    Eigen::VectorXd mle;
    std::string mle_error;
    std::vector<Summary> sums;
  };
  std::vector<Rep> reps(R);
  std::vector<std::exception_ptr> errs(R);
#pragma omp parallel for schedule(dynamic, 1)
  for (int rep = 0; rep < R; ++rep) {
    try {
      const SimResult sim = simulate_dataset(design_for(c, seeds::data(c.seed, rep)));
      Rep& out = reps[rep];
      try {
        out.mle = to_natural(fit_mle(sim.data, s).estimates);
      } catch (const Error& e) {
        out.mle_error = e.what();
      }
      for (const auto& run : runs) {
        SamplerConfig cfg = c.sampler;
        cfg.seed = seeds::chains(c.seed, rep, run_index(run.prior, run.tech));
        out.sums.push_back(summarize(run_posterior(sim.data, s, PriorSpec::by_name(run.prior), run.tech, cfg)));
      }
    } catch (...) {
      errs[rep] = std::current_exception();
    }
  }
  rethrow_first(errs);

  const std::vector<std::string> focus{"phi_theta_theta", "log_sigma_theta"};
  std::ostringstream ledger, bias;
  ledger << "replicate,run,divergences,iterations,fraction,excluded\n";
  bias << "replicate,method,parameter,estimate,truth,abs_error\n";
  int kept = 0;
  std::map<std::string, std::pair<double, int>> agg;
  for (int rep = 0; rep < R; ++rep) {
    bool excluded = false;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const Summary& sm = reps[rep].sums[i];
      const bool ex = excluded_by_divergences(sm.divergences, sm.post_warmup_iterations, c.divergence_threshold);
      excluded = excluded || ex;
      ledger << rep << ',' << runs[i].label << ',' << sm.divergences << ',' << sm.post_warmup_iterations << ','
             << num(sm.divergence_fraction) << ',' << (ex ? 1 : 0) << '\n';
    }
    if (excluded) continue;
    ++kept;
    auto emit = [&](const std::string& method, const std::map<std::string, double>& est) {
      for (const auto& p : focus) {
        std::size_t j = 0;
        while (names[j] != p) ++j;
        const auto it = est.find(p);
        const double e = it == est.end() ? NAN : it->second;
        const double err = std::abs(e - truth[j]);
        bias << rep << ',' << method << ',' << p << ',' << num(e) << ',' << num(truth[j]) << ',' << num(err) << '\n';
        if (std::isfinite(err)) {
          agg[method + "," + p].first += err;
          agg[method + "," + p].second += 1;
        }
      }
    };
    emit("mle", reps[rep].mle.size() ? by_name(names, reps[rep].mle) : std::map<std::string, double>{});
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::map<std::string, double> est;
      for (const auto& p : reps[rep].sums[i].params) est[p.name] = p.mean;
      emit(runs[i].label, est);
    }
  }
  const auto bias_csv = c.out / "bias.csv";
  const auto ledger_csv = c.out / "bias_ledger.csv";
  write_text(bias_csv, bias.str());
  write_text(ledger_csv, ledger.str());
  r.outputs = {bias_csv.string(), ledger_csv.string()};
  std::ostringstream o;
  o << "replicates," << R << "\nkept," << kept << "\nexcluded," << (R - kept) << "\n";
  o << "method,parameter,mean_abs_error,n\n";
  for (const auto& [k, v] : agg) o << k << ',' << num(v.first / v.second) << ',' << v.second << '\n';
  r.report = o.str();
  r.manifest["kept"] = kept;
  r.manifest["excluded"] = R - kept;
  return r;
}

CommandResult cmd_efficiency_study(const ExperimentConfig& c) {
  CommandResult r;
  const StructureMask s = StructureMask::ar1_theta();
  const std::vector<int> gt = c.grid_tmax.empty() ? std::vector<int>{c.design.tmax} : c.grid_tmax;
  const std::vector<double> gn = c.grid_n.empty() ? std::vector<double>{c.design.mean_n} : c.grid_n;
  const std::vector<double> gp = c.grid_phi.empty() ? std::vector<double>{c.design.phi_theta} : c.grid_phi;
  struct Job {
    int setting, rep;
    SimDesign design;
    std::string prior;
  };
  std::vector<Job> jobs;
  int setting = 0;
  for (int t : gt)
    for (double n : gn)
      for (double p : gp) {
        SimDesign d = c.design;
        d.tmax = t;
        d.mean_n = n;
        d.phi_theta = p;
        for (int rep = 0; rep < c.efficiency_replicates; ++rep)
          for (const auto& prior : c.priors) jobs.push_back({setting, rep, d, prior});
        ++setting;
      }
  struct Out {
    Summary lap, full;
    double overlap = NAN;
  };
  std::vector<Out> outs(jobs.size());
  std::vector<std::exception_ptr> errs(jobs.size());
  const int nj = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < nj; ++i) {
    try {
      const Job& j = jobs[i];
      SimDesign d = j.design;
      d.seed = seeds::data(c.seed, j.setting, j.rep);
      const SimResult sim = simulate_dataset(d);
      const PriorSpec spec = PriorSpec::by_name(j.prior);
      const std::uint64_t rep_key = (static_cast<std::uint64_t>(j.setting) << 32) | j.rep;
      for (auto t : {Technique::Laplace, Technique::Full}) {
        SamplerConfig cfg = c.sampler;
        cfg.seed = seeds::chains(c.seed, rep_key, run_index(j.prior, t));
        Summary sm = summarize(run_posterior(sim.data, s, spec, t, cfg));
        (t == Technique::Laplace ? outs[i].lap : outs[i].full) = std::move(sm);
      }
      outs[i].overlap = max_std_mean_diff(outs[i].lap, outs[i].full);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  rethrow_first(errs);

  std::ostringstream o;
  o << "setting,tmax,n,phi_theta,technique,prior,replicate,min_ess,wall_seconds,seconds_sum,seconds_max,"
       "timing_mode,efficiency,divergences,overlap_max_z,overlap_ok\n";
  int gate_failures = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& j = jobs[i];
    const bool ok = outs[i].overlap <= c.overlap_tolerance;
    if (!ok) ++gate_failures;
    for (auto t : {Technique::Full, Technique::Laplace}) {
      const Summary& sm = t == Technique::Laplace ? outs[i].lap : outs[i].full;
      o << j.setting << ',' << j.design.tmax << ',' << num(j.design.mean_n) << ',' << num(j.design.phi_theta)
        << ',' << technique_name(t) << ',' << j.prior << ',' << j.rep << ',' << num(sm.min_ess) << ','
        << num(sm.wall_seconds) << ',' << num(sm.seconds_sum) << ',' << num(sm.seconds_max) << ','
        << sm.timing_mode << ',' << (ok ? num(sm.efficiency) : "") << ',' << sm.divergences << ','
        << num(outs[i].overlap) << ',' << (ok ? 1 : 0) << '\n';
    }
  }
  const auto csv = c.out / "efficiency.csv";
  write_text(csv, o.str());
  r.outputs = {csv.string()};
  r.manifest["overlap_gate_failures"] = gate_failures;
  r.report = o.str();
  return r;
}

CommandResult cmd_la_check(const ExperimentConfig& c) {
  CommandResult r;
  const StructureMask s = StructureMask::ar1_theta();
  Dataset data;
  if (!c.data.empty()) {
    data = read_dataset_csv(c.data);
  } else {
    const std::uint64_t seed = seeds::data(c.seed, 0);
    data = simulate_dataset(design_for(c, seed)).data;
    r.manifest["data_seed"] = seed;
  }
  std::ostringstream rep;
  rep << "prior,parameter,mean_full,sd_full,mean_laplace,sd_laplace,std_diff\n";
  for (const auto& prior : c.priors) {
    const PriorSpec spec = PriorSpec::by_name(prior);
    PosteriorDraws pd[2];
    std::vector<std::exception_ptr> errs(2);
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < 2; ++k) {
      try {
        const Technique t = k == 0 ? Technique::Full : Technique::Laplace;
        SamplerConfig cfg = c.sampler;
        cfg.seed = seeds::chains(c.seed, 0, run_index(prior, t));
        pd[k] = run_posterior(data, s, spec, t, cfg);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    }
    rethrow_first(errs);
    const LaCheck lc = la_check_export(pd[0], pd[1], stream_key(c.seed, {seeds::kExport}), {}, c.kde_grid);

    std::ostringstream draws;
    draws << "technique";
    for (const auto& n : lc.names) draws << ',' << n;
    draws << '\n';
    for (Eigen::Index i = 0; i < lc.rows.rows(); ++i) {
      draws << (lc.technique[i] == 0 ? "full" : "laplace");
      for (Eigen::Index j = 0; j < lc.rows.cols(); ++j) draws << ',' << format_double(lc.rows(i, j));
      draws << '\n';
    }
    std::ostringstream qq;
    qq << "parameter,rank,full,laplace\n";
    for (std::size_t j = 0; j < lc.names.size(); ++j)
      for (Eigen::Index i = 0; i < lc.qq[j].rows(); ++i)
        qq << lc.names[j] << ',' << i << ',' << format_double(lc.qq[j](i, 0)) << ','
           << format_double(lc.qq[j](i, 1)) << '\n';
    std::ostringstream ct;
    ct << "x_name,y_name,technique,i,j,x,y,density\n";
    for (const auto& g : lc.contours)
      for (Eigen::Index i = 0; i < g.x.size(); ++i)
        for (Eigen::Index j = 0; j < g.y.size(); ++j)
          ct << g.x_name << ',' << g.y_name << ',' << g.technique << ',' << i << ',' << j << ','
             << format_double(g.x[i]) << ',' << format_double(g.y[j]) << ',' << format_double(g.density(i, j))
             << '\n';
    for (std::size_t j = 0; j < lc.names.size(); ++j) {
      const double sd = std::sqrt(0.5 * (lc.sd_full[j] * lc.sd_full[j] + lc.sd_laplace[j] * lc.sd_laplace[j]));
      rep << prior << ',' << lc.names[j] << ',' << num(lc.mean_full[j]) << ',' << num(lc.sd_full[j]) << ','
          << num(lc.mean_laplace[j]) << ',' << num(lc.sd_laplace[j]) << ','
          << num(std::abs(lc.mean_full[j] - lc.mean_laplace[j]) / sd) << '\n';
    }
    const std::string stem = "la_check_" + prior;
    for (const auto& [suffix, text] :
         {std::pair{"_draws.csv", draws.str()}, std::pair{"_qq.csv", qq.str()}, std::pair{"_contours.csv", ct.str()}}) {
      const auto path = c.out / (stem + suffix);
      write_text(path, text);
      r.outputs.push_back(path.string());
    }
    r.manifest["rows"][prior] = lc.rows.rows();
    r.manifest["max_std_mean_diff"][prior] = lc.max_std_mean_diff();
    r.manifest["divergences"][prior] = {{"full", pd[0].total_divergences()},
                                        {"laplace", pd[1].total_divergences()}};
  }
  const auto summary = c.out / "la_check_summary.csv";
  write_text(summary, rep.str());
  r.outputs.push_back(summary.string());
  r.report = rep.str();
  return r;
}

CommandResult cmd_model_select(const ExperimentConfig& c) {
  CommandResult r;
  Dataset data;
  if (!c.data.empty()) {
    data = read_dataset_csv(c.data);
    r.manifest["data"] = c.data.string();
  } else {
    const std::uint64_t seed = seeds::data(c.seed, 0);
    data = simulate_standin(seed).data;
    const auto path = c.out / "standin_broods.csv";
    write_broods_csv(path, data);
    r.outputs.push_back(path.string());
    r.manifest["data_seed"] = seed;
    r.manifest["data"] = "synthetic stand-in";
  }
  LadderOptions opt;
  opt.mle.compute_se = false;
  const auto entries = fit_ladder(data, c.models, opt);
  const LadderReport rep = rank_by_aic(entries);
  const std::string table = ladder_table(rep);
  const auto path = c.out / "ladder.csv";
  write_text(path, table);
  r.outputs.push_back(path.string());
  r.manifest["best_model"] = rep.best_id();
  r.manifest["failed_models"] = rep.failed.size();
  r.report = table;
  return r;
}

CommandResult cmd_verify(const ExperimentConfig& c) {
  CommandResult r;
  VerifyOptions opt;
  opt.seed = c.seed;
  opt.quick = c.verify_quick;
  const auto results = verify_suite(opt);
  std::ostringstream o, csv;
  csv << "check,passed,measured,threshold,seconds,detail\n";
  bool all = true;
  for (const auto& x : results) {
    all = all && x.passed;
    o << (x.passed ? "PASS " : "FAIL ") << x.name << ": measured " << num(x.measured) << " (threshold "
      << num(x.threshold) << "; " << x.detail << ")\n";
    csv << '"' << x.name << "\"," << (x.passed ? 1 : 0) << ',' << num(x.measured) << ',' << num(x.threshold)
        << ',' << num(x.seconds) << ",\"" << x.detail << "\"\n";
  }
  const auto path = c.out / "verify.csv";
  write_text(path, csv.str());
  r.outputs.push_back(path.string());
  r.exit_code = all ? 0 : 1;
  r.manifest["all_passed"] = all;
  r.report = o.str();
  return r;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& c) {
  const auto t0 = Clock::now();
  CommandResult r;
  if (name == "simulate") r = cmd_simulate(c);
  else if (name == "compare") r = cmd_compare(c);
  else if (name == "bias-study") r = cmd_bias_study(c);
  else if (name == "efficiency-study") r = cmd_efficiency_study(c);
  else if (name == "la-check") r = cmd_la_check(c);
  else if (name == "model-select") r = cmd_model_select(c);
  else if (name == "verify") r = cmd_verify(c);
  else fail(Errc::InvalidArgument, "unknown command '" + name + "'");
  nlohmann::json m = base_manifest(name, c);
  for (auto& [k, v] : r.manifest.items()) m[k] = v;
  m["outputs"] = r.outputs;
  if (name != "simulate") m["seconds"] = since(t0);
  const auto path = c.out / (name + ".manifest.json");
  write_json(path, m);
  r.outputs.push_back(path.string());
  r.manifest = std::move(m);
  return r;
}

}  // namespace fluctsel
