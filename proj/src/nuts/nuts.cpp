#include "fluctsel/nuts/nuts.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include <omp.h>

#include "fluctsel/core/error.hpp"
#include "fluctsel/core/rng.hpp"

namespace fluctsel {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kChainStream = 0x7ac3;

double log_sum_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Point {
  Eigen::VectorXd q, p, g;  // g = gradient of log density
  double lp = -INFINITY;
};

class DualAveraging {
 public:
  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  double learn(double delta, double stat) {
    ++counter_;
    stat = std::min(1.0, stat);
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta - stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  double counter_ = 0.0, s_bar_ = 0.0, x_bar_ = 0.0, mu_ = 0.0;
  double gamma_ = 0.05, t0_ = 10.0, kappa_ = 0.75;
};

/// Expanding windowed variance estimation for a diagonal metric.
class WindowedVariance {
 public:
  WindowedVariance(int warmup, std::size_t dim) : warmup_(warmup), dim_(dim) {
    if (warmup < 20) {
      init_ = warmup;  // no adaptation windows
      term_ = 0;
      base_ = 0;
      enabled_ = false;
    } else if (init_ + term_ + base_ > warmup) {
      init_ = static_cast<int>(0.15 * warmup);
      term_ = static_cast<int>(0.1 * warmup);
      base_ = warmup - (init_ + term_);
    }
    window_ = base_;
    next_ = init_ + window_ - 1;
    reset();
  }

  /// Returns true and fills `var` at the end of a window.
  bool learn(const Eigen::VectorXd& q, Eigen::VectorXd& var) {
    if (!enabled_) {
      ++counter_;
      return false;
    }
    if (counter_ >= init_ && counter_ < warmup_ - term_ && counter_ != warmup_) add(q);
    if (counter_ == next_ && counter_ != warmup_) {
      next_window();
      const double n = static_cast<double>(n_);
      var = m2_ / (n - 1.0);
      var = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
      reset();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  void reset() {
    n_ = 0;
    mean_ = Eigen::VectorXd::Zero(dim_);
    m2_ = Eigen::VectorXd::Zero(dim_);
  }
  void add(const Eigen::VectorXd& q) {
    ++n_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(q - mean_);
  }
  void next_window() {
    if (next_ == warmup_ - term_ - 1) return;
    window_ *= 2;
    next_ = counter_ + window_;
    if (next_ != warmup_ - term_ - 1) {
      const int boundary = next_ + 2 * window_;
      if (boundary >= warmup_ - term_) next_ = warmup_ - term_ - 1;
    }
  }

  int warmup_;
  std::size_t dim_;
  int init_ = 75, term_ = 50, base_ = 25;
  int window_ = 0, next_ = 0, counter_ = 0;
  bool enabled_ = true;
  long n_ = 0;
  Eigen::VectorXd mean_, m2_;
};

class Nuts {
 public:
  Nuts(LogDensity& target, const SamplerConfig& cfg, std::uint64_t key)
      : target_(target), cfg_(cfg), rng_(key) {
    minv_ = Eigen::VectorXd::Ones(target.dim());
  }

  void init(const Eigen::VectorXd& q) {
    z_.q = q;
    z_.lp = target_.log_density(q, &z_.g);
  }

  double hamiltonian(const Point& z) const {
    if (!std::isfinite(z.lp)) return INFINITY;
    return -z.lp + 0.5 * z.p.dot(minv_.cwiseProduct(z.p));
  }

  void sample_momentum(Point& z) {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.q.size(); ++i) z.p[i] = normal_(rng_) / std::sqrt(minv_[i]);
  }

  void leapfrog(Point& z, double eps) {
    z.p += 0.5 * eps * z.g;
    z.q += eps * minv_.cwiseProduct(z.p);
    z.lp = target_.log_density(z.q, &z.g);
    if (!std::isfinite(z.lp) || z.g.size() != z.q.size() || !z.g.allFinite()) {
      z.lp = -INFINITY;
      return;
    }
    z.p += 0.5 * eps * z.g;
  }

  Eigen::VectorXd sharp(const Eigen::VectorXd& p) const { return minv_.cwiseProduct(p); }

  static bool criterion(const Eigen::VectorXd& ps_minus, const Eigen::VectorXd& ps_plus,
                        const Eigen::VectorXd& rho) {
    return ps_plus.dot(rho) > 0 && ps_minus.dot(rho) > 0;
  }

  void init_stepsize() {
    const Point z_init = z_;
    sample_momentum(z_);
    double h0 = hamiltonian(z_);
    leapfrog(z_, eps_);
    double dh = h0 - hamiltonian(z_);
    if (std::isnan(dh)) dh = -INFINITY;
    const int direction = dh > std::log(0.8) ? 1 : -1;
    for (;;) {
      z_ = z_init;
      sample_momentum(z_);
      h0 = hamiltonian(z_);
      leapfrog(z_, eps_);
      dh = h0 - hamiltonian(z_);
      if (std::isnan(dh)) dh = -INFINITY;
      if (direction == 1 && !(dh > std::log(0.8))) break;
      if (direction == -1 && !(dh < std::log(0.8))) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7) fail(Errc::NonFiniteValue, "nuts: step size diverged to infinity");
      if (eps_ == 0.0) fail(Errc::NonFiniteValue, "nuts: step size collapsed to zero");
    }
    z_ = z_init;
  }

  struct Transition {
    int depth = 0;
    int n_leapfrog = 0;
    double accept = 0.0;
    double energy = 0.0;
    bool divergent = false;
  };

  Transition transition() {
    sample_momentum(z_);
    Point z_fwd = z_, z_bck = z_, z_sample = z_, z_propose = z_;
    Eigen::VectorXd p_fwd_fwd = z_.p, ps_fwd_fwd = sharp(z_.p);
    Eigen::VectorXd p_fwd_bck = z_.p, ps_fwd_bck = ps_fwd_fwd;
    Eigen::VectorXd p_bck_fwd = z_.p, ps_bck_fwd = ps_fwd_fwd;
    Eigen::VectorXd p_bck_bck = z_.p, ps_bck_bck = ps_fwd_fwd;
    Eigen::VectorXd rho = z_.p;
    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    int depth = 0;
    divergent_ = false;
    const Eigen::Index n = z_.q.size();

    while (depth < cfg_.max_treedepth) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n), rho_bck = Eigen::VectorXd::Zero(n);
      bool valid = false;
      double lsw_subtree = -INFINITY;
      if (rng_.uniform() > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        ps_bck_fwd = ps_fwd_bck;
        valid = build_tree(depth, z_propose, ps_fwd_bck, ps_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd,
                           h0, 1.0, n_leapfrog, lsw_subtree, sum_metro);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        ps_fwd_bck = ps_bck_fwd;
        valid = build_tree(depth, z_propose, ps_bck_fwd, ps_bck_bck, rho_bck, p_bck_fwd, p_bck_bck,
                           h0, -1.0, n_leapfrog, lsw_subtree, sum_metro);
        z_bck = z_;
      }
      if (!valid) break;
      ++depth;
      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
      rho = rho_bck + rho_fwd;
      bool persist = criterion(ps_bck_bck, ps_fwd_fwd, rho);
      persist &= criterion(ps_bck_bck, ps_fwd_bck, rho_bck + p_fwd_bck);
      persist &= criterion(ps_bck_fwd, ps_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }
    Transition t;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.accept = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    t.divergent = divergent_;
    z_ = z_sample;
    t.energy = hamiltonian(z_);
    return t;
  }

  bool build_tree(int depth, Point& z_propose, Eigen::VectorXd& ps_beg, Eigen::VectorXd& ps_end,
                  Eigen::VectorXd& rho, Eigen::VectorXd& p_beg, Eigen::VectorXd& p_end, double h0,
                  double sign, int& n_leapfrog, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(z_, sign * eps_);
      ++n_leapfrog;
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = INFINITY;
      if (h - h0 > cfg_.max_delta_h) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = z_;
      ps_beg = sharp(z_.p);
      ps_end = ps_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }
    const Eigen::Index n = z_.q.size();
    double lsw_init = -INFINITY;
    Eigen::VectorXd p_init_end(n), ps_init_end(n), rho_init = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z_propose, ps_beg, ps_init_end, rho_init, p_beg, p_init_end, h0,
                    sign, n_leapfrog, lsw_init, sum_metro))
      return false;

    Point z_propose_final = z_;
    double lsw_final = -INFINITY;
    Eigen::VectorXd p_final_beg(n), ps_final_beg(n), rho_final = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z_propose_final, ps_final_beg, ps_end, rho_final, p_final_beg, p_end,
                    h0, sign, n_leapfrog, lsw_final, sum_metro))
      return false;

    const double lsw_subtree = log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(lsw_final - lsw_subtree)) {
      z_propose = z_propose_final;
    }
    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(ps_beg, ps_end, rho_subtree);
    persist &= criterion(ps_beg, ps_final_beg, rho_init + p_final_beg);
    persist &= criterion(ps_init_end, ps_end, rho_final + p_init_end);
    return persist;
  }

  Point& state() { return z_; }
  double& step() { return eps_; }
  Eigen::VectorXd& inv_metric() { return minv_; }

 private:
  LogDensity& target_;
  const SamplerConfig& cfg_;
  CounterRng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Point z_;
  Eigen::VectorXd minv_;
  double eps_ = 1.0;
  bool divergent_ = false;
};

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) fail(Errc::ConfigError, "sampler: chains must be >= 1");
  if (warmup < 0 || warmup >= total_iters)
    fail(Errc::ConfigError, "sampler: need 0 <= warmup < total_iters");
  if (thin < 1) fail(Errc::ConfigError, "sampler: thin must be >= 1");
  if (!(adapt_delta > 0.0 && adapt_delta < 1.0))
    fail(Errc::ConfigError, "sampler: adapt_delta must be in (0, 1)");
  if (max_treedepth < 1) fail(Errc::ConfigError, "sampler: max_treedepth must be >= 1");
}

int ChainDraws::num_divergent() const {
  return static_cast<int>(std::count(divergent.begin(), divergent.end(), true));
}

double ChainDraws::mean_accept_post_warmup() const {
  double s = 0.0;
  const std::size_t n = accept_stat.size() - warmup;
  for (std::size_t i = warmup; i < accept_stat.size(); ++i) s += accept_stat[i];
  return n > 0 ? s / n : 0.0;
}

Eigen::MatrixXd PosteriorDraws::merged() const {
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(num_params()));
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    m.middleRows(r, c.draws.rows()) = c.draws;
    r += c.draws.rows();
  }
  return m;
}

std::vector<Eigen::VectorXd> PosteriorDraws::column(std::size_t j) const {
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) out.emplace_back(c.draws.col(static_cast<Eigen::Index>(j)));
  return out;
}

int PosteriorDraws::total_divergences() const {
  int s = 0;
  for (const auto& c : chains) s += c.num_divergent();
  return s;
}

int PosteriorDraws::post_warmup_iterations() const {
  int s = 0;
  for (const auto& c : chains) s += static_cast<int>(c.divergent.size());
  return s;
}

double PosteriorDraws::wall_seconds() const {
  double s = 0.0;
  for (const auto& c : chains) s = parallel ? std::max(s, c.seconds) : s + c.seconds;
  return s;
}

Eigen::VectorXd init_jitter(std::size_t dim, std::uint64_t seed, int chain, int attempt,
                            double radius) {
  CounterRng rng(seed, {kInitStream, static_cast<std::uint64_t>(chain),
                        static_cast<std::uint64_t>(attempt)});
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) x[i] = radius * (2.0 * rng.uniform() - 1.0);
  return x;
}

ChainDraws sample_chain(LogDensity& target, const SamplerConfig& cfg, int chain) {
  cfg.validate();
  const std::size_t dim = target.dim();
  Eigen::VectorXd q0;
  bool ok = false;
  for (int a = 0; a < cfg.init_tries && !ok; ++a) {
    q0 = init_jitter(dim, cfg.seed, chain, a, cfg.init_radius);
    if (cfg.init_center) q0 += *cfg.init_center;
    q0 = target.prepare_init(q0);
    Eigen::VectorXd g;
    const double lp = target.log_density(q0, &g);
    ok = std::isfinite(lp) && g.size() == q0.size() && g.allFinite();
  }
  if (!ok)
    fail(Errc::InitializationFailure, "nuts: no finite starting point after " +
                                          std::to_string(cfg.init_tries) + " jittered tries");

  const auto t0 = std::chrono::steady_clock::now();
  Nuts nuts(target, cfg, stream_key(cfg.seed, {kChainStream, static_cast<std::uint64_t>(chain)}));
  nuts.init(q0);
  nuts.init_stepsize();
  DualAveraging da;
  da.set_mu(std::log(10.0 * nuts.step()));
  da.restart();
  WindowedVariance wv(cfg.warmup, dim);

  ChainDraws out;
  out.init = q0;
  out.warmup = cfg.warmup;
  const int names = static_cast<int>(target.report(q0).size());
  out.draws.resize(cfg.retained_per_chain(), names);
  int kept = 0;
  for (int it = 0; it < cfg.total_iters; ++it) {
    const auto t = nuts.transition();
    out.treedepth.push_back(t.depth);
    out.energy.push_back(t.energy);
    out.accept_stat.push_back(t.accept);
    out.n_leapfrog.push_back(t.n_leapfrog);
    if (it < cfg.warmup) {
      nuts.step() = da.learn(cfg.adapt_delta, t.accept);
      Eigen::VectorXd var;
      if (wv.learn(nuts.state().q, var)) {
        nuts.inv_metric() = var;
        nuts.init_stepsize();
        da.set_mu(std::log(10.0 * nuts.step()));
        da.restart();
      }
      if (it + 1 == cfg.warmup) nuts.step() = da.final_step();
    } else {
      out.divergent.push_back(t.divergent);
      if ((it - cfg.warmup) % cfg.thin == 0) out.draws.row(kept++) = target.report(nuts.state().q);
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.step_size = nuts.step();
  out.inv_metric = nuts.inv_metric();
  return out;
}

PosteriorDraws sample(const LogDensity& target, const SamplerConfig& cfg) {
  cfg.validate();
  PosteriorDraws pd;
  pd.names = target.names();
  pd.parallel = cfg.parallel;
  pd.chains.resize(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  auto run = [&](int c) {
    try {
      auto local = target.clone();
      pd.chains[c] = sample_chain(*local, cfg, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (cfg.parallel) {
    int threads = 1;
#pragma omp parallel
    {
#pragma omp single
      threads = omp_get_num_threads();
#pragma omp for schedule(dynamic, 1)
      for (int c = 0; c < cfg.chains; ++c) run(c);
    }
    pd.parallel = threads > 1;
  } else {
    for (int c = 0; c < cfg.chains; ++c) run(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return pd;
}

}  // namespace fluctsel
