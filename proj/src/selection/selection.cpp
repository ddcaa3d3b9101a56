#include "fluctsel/selection/selection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>

#include "fluctsel/core/error.hpp"

namespace fluctsel {

namespace {

StructureMask make_mask(bool a, bool t, bool o) {
  StructureMask s;
  s.active = {a, t, o};
  return s;
}

}  // namespace

CandidateModel candidate(int id) {
  CandidateModel c;
  c.id = id;
  StructureMask& s = c.mask;
  auto ar = [&](int k) { s.phi_free[k][k] = true; };
  switch (id) {
    case 1:
      s = make_mask(false, false, false);
      c.description = "alpha=theta=omega=0";
      break;
    case 2:
      s = make_mask(true, false, false);
      c.description = "theta=omega=0; white-noise alpha";
      break;
    case 3:
      s = make_mask(true, true, false);
      c.description = "omega=0; white-noise alpha and theta";
      break;
    case 4:
      s = make_mask(true, true, true);
      c.description = "white-noise alpha, theta and omega";
      break;
    case 5:
      s = make_mask(false, true, false);
      c.description = "alpha=omega=0; white-noise theta";
      break;
    case 6:
      s = make_mask(true, true, false);
      ar(kAlpha);
      ar(kTheta);
      s.phi_free[kAlpha][kTheta] = s.phi_free[kTheta][kAlpha] = true;
      s.rho_free[0] = true;
      c.description = "omega=0; VAR(1) alpha,theta; full 2x2 phi; rho_at";
      break;
    case 7:
      s = make_mask(true, true, false);
      ar(kAlpha);
      ar(kTheta);
      s.rho_free[0] = true;
      c.description = "omega=0; AR(1) alpha and AR(1) theta; rho_at";
      break;
    case 8:
      s = make_mask(true, true, false);
      ar(kAlpha);
      ar(kTheta);
      s.phi_free[kTheta][kAlpha] = true;
      s.rho_free[0] = true;
      c.description = "omega=0; VAR(1) alpha,theta; phi_ta; rho_at";
      break;
    case 9:
      s = make_mask(true, true, false);
      ar(kAlpha);
      ar(kTheta);
      s.phi_free[kAlpha][kTheta] = true;
      s.rho_free[0] = true;
      c.description = "omega=0; VAR(1) alpha,theta; phi_at; rho_at";
      break;
    case 10:
      s = make_mask(true, true, false);
      ar(kAlpha);
      s.rho_free[0] = true;
      c.description = "omega=0; white-noise theta, AR(1) alpha; rho_at";
      break;
    case 11:
      s = make_mask(true, true, false);
      ar(kTheta);
      s.rho_free[0] = true;
      c.description = "omega=0; white-noise alpha, AR(1) theta; rho_at";
      break;
    default:
      fail(Errc::InvalidArgument, "candidate id must be in 1..11, got " + std::to_string(id));
  }
  s.validate();
  return c;
}

std::vector<CandidateModel> all_candidates() {
  std::vector<CandidateModel> out;
  for (int id = 1; id <= kNumCandidates; ++id) out.push_back(candidate(id));
  return out;
}

std::vector<LadderEntry> fit_ladder(const Dataset& d, const std::vector<int>& ids,
                                    const LadderOptions& opt) {
  std::vector<CandidateModel> cands;
  for (int id : ids) cands.push_back(candidate(id));
  std::vector<LadderEntry> out(cands.size());
  const int n = static_cast<int>(cands.size());
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
  for (int i = 0; i < n; ++i) {
    LadderEntry& e = out[i];
    e.id = cands[i].id;
    e.n_free = cands[i].mask.n_free();
    try {
      e.fit = fit_mle(d, cands[i].mask, nullptr, opt.mle);
      e.ok = std::isfinite(e.fit.nll_at_opt);
      if (!e.ok) e.error = "non-finite nll at optimum";
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
  }
  return out;
}

LadderReport rank_by_aic(const std::vector<LadderEntry>& entries) {
  LadderReport r;
  for (const auto& e : entries) {
    if (!e.ok) {
      r.failed.push_back(e);
      continue;
    }
    RankedEntry x;
    x.id = e.id;
    x.n_free = e.n_free;
    x.nll = e.fit.nll_at_opt;
    x.aic = aic(e.n_free, x.nll);
    x.converged = e.fit.converged;
    r.ranked.push_back(x);
  }
  if (r.ranked.empty()) fail(Errc::NoSuccessfulFits, "rank_by_aic: no successful fits");
  std::stable_sort(r.ranked.begin(), r.ranked.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    if (a.n_free != b.n_free) return a.n_free < b.n_free;
    return a.id < b.id;
  });
  const RankedEntry& best = r.ranked.front();
  for (auto& x : r.ranked) {
    x.delta_p = x.n_free - best.n_free;
    x.delta_aic = x.aic - best.aic;
  }
  r.ranked.front().delta_aic = 0.0;
  return r;
}

std::string ladder_table(const LadderReport& r, char sep) {
  std::ostringstream o;
  o << std::setprecision(10);
  o << "model" << sep << "n_free" << sep << "delta_p" << sep << "nll" << sep << "aic" << sep
    << "delta_aic" << sep << "converged" << sep << "description\n";
  for (const auto& x : r.ranked)
    o << x.id << sep << x.n_free << sep << x.delta_p << sep << x.nll << sep << x.aic << sep
      << x.delta_aic << sep << (x.converged ? 1 : 0) << sep << '"' << candidate(x.id).description
      << "\"\n";
  for (const auto& e : r.failed)
    o << e.id << sep << e.n_free << sep << sep << sep << sep << sep << 0 << sep << "\"failed: "
      << e.error << "\"\n";
  return o.str();
}

}  // namespace fluctsel
