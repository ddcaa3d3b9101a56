#pragma once

#include <string>
#include <vector>

#include "fluctsel/core/model.hpp"
#include "fluctsel/optimize/mle.hpp"

namespace fluctsel {

inline constexpr int kNumCandidates = 11;
inline constexpr int kSelectedCandidate = 7;

struct CandidateModel {
  int id = 0;
  StructureMask mask;
  std::string description;
};

/// Candidate `id` in 1..11. Throws InvalidArgument otherwise.
CandidateModel candidate(int id);
std::vector<CandidateModel> all_candidates();

struct LadderEntry {
  int id = 0;
  int n_free = 0;
  bool ok = false;
  std::string error;
  MleFit fit;
};

struct LadderOptions {
  MleOptions mle;
  bool parallel = true;
};

/// One MLE per candidate; failed fits are recorded, not thrown.
/// Entries come back in the order of `ids`.
std::vector<LadderEntry> fit_ladder(const Dataset& d, const std::vector<int>& ids,
                                    const LadderOptions& opt = {});

struct RankedEntry {
  int id = 0;
  int n_free = 0;
  double nll = 0.0;
  double aic = 0.0;
  int delta_p = 0;  // relative to the best candidate
  double delta_aic = 0.0;
  bool converged = false;
};

struct LadderReport {
  std::vector<RankedEntry> ranked;  // ascending AIC
  std::vector<LadderEntry> failed;
  int best_id() const { return ranked.front().id; }
};

/// Ties on AIC go to fewer parameters, then lower id. Throws NoSuccessfulFits.
LadderReport rank_by_aic(const std::vector<LadderEntry>& entries);

/// Delimited report: model,n_free,delta_p,nll,aic,delta_aic,converged,description.
std::string ladder_table(const LadderReport& r, char sep = ',');

}  // namespace fluctsel
