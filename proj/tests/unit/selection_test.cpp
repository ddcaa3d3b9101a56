#include <doctest.h>

#include "fluctsel/core/error.hpp"
#include "fluctsel/selection/selection.hpp"
#include "fluctsel/simulate/simulate.hpp"

using namespace fluctsel;

namespace {

LadderEntry entry(int id, double nll, bool ok = true) {
  LadderEntry e;
  e.id = id;
  e.n_free = candidate(id).mask.n_free();
  e.ok = ok;
  e.fit.nll_at_opt = nll;
  e.fit.n_free = e.n_free;
  e.fit.aic = aic(e.n_free, nll);
  e.fit.converged = ok;
  if (!ok) e.error = "failed";
  return e;
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("candidate ladder parameter counts") {
  const std::vector<int> want = {3, 4, 5, 6, 4, 10, 8, 9, 9, 7, 7};
  REQUIRE(all_candidates().size() == 11u);
  for (int id = 1; id <= kNumCandidates; ++id) {
    CHECK_MESSAGE(candidate(id).mask.n_free() == want[id - 1], "model " << id);
    CHECK_NOTHROW(candidate(id).mask.validate());
    CHECK_FALSE(candidate(id).description.empty());
  }
  CHECK_THROWS_AS(candidate(0), Error);
  CHECK_THROWS_AS(candidate(12), Error);
}

TEST_CASE("ranking by AIC with parameter deltas") {
  const auto r = rank_by_aic({entry(1, 110.0), entry(7, 100.0), entry(2, 105.0), entry(3, 0, false)});
  REQUIRE(r.ranked.size() == 3u);
  CHECK(r.best_id() == 7);
  CHECK(r.ranked[0].delta_aic == 0.0);
  CHECK(r.ranked[1].id == 2);
  CHECK(r.ranked[1].delta_p == 4 - 8);
  CHECK(r.ranked[1].delta_aic == doctest::Approx(2 * 4 + 2 * 105.0 - (2 * 8 + 200.0)));
  REQUIRE(r.failed.size() == 1u);
  CHECK(r.failed[0].id == 3);
}

TEST_CASE("AIC ties go to the smaller model, then the lower id") {
  const auto r = rank_by_aic({entry(2, 100.0), entry(1, 100.5)});
  CHECK(r.best_id() == 1);
  const auto s = rank_by_aic({entry(11, 50.0), entry(10, 50.0)});
  CHECK(s.best_id() == 10);
}

TEST_CASE("no successful fits") {
  CHECK_THROWS_AS(rank_by_aic({entry(1, 0, false)}), Error);
}

TEST_CASE("ladder table layout") {
  const std::string t = ladder_table(rank_by_aic({entry(1, 10.0), entry(2, 9.0)}));
  CHECK(t.rfind("model,n_free,delta_p,nll,aic,delta_aic,converged,description\n", 0) == 0);
  CHECK(std::count(t.begin(), t.end(), '\n') == 3);
}

TEST_CASE("ladder fit on stand-in data") {
  const SimResult sim = simulate_standin(1);
  const auto entries = fit_ladder(sim.data, {1, 2});
  REQUIRE(entries.size() == 2u);
  for (const auto& e : entries) {
    CHECK(e.ok);
    CHECK(std::isfinite(e.fit.aic));
  }
  CHECK(entries[1].fit.nll_at_opt <= entries[0].fit.nll_at_opt + 1e-6);
}

}
