// Copyright 2026 The decpomdp-pbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "decpomdp/dp.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/oracle.hpp"

using namespace decpomdp;

TEST_CASE("the joint law enumerates every trajectory exactly once") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_default_profile(p);
  const std::vector<oracle::Trajectory> law = oracle::joint_law(p, g);
  // 2^3 state paths times (2*2)^3 observation combinations; actions are
  // determined by the profile.
  CHECK(law.size() == 512);
  double mass = 0.0;
  for (const auto& tr : law) mass += tr.prob;
  CHECK(mass == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("trajectory evaluator and joint law price profiles identically") {
  const ProblemSpec p = build_paper_example();
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const StrategyProfile g = make_random_profile(p, seed);
    const std::vector<oracle::Trajectory> law = oracle::joint_law(p, g);
    double cost = 0.0;
    for (const auto& tr : law) {
      double c = 0.0;
      for (int s = 0; s < p.horizon; ++s)
        c += p.cost(s, tr.x[s], p.encode_actions(tr.u[s]));
      cost += tr.prob * c;
    }
    CHECK(oracle::exact_payoff(p, g) == Catch::Approx(cost).margin(1e-12));
  }
}

TEST_CASE("first-stage conditional costs aggregate to the exact payoff") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_random_profile(p, 9);
  for (int k = 0; k < 2; ++k) {
    const std::vector<double> marginal = oracle::first_obs_marginal(p, k);
    double total = 0.0;
    for (int y = 0; y < p.num_obs(k); ++y) {
      InfoRealization r;
      r.agent = k;
      r.stage = 0;
      r.priv.obs = {y};
      total += marginal[y] * oracle::conditional_cost_to_go(p, g, r);
    }
    CHECK(total == Catch::Approx(oracle::exact_payoff(p, g)).margin(1e-12));
  }
}

TEST_CASE("pinning own actions from the strategy changes nothing") {
  const ProblemSpec p = build_paper_example();
  for (uint64_t seed : {31ull, 32ull}) {
    const StrategyProfile g = make_random_profile(p, seed);
    for (int k = 0; k < 2; ++k)
      for (int s = 0; s < p.horizon; ++s) {
        InfoSpace space(p, k, s);
        for (long long idx = 0; idx < space.size(); ++idx) {
          const InfoRealization r = space.decode(idx);
          if (!realization_consistent(p, g, r)) continue;
          const PrivatePosterior a = oracle::exhaustive_posterior(p, g, r, false);
          const PrivatePosterior b = oracle::exhaustive_posterior(p, g, r, true);
          REQUIRE(a.off_support == b.off_support);
          REQUIRE(a.p == b.p);  // exact equality, not approximate
        }
      }
  }
}

TEST_CASE("monte carlo rollouts are reproducible and statistically sound") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_random_profile(p, 77);
  const oracle::MonteCarloEstimate a = oracle::monte_carlo_payoff(p, g, 20000, 5);
  const oracle::MonteCarloEstimate b = oracle::monte_carlo_payoff(p, g, 20000, 5);
  const oracle::MonteCarloEstimate c = oracle::monte_carlo_payoff(p, g, 20000, 6);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.mean != c.mean);
  const double exact = oracle::exact_payoff(p, g);
  CHECK(std::abs(a.mean - exact) <= 6.0 * a.std_error);
}

TEST_CASE("tree best response never prices worse than the input profile") {
  const ProblemSpec p = build_paper_example();
  for (uint64_t seed : {41ull, 42ull}) {
    const StrategyProfile g = make_random_profile(p, seed);
    for (int k = 0; k < 2; ++k) {
      const oracle::TreeBestResponse br = oracle::tree_best_response(p, g, k);
      CHECK(br.payoff <= oracle::exact_payoff(p, g) + 1e-12);
      CHECK(oracle::exact_payoff(p, br.profile) ==
            Catch::Approx(br.payoff).margin(1e-12));
    }
  }
}

TEST_CASE("delayed-state conditional ignores which profile generated it") {
  const ProblemSpec p = build_paper_example();
  // Two profiles that both map (o1 -> c1, o2 -> c1) at stage 1 but differ
  // later: the conditional given the same shared block must be identical.
  const StrategyProfile g1 = make_default_profile(p);
  StrategyProfile g2 = g1;
  g2.act[0][2].assign(g2.act[0][2].size(), 1);
  g2.act[1][2].assign(g2.act[1][2].size(), 1);
  SharedHistory sh;
  sh.obs = {{1, 1}};
  sh.act = {{0, 0}};
  const std::vector<double> a = oracle::delayed_state_conditional(p, g1, sh);
  const std::vector<double> b = oracle::delayed_state_conditional(p, g2, sh);
  REQUIRE_FALSE(a.empty());
  REQUIRE(a == b);
  CHECK(a[0] == Catch::Approx(0.1).margin(1e-12));

  // A block whose actions contradict the profile carries no probability.
  SharedHistory bad;
  bad.obs = {{1, 1}};
  bad.act = {{1, 0}};
  CHECK(oracle::delayed_state_conditional(p, g1, bad).empty());
}

TEST_CASE("single-agent recursions agree with each other and the solver") {
  const ProblemSpec pomdp = make_random_pomdp(11, 3, 2, 2, 2);
  const oracle::CentralizedSolution central = oracle::centralized_pomdp_solve(pomdp);
  const oracle::CommonInfoResult ci = oracle::common_info_dp(pomdp);
  CHECK(std::abs(central.value - ci.value) <= 1e-12);
  CHECK(oracle::exact_payoff(pomdp, central.strategy) ==
        Catch::Approx(central.value).margin(1e-12));
  CHECK(oracle::exact_payoff(pomdp, ci.profile) ==
        Catch::Approx(ci.value).margin(1e-12));
  // A single agent's person-by-person fixpoint is the global optimum.
  const IterationResult res = pbp_iterate(pomdp);
  CHECK(std::abs(res.payoff - central.value) <= 1e-9);
}

TEST_CASE("coordinator recursion refuses degenerate or oversized inputs") {
  ProblemSpec p = build_paper_example();
  p.delay = 3;
  CHECK_THROWS_WITH(oracle::common_info_dp(p),
                    Catch::Matchers::ContainsSubstring("vacuous"));
  // With delay 2 the per-stage prescription spaces fit, but the recursion
  // over revealed blocks does not; the work guard must refuse.
  CHECK_THROWS_WITH(oracle::common_info_dp(build_paper_example()),
                    Catch::Matchers::ContainsSubstring("guard"));
}

TEST_CASE("exhaustive team search handles a tiny instance") {
  const ProblemSpec p = make_random_problem(5, 2, 1, 2, 2, 2, 2);
  const oracle::TeamSearchResult team = oracle::enumerate_team_optimal(p);
  CHECK(team.profiles_searched > 0);
  CHECK(oracle::exact_payoff(p, team.profile) ==
        Catch::Approx(team.payoff).margin(1e-12));
  // No strategy beats the exhaustive optimum, in particular not these.
  for (uint64_t seed : {51ull, 52ull, 53ull}) {
    const StrategyProfile g = make_random_profile(p, seed);
    CHECK(team.payoff <= oracle::exact_payoff(p, g) + 1e-12);
  }
}
