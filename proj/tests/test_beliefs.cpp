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

#include <catch2/catch_amalgamated.hpp>

#include "decpomdp/beliefs.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/oracle.hpp"

using namespace decpomdp;

namespace {
ProblemSpec degenerate_chain() {
  // Two states, one agent, deterministic identity observations, identity
  // transition, all mass on the first state: the second observation can
  // never occur.
  ProblemSpec p;
  p.horizon = 2;
  p.delay = 1;
  p.states = {"a", "b"};
  p.agents.push_back({{"ya", "yb"}, {"u"}});
  p.allocate();
  p.initial = {1.0, 0.0};
  for (int x = 0; x < 2; ++x) {
    p.obs1_ref(0, x, x) = 1.0;
    p.trans_ref(x, 0, x) = 1.0;
    p.obs_ref(0, x, 0, x) = 1.0;
    p.cost_ref(0, x, 0) = 1.0;
    p.cost_ref(1, x, 0) = 1.0;
  }
  return p;
}
}  // namespace

TEST_CASE("initial private posterior matches a hand Bayes computation") {
  const ProblemSpec p = build_paper_example();
  // Agent 1 sees o2 at stage 1. P(state s1 | o2) = .7*.1/(.7*.1+.3*.9).
  const PrivatePosterior xi = init_private_posterior(p, 0, 1);
  REQUIRE_FALSE(xi.off_support);
  REQUIRE(xi.p.size() == 4);  // state times the other agent's observation
  const double px0 = 7.0 / 34.0;
  CHECK(xi.p[0 * 2 + 0] == Catch::Approx(px0 * 0.7).epsilon(1e-14));
  CHECK(xi.p[0 * 2 + 0] == Catch::Approx(0.14411764705882352).epsilon(1e-12));
  CHECK(xi.p[0 * 2 + 1] == Catch::Approx(px0 * 0.3).epsilon(1e-14));
  CHECK(xi.p[1 * 2 + 0] == Catch::Approx((1 - px0) * 0.3).epsilon(1e-14));
  CHECK(xi.p[1 * 2 + 1] == Catch::Approx((1 - px0) * 0.7).epsilon(1e-14));

  double mass = 0.0;
  for (double v : xi.p) mass += v;
  CHECK(mass == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("posterior update agrees with exhaustive Bayes on one extension") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_default_profile(p);
  InfoRealization r0;
  r0.agent = 0;
  r0.stage = 0;
  r0.priv.obs = {1};
  const PrivatePosterior xi0 = init_private_posterior(p, 0, 1);
  // No reveal on the step from stage 1 to stage 2 under delay 2.
  const PrivatePosterior xi1 =
      update_private_posterior(p, g, xi0, r0, /*u_own=*/1, /*y_next=*/0,
                               /*revealed_obs=*/{}, /*revealed_act=*/{});
  REQUIRE_FALSE(xi1.off_support);

  const InfoRealization r1 = extend_info(p, r0, 1, 0, {}, {});
  const PrivatePosterior ref = oracle::exhaustive_posterior(p, g, r1);
  REQUIRE_FALSE(ref.off_support);
  REQUIRE(ref.p.size() == xi1.p.size());
  for (size_t i = 0; i < ref.p.size(); ++i)
    CHECK(xi1.p[i] == Catch::Approx(ref.p[i]).margin(1e-13));
}

TEST_CASE("impossible observations are flagged, never NaN") {
  const ProblemSpec p = degenerate_chain();
  const PrivatePosterior good = init_private_posterior(p, 0, 0);
  const PrivatePosterior bad = init_private_posterior(p, 0, 1);
  CHECK_FALSE(good.off_support);
  CHECK(bad.off_support);
  for (double v : bad.p) CHECK(v == 0.0);

  const StrategyProfile g = make_default_profile(p);
  InfoRealization r;
  r.agent = 0;
  r.stage = 0;
  r.priv.obs = {0};
  // The chain stays in the first state, so observing "yb" next is impossible.
  const PrivatePosterior child = update_private_posterior(
      p, g, good, r, /*u_own=*/0, /*y_next=*/1, {0}, {});
  CHECK(child.off_support);
  for (double v : child.p) CHECK(v == 0.0);

  CHECK_THROWS_AS(
      update_private_posterior(p, g, bad, r, 0, 0, {1}, {}),
      std::logic_error);
}

TEST_CASE("stage measure is a probability over next-stage events") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_default_profile(p);
  InfoRealization r;
  r.agent = 1;
  r.stage = 0;
  r.priv.obs = {0};
  const PrivatePosterior xi = init_private_posterior(p, 1, 0);
  for (int u = 0; u < 2; ++u) {
    const std::vector<double> m = stage_measure(p, g, xi, r, u);
    double mass = 0.0;
    for (double v : m) mass += v;
    CHECK(mass == Catch::Approx(1.0).margin(1e-12));
  }
  const std::vector<double> pred = predictive_observation(p, g, xi, r, 0);
  double mass = 0.0;
  for (double v : pred) mass += v;
  CHECK(mass == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("delayed-state posterior reproduces the closed-form value") {
  const ProblemSpec p = build_paper_example();
  // Both agents observed o2 at stage 1 (shared at stage 3):
  // P(x1 = s1 | o2, o2) = .7*.1*.3 / (.7*.1*.3 + .3*.9*.7) = 0.1.
  const std::vector<double> theta = delayed_state_init(p, {1, 1});
  REQUIRE(theta.size() == 2);
  CHECK(theta[0] == Catch::Approx(0.1).margin(1e-14));
  CHECK(theta[1] == Catch::Approx(0.9).margin(1e-14));

  const DelayedStateTable table = compute_delayed_state_table(p);
  SharedHistory sh;
  sh.obs = {{1, 1}};
  sh.act = {{0, 0}};
  const long long d = SharedSpace(p, 2).encode(sh);
  REQUIRE_FALSE(table.theta[2][static_cast<size_t>(d)].empty());
  CHECK(table.theta[2][static_cast<size_t>(d)][0] ==
        Catch::Approx(0.1).margin(1e-14));

  // The delayed-state posterior only depends on the embedded actions, so
  // the same observations with other actions give a different but valid row.
  SharedHistory sh2;
  sh2.obs = {{1, 1}};
  sh2.act = {{1, 1}};
  const long long d2 = SharedSpace(p, 2).encode(sh2);
  REQUIRE_FALSE(table.theta[2][static_cast<size_t>(d2)].empty());
  CHECK(table.theta[2][static_cast<size_t>(d2)][0] ==
        Catch::Approx(0.1).margin(1e-14));  // update happens after the split
}

TEST_CASE("delayed-state table is empty when nothing is ever revealed") {
  ProblemSpec p = build_paper_example();
  p.delay = 3;
  const DelayedStateTable table = compute_delayed_state_table(p);
  for (const auto& row : table.theta) CHECK(row.empty());
}

TEST_CASE("joint posterior over private blocks stays normalized") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_default_profile(p);
  const SharedJointTable table = compute_shared_joint_table(p, g);
  for (int s = 0; s < p.horizon; ++s) {
    long long occupied = 0;
    for (const auto& pi : table.pi[s]) {
      if (pi.empty()) continue;
      ++occupied;
      double mass = 0.0;
      for (double v : pi) mass += v;
      CHECK(mass == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(occupied >= 1);
  }
  // Before any reveal there is exactly one (empty) shared block.
  CHECK(table.pi[0].size() == 1);
  CHECK(table.pi[1].size() == 1);
  CHECK(table.pi[2].size() == 16);
}

TEST_CASE("window slide drops the oldest entry exactly at the delay") {
  const ProblemSpec p = build_paper_example();  // delay 2
  PrivateHistory h;
  h.obs = {1};
  slide_private(p, 0, h, 0, 1);  // stage 0 -> 1: grows
  CHECK(h.obs == std::vector<int>{1, 0});
  CHECK(h.act == std::vector<int>{1});
  slide_private(p, 1, h, 1, 0);  // stage 1 -> 2: slides
  CHECK(h.obs == std::vector<int>{0, 1});
  CHECK(h.act == std::vector<int>{0});
}
