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

#include "decpomdp/model.hpp"

using namespace decpomdp;

TEST_CASE("bundled example has the published dimensions and kernels") {
  const ProblemSpec p = build_paper_example();
  REQUIRE(p.horizon == 3);
  REQUIRE(p.delay == 2);
  REQUIRE(p.num_states() == 2);
  REQUIRE(p.num_agents() == 2);
  REQUIRE(p.num_obs(0) == 2);
  REQUIRE(p.num_obs(1) == 2);
  REQUIRE(p.num_actions(0) == 2);
  REQUIRE(p.num_actions(1) == 2);
  REQUIRE(p.initial[0] == Catch::Approx(0.7).margin(0));
  REQUIRE(p.initial[1] == Catch::Approx(0.3).margin(0));

  // Observation rows do not depend on the previous action in this instance.
  for (int a = 0; a < p.num_joint_actions(); ++a) {
    CHECK(p.obs(0, 0, a, 0) == 0.9);
    CHECK(p.obs(0, 1, a, 0) == 0.1);
    CHECK(p.obs(1, 0, a, 0) == 0.7);
    CHECK(p.obs(1, 1, a, 0) == 0.3);
  }
  CHECK(p.obs1(0, 0, 0) == 0.9);
  CHECK(p.obs1(1, 1, 1) == 0.7);

  // Transition probability of the first state under each joint action.
  const std::vector<double> to_s1_from_s1 = {0.9, 0.7, 0.8, 0.7};
  const std::vector<double> to_s1_from_s2 = {0.2, 0.5, 0.7, 0.8};
  for (int a = 0; a < 4; ++a) {
    CHECK(p.trans(0, a, 0) == to_s1_from_s1[a]);
    CHECK(p.trans(0, a, 1) == Catch::Approx(1.0 - to_s1_from_s1[a]));
    CHECK(p.trans(1, a, 0) == to_s1_from_s2[a]);
  }

  // Costs are the sum of the two per-agent tables.
  for (int s = 0; s < 3; ++s) {
    CHECK(p.cost(s, 0, p.encode_actions({0, 0})) == 0.0);
    CHECK(p.cost(s, 0, p.encode_actions({0, 1})) == 1.0);
    CHECK(p.cost(s, 0, p.encode_actions({1, 0})) == 1.0);
    CHECK(p.cost(s, 0, p.encode_actions({1, 1})) == 2.0);
    CHECK(p.cost(s, 1, p.encode_actions({0, 0})) == 12.0);
    CHECK(p.cost(s, 1, p.encode_actions({0, 1})) == 10.0);
    CHECK(p.cost(s, 1, p.encode_actions({1, 0})) == 6.0);
    CHECK(p.cost(s, 1, p.encode_actions({1, 1})) == 4.0);
  }

  CHECK(validate_problem(p).empty());
}

TEST_CASE("joint action encoding is agent-major and invertible") {
  const ProblemSpec p = build_paper_example();
  std::vector<int> u;
  for (int a = 0; a < p.num_joint_actions(); ++a) {
    p.decode_actions(a, u);
    CHECK(p.encode_actions(u) == a);
  }
  CHECK(p.encode_actions({1, 0}) == 2);  // agent 1 is the most significant
}

TEST_CASE("validation flags broken probability rows") {
  ProblemSpec p = build_paper_example();
  p.trans_ref(0, 0, 0) = 0.5;  // row now sums to 0.6
  const std::vector<std::string> report = validate_problem(p);
  REQUIRE_FALSE(report.empty());
  bool mentions_row = false;
  for (const auto& r : report)
    if (r.find("transition row") != std::string::npos) mentions_row = true;
  CHECK(mentions_row);
}

TEST_CASE("validation checks the delay range") {
  ProblemSpec p = build_paper_example();
  p.delay = 4;  // exceeds the horizon
  CHECK_FALSE(validate_problem(p).empty());
  p.delay = 0;
  CHECK_FALSE(validate_problem(p).empty());
  p.delay = 3;  // equal to the horizon is allowed
  CHECK(validate_problem(p).empty());
}

TEST_CASE("random instances are valid and deterministic per seed") {
  const ProblemSpec a = make_random_problem(7, 2, 1, 2, 2, 2, 2);
  const ProblemSpec b = make_random_problem(7, 2, 1, 2, 2, 2, 2);
  const ProblemSpec c = make_random_problem(8, 2, 1, 2, 2, 2, 2);
  CHECK(validate_problem(a).empty());
  CHECK(a.transition == b.transition);
  CHECK(a.stage_cost == b.stage_cost);
  CHECK(a.transition != c.transition);

  double mass = 0.0;
  for (double v : a.initial) mass += v;
  CHECK(mass == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("product of independent single-agent chains is a valid instance") {
  std::vector<ProblemSpec> subs;
  subs.push_back(make_random_pomdp(21, 3, 2, 2, 2));
  subs.push_back(make_random_pomdp(22, 3, 2, 2, 2));
  REQUIRE(subs[0].num_agents() == 1);
  CHECK(validate_problem(subs[0]).empty());

  const ProblemSpec p = build_separated_example(subs, 2);
  REQUIRE(p.num_states() == 4);
  REQUIRE(p.num_agents() == 2);
  REQUIRE(p.horizon == 3);
  REQUIRE(p.delay == 2);
  CHECK(validate_problem(p).empty());
}
