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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "decpomdp/info.hpp"
#include "decpomdp/io.hpp"
#include "decpomdp/model.hpp"

using namespace decpomdp;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("problem specs survive a serialization round trip") {
  const ProblemSpec p = build_paper_example();
  const ordered_json j = problem_to_json(p);
  const ProblemSpec q = problem_from_json(j);
  CHECK(problem_to_json(q).dump() == j.dump());

  const std::string path = temp_path("decpomdp_roundtrip.json");
  save_problem_file(p, path);
  const ProblemSpec r = load_problem_file(path);
  CHECK(problem_to_json(r).dump() == j.dump());
  std::remove(path.c_str());
}

TEST_CASE("problem schema errors name the offending part") {
  const ordered_json good = problem_to_json(build_paper_example());

  SECTION("missing field") {
    ordered_json j = good;
    j.erase("horizon");
    CHECK_THROWS_WITH(problem_from_json(j),
                      Catch::Matchers::ContainsSubstring("horizon"));
  }
  SECTION("missing transition row") {
    ordered_json j = good;
    j["transition"].erase("(s1,c1,c1)");
    CHECK_THROWS_WITH(problem_from_json(j),
                      Catch::Matchers::ContainsSubstring("(s1,c1,c1)"));
  }
  SECTION("unexpected extra row") {
    ordered_json j = good;
    j["transition"]["(s3,c1,c1)"] = {0.5, 0.5};
    CHECK_THROWS_AS(problem_from_json(j), SchemaError);
  }
  SECTION("wrong pmf length") {
    ordered_json j = good;
    j["transition"]["(s1,c1,c1)"] = {1.0};
    CHECK_THROWS_AS(problem_from_json(j), SchemaError);
  }
  SECTION("invalid probability row") {
    ordered_json j = good;
    j["transition"]["(s1,c1,c1)"] = {0.4, 0.4};
    CHECK_THROWS_WITH(problem_from_json(j),
                      Catch::Matchers::ContainsSubstring("transition row"));
  }
  SECTION("malformed cost key") {
    ordered_json j = good;
    const ordered_json v = j["cost"]["(1,s1,c1,c1)"];
    j["cost"].erase("(1,s1,c1,c1)");
    j["cost"]["1,s1,c1,c1"] = v;
    CHECK_THROWS_AS(problem_from_json(j), SchemaError);
  }
}

TEST_CASE("unreadable and unparsable files raise schema errors") {
  CHECK_THROWS_AS(load_problem_file("/nonexistent/path.json"), SchemaError);

  const std::string path = temp_path("decpomdp_bad.json");
  write_text_file(path, "this is not json");
  CHECK_THROWS_WITH(load_problem_file(path),
                    Catch::Matchers::ContainsSubstring("parse error"));
  std::remove(path.c_str());
}

TEST_CASE("strategy files round trip and reject corrupted content") {
  const ProblemSpec p = build_paper_example();
  const StrategyProfile g = make_random_profile(p, 99);
  const ordered_json j = strategy_to_json(p, g);
  const StrategyProfile q = strategy_from_json(p, j);
  CHECK(q == g);

  const std::string path = temp_path("decpomdp_strategy.json");
  save_strategy_file(p, g, path);
  CHECK(load_strategy_file(p, path) == g);
  std::remove(path.c_str());

  SECTION("unknown action label") {
    ordered_json bad = j;
    bad["agents"][0]["stages"][0]["map"][0]["action"] = "c9";
    CHECK_THROWS_AS(strategy_from_json(p, bad), SchemaError);
  }
  SECTION("wrong horizon") {
    ordered_json bad = j;
    bad["horizon"] = 4;
    CHECK_THROWS_AS(strategy_from_json(p, bad), SchemaError);
  }
  SECTION("missing realization entry") {
    ordered_json bad = j;
    bad["agents"][0]["stages"][1]["map"].erase(0);
    CHECK_THROWS_AS(strategy_from_json(p, bad), SchemaError);
  }
}

TEST_CASE("csv cells quote separators and embedded quotes") {
  CHECK(csv_cell("plain") == "plain");
  CHECK(csv_cell("a,b") == "\"a,b\"");
  CHECK(csv_cell("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_line({"a", "b,c", "1.5"}) == "a,\"b,c\",1.5\n");
}

TEST_CASE("csv numbers use the same shortest form as json") {
  CHECK(double_text(0.1) == "0.1");
  CHECK(double_text(4.3005) == "4.3005");
  CHECK(double_text(1.0) == "1.0");
  CHECK(double_text(7.0 / 34.0) == ordered_json(7.0 / 34.0).dump());
}
