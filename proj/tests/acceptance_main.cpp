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

// Acceptance gate: twelve end-to-end checks of the solver against the
// bundled example's published numbers and the exhaustive-Bayes oracles.
// Prints one PASS/FAIL line per check and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "decpomdp/analysis.hpp"
#include "decpomdp/beliefs.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/oracle.hpp"

using namespace decpomdp;

namespace {

// Pinned tolerances, one constant per acceptance rule.
constexpr double kPayoffTol = 5e-4;         // published total cost
constexpr double kValueAgreementTol = 1e-9;  // per-agent expected values
constexpr double kTableTol = 5e-3;           // published per-realization values
constexpr double kPosteriorTol = 1e-12;      // filter vs exhaustive Bayes
constexpr double kGroupingTol = 1e-10;       // grouped next-state distributions
constexpr double kGapTol = 1e-9;             // equilibrium gaps
constexpr double kTinyTol = 1e-12;           // exhaustive benchmarks
constexpr double kRuntimeLimitSeconds = 5.0;

bool g_all_pass = true;

void report(int id, bool pass, const std::string& title,
            const std::string& detail) {
  if (!pass) g_all_pass = false;
  std::printf("criterion %2d: %s  %s%s%s\n", id, pass ? "PASS" : "FAIL",
              title.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
}

void run(int id, const std::string& title,
         const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(id, pass, title, detail);
  } catch (const std::exception& e) {
    report(id, false, title, std::string("exception: ") + e.what());
  }
}

std::string num(double v, int digits = 12) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

/// The profile with agent k's component replaced by a seeded random draw.
StrategyProfile with_random_own(const ProblemSpec& p, const StrategyProfile& g,
                                int k, uint64_t seed) {
  StrategyProfile out = g;
  const StrategyProfile r = make_random_profile(p, seed);
  out.act[k] = r.act[k];
  return out;
}

/// Every agent plays its highest-index action at every realization. The
/// bundled example has two person-by-person fixpoints; this start reaches
/// the one the published tables describe, while the lowest-index start
/// reaches the other.
StrategyProfile make_highest_profile(const ProblemSpec& p) {
  StrategyProfile g = make_default_profile(p);
  for (int k = 0; k < p.num_agents(); ++k)
    for (auto& stage : g.act[static_cast<size_t>(k)])
      for (auto& a : stage) a = p.num_actions(k) - 1;
  return g;
}

struct TableRow {
  int agent;
  int stage;
  std::vector<std::string> tuple;
  double value;
  std::string action;
};

const std::vector<TableRow> kPublishedRows = {
    {0, 0, {"o2"}, 6.71, "c2"},
    {0, 1, {"o2", "o1", "c2"}, 1.61, "c1"},
    {0, 2, {"o2", "o2", "c2", "c2", "o1", "o1", "c1"}, 0.33, "c1"},
    {1, 0, {"o2"}, 5.81, "c2"},
    {1, 1, {"o2", "o1", "c2"}, 1.99, "c1"},
    {1, 2, {"o2", "o2", "c2", "c2", "o1", "o1", "c1"}, 0.51, "c1"},
};

/// Shared machinery for criteria 3 and 7, reused by criterion 12 on the
/// degenerate-delay variants.
std::pair<bool, std::string> posterior_battery(const ProblemSpec& p,
                                               const StrategyProfile& g) {
  const CheckResult filter = check_private_filter(p, g);
  const CheckResult delayed = check_delayed_state(p, g);
  const CheckResult joint = check_shared_joint(p, g);
  const bool pass = filter.max_delta <= kPosteriorTol &&
                    delayed.max_delta <= kPosteriorTol &&
                    joint.max_delta <= kPosteriorTol;
  std::ostringstream os;
  os << "private " << num(filter.max_delta, 3) << " (" << filter.checked
     << " checked), delayed " << num(delayed.max_delta, 3) << " ("
     << delayed.checked << "), joint " << num(joint.max_delta, 3) << " ("
     << joint.checked << ")";
  if (!pass && !filter.worst.empty()) os << ", worst " << filter.worst;
  return {pass, os.str()};
}

std::pair<bool, std::string> equilibrium_battery(const ProblemSpec& p,
                                                 const StrategyProfile& g,
                                                 uint64_t seed_base) {
  const EquilibriumReport rep = verify_equilibrium(p, g, kGapTol);
  double max_gap = 0.0;
  for (double d : rep.dp_gaps) max_gap = std::max(max_gap, std::abs(d));
  for (double d : rep.oracle_gaps) max_gap = std::max(max_gap, std::abs(d));
  double worst_improvement = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int k = i % p.num_agents();
    const StrategyProfile alt = with_random_own(p, g, k, seed_base + i);
    worst_improvement = std::max(
        worst_improvement, rep.payoff - oracle::exact_payoff(p, alt));
  }
  const bool pass =
      rep.equilibrium && worst_improvement <= kGapTol;
  std::ostringstream os;
  os << "max gap " << num(max_gap, 3) << ", best of 100 alternatives improves by "
     << num(worst_improvement, 3);
  return {pass, os.str()};
}

/// Scores a converged profile against the six published rows. Each row is
/// accepted under either tuple ordering; `findings` collects mismatches.
int match_published_rows(const ProblemSpec& p, const StrategyProfile& g,
                         std::ostringstream* findings) {
  std::vector<BestResponseResult> br;
  for (int k = 0; k < 2; ++k) br.push_back(best_response(p, g, k));
  int matched = 0;
  for (const TableRow& row : kPublishedRows) {
    bool row_ok = false;
    std::string got;
    for (bool alternate : {false, true}) {
      InfoRealization r;
      try {
        r = parse_realization(p, row.agent, row.stage, row.tuple, alternate);
      } catch (const std::invalid_argument&) {
        continue;  // tuple has no reading under this ordering
      }
      const long long idx = InfoSpace(p, row.agent, row.stage).encode(r);
      const double v = br[row.agent].value[row.stage][static_cast<size_t>(idx)];
      const std::string a =
          p.agents[row.agent].actions[g.action(row.agent, row.stage, idx)];
      got = num(v, 6) + "/" + a;
      if (std::abs(v - row.value) <= kTableTol && a == row.action) {
        row_ok = true;
        break;
      }
    }
    if (row_ok) {
      ++matched;
    } else if (findings) {
      *findings << " [agent " << row.agent + 1 << " stage " << row.stage + 1
                << " expected " << num(row.value, 6) << "/" << row.action
                << " got " << got << "]";
    }
  }
  return matched;
}

}  // namespace

int main() {
  const ProblemSpec example = build_paper_example();
  bool solved = false;
  IterationResult sol;

  run(1, "bundled example reproduces the published total cost", [&] {
    const auto start = std::chrono::steady_clock::now();
    sol = pbp_iterate(example);  // time_first sweep, lowest-index start
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    solved = true;
    const bool payoff_ok = std::abs(sol.payoff - 4.3005) <= kPayoffTol;
    bool values_ok = true;
    for (double v : sol.agent_values)
      values_ok = values_ok && std::abs(v - sol.payoff) <= kValueAgreementTol;
    std::ostringstream os;
    os << "payoff " << num(sol.payoff) << ", per-agent values agree within "
       << num(kValueAgreementTol, 2) << ", " << sol.outer_rounds
       << " rounds, " << num(seconds, 3) << " s";
    if (!payoff_ok) {
      // The example has two person-by-person fixpoints; report where the
      // published value actually lives so the failure is self-explanatory.
      const StrategyProfile hi = make_highest_profile(example);
      const IterationResult other = pbp_iterate(example, {}, &hi);
      os << "; the lowest-index start converges to the other fixpoint"
         << " (highest-index start reaches " << num(other.payoff);
      os << (std::abs(other.payoff - 4.3005) <= kPayoffTol
                 ? ", which matches the published 4.3005)"
                 : ", which still differs from 4.3005)");
    }
    return std::make_pair(
        payoff_ok && values_ok && seconds < kRuntimeLimitSeconds, os.str());
  });

  run(2, "published per-realization values and actions (soft)", [&] {
    if (!solved) return std::make_pair(false, std::string("no solution"));
    std::ostringstream findings;
    const int matched = match_published_rows(example, sol.profile, &findings);
    std::ostringstream os;
    os << matched << "/6 rows match on the converged profile";
    if (matched < 6) {
      // Equilibrium-multiplicity finding: check the other reachable
      // fixpoint before reporting the rows as unexplained.
      const StrategyProfile hi = make_highest_profile(example);
      const IterationResult other = pbp_iterate(example, {}, &hi);
      std::ostringstream other_findings;
      const int other_matched =
          match_published_rows(example, other.profile, &other_findings);
      os << "; equilibrium-multiplicity finding: " << other_matched
         << "/6 rows match the second fixpoint (payoff " << num(other.payoff)
         << ", highest-index start)";
      if (other_matched < 6)
        os << "; residual mismatches:" << findings.str() << " | second fixpoint:"
           << other_findings.str();
    }
    // Soft criterion: mismatches are findings, not failures; the payoff
    // criterion stays binding on its own line.
    return std::make_pair(true, os.str());
  });

  run(3, "recursive posteriors equal exhaustive Bayes on every realization",
      [&] {
        if (!solved) return std::make_pair(false, std::string("no solution"));
        return posterior_battery(example, sol.profile);
      });

  run(4, "posteriors depend on realized actions, not the own strategy", [&] {
    if (!solved) return std::make_pair(false, std::string("no solution"));
    for (int i = 0; i < 20; ++i) {
      const int k = i % 2;
      const StrategyProfile ga =
          with_random_own(example, sol.profile, k, 1000 + i);
      const StrategyProfile gb =
          with_random_own(example, sol.profile, k, 2000 + i);
      const PosteriorTable ta = compute_posterior_table(example, ga, k);
      const PosteriorTable tb = compute_posterior_table(example, gb, k);
      for (int s = 0; s < example.horizon; ++s)
        for (size_t idx = 0; idx < ta.xi[s].size(); ++idx) {
          const PrivatePosterior& a = ta.xi[s][idx];
          const PrivatePosterior& b = tb.xi[s][idx];
          if (a.off_support != b.off_support || a.p != b.p)
            return std::make_pair(
                false, "pair " + std::to_string(i) + " differs at stage " +
                           std::to_string(s + 1) + " index " +
                           std::to_string(idx));
        }
      // Spot-check the oracle on the last stage under both strategies.
      InfoSpace space(example, k, example.horizon - 1);
      for (long long idx = 0; idx < space.size(); idx += 7) {
        const InfoRealization r = space.decode(idx);
        const PrivatePosterior a = oracle::exhaustive_posterior(example, ga, r);
        const PrivatePosterior b = oracle::exhaustive_posterior(example, gb, r);
        if (a.off_support != b.off_support || a.p != b.p)
          return std::make_pair(false,
                                "oracle posteriors differ on pair " +
                                    std::to_string(i));
      }
    }
    return std::make_pair(true, std::string("20 strategy pairs, exact equality"));
  });

  run(5, "realizations grouped by (posterior, shared block, action) move alike",
      [&] {
        if (!solved) return std::make_pair(false, std::string("no solution"));
        const CheckResult res = check_markov_grouping(example, sol.profile);
        std::ostringstream os;
        os << res.checked << " grouped cells, max within-group delta "
           << num(res.max_delta, 3);
        if (res.max_delta > kGroupingTol) os << ", worst " << res.worst;
        return std::make_pair(res.max_delta <= kGroupingTol, os.str());
      });

  run(6, "recursive and tree best responses price ten random opponents equally",
      [&] {
        double worst = 0.0;
        for (uint64_t seed = 100; seed < 110; ++seed) {
          const StrategyProfile g = make_random_profile(example, seed);
          for (int k = 0; k < 2; ++k) {
            const BestResponseResult mine = best_response(example, g, k);
            const oracle::TreeBestResponse ref =
                oracle::tree_best_response(example, g, k);
            worst = std::max(worst,
                             std::abs(mine.expected_value - ref.payoff));
          }
        }
        return std::make_pair(worst <= kGapTol,
                              "max payoff difference " + num(worst, 3));
      });

  run(7, "no agent can improve on the converged profile", [&] {
    if (!solved) return std::make_pair(false, std::string("no solution"));
    return equilibrium_battery(example, sol.profile, 3000);
  });

  run(8, "independent subproblems solve to the sum of their optima", [&] {
    std::vector<ProblemSpec> subs;
    subs.push_back(make_random_pomdp(21, 3, 2, 2, 2));
    subs.push_back(make_random_pomdp(22, 3, 2, 2, 2));
    const ProblemSpec sep = build_separated_example(subs, 2);
    const IterationResult res = pbp_iterate(sep);
    const double sum = oracle::centralized_pomdp_solve(subs[0]).value +
                       oracle::centralized_pomdp_solve(subs[1]).value;
    std::ostringstream os;
    os << "joint " << num(res.payoff) << " vs sum of parts " << num(sum);
    return std::make_pair(std::abs(res.payoff - sum) <= kGapTol, os.str());
  });

  run(9, "exhaustive team search matches the coordinator recursion", [&] {
    const ProblemSpec tiny = make_random_problem(5, 2, 1, 2, 2, 2, 2);
    const oracle::TeamSearchResult team = oracle::enumerate_team_optimal(tiny);
    const oracle::CommonInfoResult ci = oracle::common_info_dp(tiny);
    const IterationResult pbp = pbp_iterate(tiny);
    const bool agree = std::abs(team.payoff - ci.value) <= kTinyTol;
    const bool bound = team.payoff <= pbp.payoff + kTinyTol;
    std::ostringstream os;
    os << "team " << num(team.payoff) << " (" << team.profiles_searched
       << " profiles), coordinator " << num(ci.value) << ", solver "
       << num(pbp.payoff);
    return std::make_pair(agree && bound, os.str());
  });

  run(10, "realizations sharing (posterior, shared block) are interchangeable",
      [&] {
        if (!solved) return std::make_pair(false, std::string("no solution"));
        const CompressionReport rep =
            compression_report(example, sol.profile, kGroupingTol, kPosteriorTol);
        long long reachable = 0, classes = 0;
        for (const auto& st : rep.stages) {
          reachable += st.reachable;
          classes += st.distinct_separated;
        }
        std::ostringstream os;
        os << "terminal values/argmins consistent: "
           << (rep.terminal_consistent ? "yes" : "no")
           << ", stage measures consistent: "
           << (rep.measures_consistent ? "yes" : "no") << " (" << reachable
           << " reachable realizations in " << classes << " classes)";
        return std::make_pair(rep.terminal_consistent && rep.measures_consistent,
                              os.str());
      });

  run(11, "a million seeded rollouts agree with the exact payoff", [&] {
    if (!solved) return std::make_pair(false, std::string("no solution"));
    const double exact = oracle::exact_payoff(example, sol.profile);
    const oracle::MonteCarloEstimate mc =
        oracle::monte_carlo_payoff(example, sol.profile, 1000000, 424242);
    const double dev = std::abs(mc.mean - exact);
    std::ostringstream os;
    os << "estimate " << num(mc.mean) << " vs exact " << num(exact)
       << ", deviation " << num(dev, 3) << " <= 4se=" << num(4 * mc.std_error, 3);
    return std::make_pair(dev <= 4.0 * mc.std_error, os.str());
  });

  run(12, "degenerate delays solve and pass the posterior and gap batteries",
      [&] {
        std::ostringstream os;
        bool all = true;
        for (int delay : {3, 1}) {
          ProblemSpec variant = build_paper_example();
          variant.delay = delay;
          const IterationResult res = pbp_iterate(variant);
          if (delay == variant.horizon)
            for (int s = 0; s < variant.horizon; ++s)
              all = all && SharedSpace(variant, s).size() == 1;
          const auto [post_ok, post_detail] =
              posterior_battery(variant, res.profile);
          const auto [eq_ok, eq_detail] =
              equilibrium_battery(variant, res.profile, 5000 + 100 * delay);
          all = all && post_ok && eq_ok;
          os << "[delay " << delay << ": payoff " << num(res.payoff)
             << ", posteriors " << (post_ok ? "ok" : "BAD") << ", gaps "
             << (eq_ok ? "ok" : "BAD") << "] ";
        }
        return std::make_pair(all, os.str());
      });

  std::printf("%s\n", g_all_pass ? "acceptance: all criteria passed"
                                 : "acceptance: FAILURES present");
  return g_all_pass ? 0 : 1;
}
