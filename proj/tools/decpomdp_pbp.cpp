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

// Command-line front end: solve, verify, export, and oracle subcommands
// over built-in scenarios or problem files.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decpomdp/analysis.hpp"
#include "decpomdp/beliefs.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/io.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/oracle.hpp"

namespace {

using decpomdp::ordered_json;

// Pinned report tolerances.
constexpr double kPosteriorTol = 1e-12;
constexpr double kGroupingTol = 1e-10;

struct Options {
  std::string scenario = "paper_example";
  std::string file;
  std::string mode = "time_first";
  int max_outer = 100;
  std::uint64_t seed = 1;
  std::string init = "default";
  int threads = 1;
  std::string out;
  std::string format = "json";
  std::string strategy_path;
  std::string what = "values";
  long long samples = 100000;
  double tolerance = 1e-9;
};

decpomdp::ProblemSpec make_problem(const Options& o) {
  if (!o.file.empty()) return decpomdp::load_problem_file(o.file);
  if (o.scenario == "paper_example") return decpomdp::build_paper_example();
  if (o.scenario == "separated") {
    std::vector<decpomdp::ProblemSpec> subs;
    subs.push_back(decpomdp::make_random_pomdp(o.seed, 3, 2, 2, 2));
    subs.push_back(decpomdp::make_random_pomdp(o.seed + 1, 3, 2, 2, 2));
    return decpomdp::build_separated_example(subs, 2);
  }
  // "random": a small two-agent instance with unit delay.
  return decpomdp::make_random_problem(o.seed, 2, 1, 2, 2, 2, 2);
}

ordered_json problem_descriptor(const Options& o) {
  ordered_json d;
  if (!o.file.empty())
    d["file"] = o.file;
  else
    d["scenario"] = o.scenario;
  return d;
}

decpomdp::IterationResult run_solver(const decpomdp::ProblemSpec& p,
                                     const Options& o) {
  decpomdp::IterationOptions opts;
  opts.mode = o.mode == "full_sweep" ? decpomdp::SweepMode::kFullSweep
                                     : decpomdp::SweepMode::kTimeFirst;
  opts.max_outer = o.max_outer;
  opts.threads = o.threads;
  if (o.init == "random") {
    const decpomdp::StrategyProfile start =
        decpomdp::make_random_profile(p, o.seed + 1);
    return decpomdp::pbp_iterate(p, opts, &start);
  }
  if (o.init == "highest") {
    decpomdp::StrategyProfile start = decpomdp::make_default_profile(p);
    for (int k = 0; k < p.num_agents(); ++k)
      for (auto& stage : start.act[static_cast<size_t>(k)])
        for (auto& a : stage) a = p.num_actions(k) - 1;
    return decpomdp::pbp_iterate(p, opts, &start);
  }
  return decpomdp::pbp_iterate(p, opts);
}

void emit_report(const Options& o, const ordered_json& report,
                 const std::string& summary) {
  if (o.out.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  decpomdp::write_text_file(o.out, report.dump(2) + "\n");
  std::cout << summary << " -> " << o.out << "\n";
}

void emit_text(const Options& o, const std::string& text,
               const std::string& summary) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  decpomdp::write_text_file(o.out, text);
  std::cout << summary << " -> " << o.out << "\n";
}

ordered_json check_to_json(const decpomdp::CheckResult& c, double tol) {
  ordered_json j;
  j["checked"] = c.checked;
  j["max_delta"] = c.max_delta;
  j["tolerance"] = tol;
  j["pass"] = c.max_delta <= tol;
  if (!c.worst.empty()) j["worst"] = c.worst;
  return j;
}

ordered_json equilibrium_to_json(const decpomdp::EquilibriumReport& rep) {
  ordered_json j;
  j["payoff"] = rep.payoff;
  j["dp_gaps"] = rep.dp_gaps;
  j["oracle_gaps"] = rep.oracle_gaps;
  j["tolerance"] = rep.tolerance;
  j["pass"] = rep.equilibrium;
  return j;
}

ordered_json compression_to_json(const decpomdp::CompressionReport& rep) {
  ordered_json j;
  j["actions_factor"] = rep.actions_factor;
  j["terminal_consistent"] = rep.terminal_consistent;
  j["measures_consistent"] = rep.measures_consistent;
  ordered_json rows = ordered_json::array();
  for (const auto& st : rep.stages) {
    ordered_json row;
    row["agent"] = st.agent + 1;
    row["stage"] = st.stage + 1;
    row["reachable"] = st.reachable;
    row["distinct_full"] = st.distinct_full;
    row["distinct_separated"] = st.distinct_separated;
    row["distinct_info_state"] = st.distinct_info_state;
    row["actions_factor"] = st.actions_factor;
    row["terminal_consistent"] = st.terminal_consistent;
    row["measures_consistent"] = st.measures_consistent;
    rows.push_back(row);
  }
  j["stages"] = rows;
  return j;
}

int cmd_solve(const Options& o) {
  const decpomdp::ProblemSpec p = make_problem(o);
  const decpomdp::IterationResult res = run_solver(p, o);
  const decpomdp::EquilibriumReport eq =
      decpomdp::verify_equilibrium(p, res.profile, o.tolerance, o.threads);

  ordered_json report;
  report["command"] = "solve";
  report["problem"] = problem_descriptor(o);
  report["mode"] = o.mode;
  report["outer_rounds"] = res.outer_rounds;
  report["payoff"] = res.payoff;
  report["agent_values"] = res.agent_values;
  report["equilibrium"] = equilibrium_to_json(eq);
  report["strategy"] = decpomdp::strategy_to_json(p, res.profile);

  std::cout << "payoff " << decpomdp::double_text(res.payoff) << " after "
            << res.outer_rounds << " outer rounds (" << o.mode << ")\n";
  emit_report(o, report, "report");
  if (!o.strategy_path.empty()) {
    decpomdp::save_strategy_file(p, res.profile, o.strategy_path);
    std::cout << "strategy -> " << o.strategy_path << "\n";
  }
  return eq.equilibrium ? 0 : 1;
}

int cmd_verify(const Options& o) {
  const decpomdp::ProblemSpec p = make_problem(o);
  decpomdp::StrategyProfile g;
  std::string source;
  if (!o.strategy_path.empty()) {
    g = decpomdp::load_strategy_file(p, o.strategy_path);
    source = o.strategy_path;
  } else {
    g = run_solver(p, o).profile;
    source = "solve";
  }

  const decpomdp::EquilibriumReport eq =
      decpomdp::verify_equilibrium(p, g, o.tolerance, o.threads);
  const decpomdp::CheckResult filter = decpomdp::check_private_filter(p, g);
  const decpomdp::CheckResult delayed = decpomdp::check_delayed_state(p, g);
  const decpomdp::CheckResult joint = decpomdp::check_shared_joint(p, g);
  const decpomdp::CheckResult markov = decpomdp::check_markov_grouping(p, g);
  const decpomdp::CompressionReport comp = decpomdp::compression_report(p, g);

  const bool pass = eq.equilibrium && filter.max_delta <= kPosteriorTol &&
                    delayed.max_delta <= kPosteriorTol &&
                    joint.max_delta <= kPosteriorTol &&
                    markov.max_delta <= kGroupingTol && comp.actions_factor &&
                    comp.terminal_consistent && comp.measures_consistent;

  ordered_json report;
  report["command"] = "verify";
  report["problem"] = problem_descriptor(o);
  report["strategy_source"] = source;
  report["payoff"] = eq.payoff;
  report["equilibrium"] = equilibrium_to_json(eq);
  report["private_posterior_check"] = check_to_json(filter, kPosteriorTol);
  report["delayed_state_check"] = check_to_json(delayed, kPosteriorTol);
  report["joint_posterior_check"] = check_to_json(joint, kPosteriorTol);
  report["markov_grouping_check"] = check_to_json(markov, kGroupingTol);
  report["compression"] = compression_to_json(comp);
  report["pass"] = pass;

  std::cout << (pass ? "PASS" : "FAIL") << " payoff "
            << decpomdp::double_text(eq.payoff) << "\n";
  emit_report(o, report, "report");
  return pass ? 0 : 1;
}

// The three realizations per agent singled out in the bundled example's
// reference strategy table (stages one through three).
const std::vector<std::vector<std::string>> kNamedSlices = {
    {"o2"},
    {"o2", "o1", "c2"},
    {"o2", "o2", "c2", "c2", "o1", "o1", "c1"}};

int cmd_export(const Options& o) {
  const decpomdp::ProblemSpec p = make_problem(o);
  const decpomdp::IterationResult res = run_solver(p, o);
  const decpomdp::StrategyProfile& g = res.profile;

  if (o.what == "strategy") {
    if (o.format == "csv") {
      std::string text = decpomdp::csv_line({"agent", "stage", "realization", "action"});
      for (int k = 0; k < p.num_agents(); ++k)
        for (int s = 0; s < p.horizon; ++s) {
          decpomdp::InfoSpace space(p, k, s);
          for (long long idx = 0; idx < space.size(); ++idx) {
            const decpomdp::InfoRealization r = space.decode(idx);
            text += decpomdp::csv_line(
                {std::to_string(k + 1), std::to_string(s + 1),
                 decpomdp::realization_key(p, r),
                 p.agents[k].actions[g.action(k, s, idx)]});
          }
        }
      emit_text(o, text, "strategy csv");
    } else {
      ordered_json report = decpomdp::strategy_to_json(p, g);
      emit_report(o, report, "strategy");
    }
    return 0;
  }

  if (o.what == "values" || o.what == "sample_values") {
    // Fixpoint value tables: a best-response pass against the converged
    // profile reproduces the profile's own expected cost-to-go.
    std::vector<decpomdp::BestResponseResult> br;
    for (int k = 0; k < p.num_agents(); ++k)
      br.push_back(decpomdp::best_response(p, g, k, o.threads));

    if (o.what == "sample_values") {
      if (!o.file.empty() || o.scenario != "paper_example")
        throw decpomdp::SchemaError(
            "sample_values export is defined for the paper_example scenario only");
      ordered_json rows = ordered_json::array();
      for (int k = 0; k < p.num_agents(); ++k)
        for (int s = 0; s < p.horizon; ++s) {
          const decpomdp::InfoRealization r =
              decpomdp::parse_realization(p, k, s, kNamedSlices[s]);
          const long long idx = decpomdp::InfoSpace(p, k, s).encode(r);
          ordered_json row;
          row["agent"] = k + 1;
          row["stage"] = s + 1;
          row["realization"] = decpomdp::realization_labels(p, r);
          row["value"] = br[k].value[s][static_cast<size_t>(idx)];
          row["action"] = p.agents[k].actions[g.action(k, s, idx)];
          rows.push_back(row);
        }
      if (o.format == "csv") {
        std::string text = decpomdp::csv_line(
            {"agent", "stage", "realization", "value", "action"});
        for (const auto& row : rows)
          text += decpomdp::csv_line(
              {row["agent"].dump(), row["stage"].dump(),
               "(" + [&] {
                 std::string t;
                 for (const auto& l : row["realization"]) {
                   if (!t.empty()) t += ",";
                   t += l.get<std::string>();
                 }
                 return t;
               }() + ")",
               decpomdp::double_text(row["value"].get<double>()),
               row["action"].get<std::string>()});
        emit_text(o, text, "sample_values csv");
      } else {
        ordered_json report;
        report["command"] = "export";
        report["what"] = "sample_values";
        report["rows"] = rows;
        emit_report(o, report, "sample_values");
      }
      return 0;
    }

    // Reachable realizations only: unreachable slots have no defined value.
    ordered_json rows = ordered_json::array();
    std::string text = decpomdp::csv_line(
        {"agent", "stage", "realization", "action", "value"});
    for (int k = 0; k < p.num_agents(); ++k)
      for (int s = 0; s < p.horizon; ++s) {
        decpomdp::InfoSpace space(p, k, s);
        for (long long idx = 0; idx < space.size(); ++idx) {
          if (br[k].posteriors.xi[s][static_cast<size_t>(idx)].off_support)
            continue;
          const decpomdp::InfoRealization r = space.decode(idx);
          const double v = br[k].value[s][static_cast<size_t>(idx)];
          if (o.format == "csv") {
            text += decpomdp::csv_line(
                {std::to_string(k + 1), std::to_string(s + 1),
                 decpomdp::realization_key(p, r),
                 p.agents[k].actions[g.action(k, s, idx)],
                 decpomdp::double_text(v)});
          } else {
            ordered_json row;
            row["agent"] = k + 1;
            row["stage"] = s + 1;
            row["realization"] = decpomdp::realization_labels(p, r);
            row["action"] = p.agents[k].actions[g.action(k, s, idx)];
            row["value"] = v;
            rows.push_back(row);
          }
        }
      }
    if (o.format == "csv") {
      emit_text(o, text, "values csv");
    } else {
      ordered_json report;
      report["command"] = "export";
      report["what"] = "values";
      report["rows"] = rows;
      emit_report(o, report, "values");
    }
    return 0;
  }

  // "posteriors": one map per agent and stage from canonical realization
  // tuples to flat posterior vectors (state-major over the other agents'
  // window block), reachable realizations only.
  if (o.format == "csv") {
    std::string text = decpomdp::csv_line(
        {"agent", "stage", "realization", "component", "probability"});
    for (int k = 0; k < p.num_agents(); ++k) {
      const decpomdp::PosteriorTable tab = decpomdp::compute_posterior_table(p, g, k);
      for (int s = 0; s < p.horizon; ++s) {
        decpomdp::InfoSpace space(p, k, s);
        for (long long idx = 0; idx < space.size(); ++idx) {
          const decpomdp::PrivatePosterior& xi = tab.xi[s][static_cast<size_t>(idx)];
          if (xi.off_support) continue;
          const std::string key = decpomdp::realization_key(p, space.decode(idx));
          for (size_t e = 0; e < xi.p.size(); ++e)
            text += decpomdp::csv_line({std::to_string(k + 1),
                                        std::to_string(s + 1), key,
                                        std::to_string(e),
                                        decpomdp::double_text(xi.p[e])});
        }
      }
    }
    emit_text(o, text, "posteriors csv");
    return 0;
  }
  ordered_json agents = ordered_json::array();
  for (int k = 0; k < p.num_agents(); ++k) {
    const decpomdp::PosteriorTable tab = decpomdp::compute_posterior_table(p, g, k);
    ordered_json stages = ordered_json::array();
    for (int s = 0; s < p.horizon; ++s) {
      decpomdp::InfoSpace space(p, k, s);
      ordered_json map = ordered_json::object();
      for (long long idx = 0; idx < space.size(); ++idx) {
        const decpomdp::PrivatePosterior& xi = tab.xi[s][static_cast<size_t>(idx)];
        if (xi.off_support) continue;
        map[decpomdp::realization_key(p, space.decode(idx))] = xi.p;
      }
      ordered_json entry;
      entry["stage"] = s + 1;
      entry["map"] = map;
      stages.push_back(entry);
    }
    ordered_json a;
    a["agent"] = k + 1;
    a["stages"] = stages;
    agents.push_back(a);
  }
  ordered_json report;
  report["command"] = "export";
  report["what"] = "posteriors";
  report["agents"] = agents;
  emit_report(o, report, "posteriors");
  return 0;
}

int cmd_oracle(const Options& o) {
  const decpomdp::ProblemSpec p = make_problem(o);
  const decpomdp::IterationResult res = run_solver(p, o);
  const decpomdp::StrategyProfile& g = res.profile;

  ordered_json report;
  report["command"] = "oracle";
  report["problem"] = problem_descriptor(o);
  report["dp_payoff"] = res.payoff;
  report["exact_payoff"] = decpomdp::oracle::exact_payoff(p, g);

  const std::vector<decpomdp::oracle::Trajectory> law =
      decpomdp::oracle::joint_law(p, g);
  double mass = 0.0;
  for (const auto& tr : law) mass += tr.prob;
  ordered_json lawj;
  lawj["count"] = static_cast<long long>(law.size());
  lawj["total_mass"] = mass;
  report["trajectories"] = lawj;

  const decpomdp::oracle::MonteCarloEstimate mc =
      decpomdp::oracle::monte_carlo_payoff(p, g, o.samples, o.seed);
  ordered_json mcj;
  mcj["samples"] = mc.samples;
  mcj["mean"] = mc.mean;
  mcj["std_error"] = mc.std_error;
  mcj["seed"] = o.seed;
  report["monte_carlo"] = mcj;

  try {
    const decpomdp::oracle::TeamSearchResult team =
        decpomdp::oracle::enumerate_team_optimal(p);
    ordered_json tj;
    tj["payoff"] = team.payoff;
    tj["profiles_searched"] = team.profiles_searched;
    report["team_search"] = tj;
  } catch (const std::exception& e) {
    report["team_search"] = ordered_json{{"skipped", e.what()}};
  }
  try {
    const decpomdp::oracle::CommonInfoResult ci =
        decpomdp::oracle::common_info_dp(p);
    report["common_info"] = ordered_json{{"value", ci.value}};
  } catch (const std::exception& e) {
    report["common_info"] = ordered_json{{"skipped", e.what()}};
  }

  std::cout << "exact payoff " << decpomdp::double_text(report["exact_payoff"].get<double>())
            << " over " << law.size() << " trajectories\n";
  emit_report(o, report, "report");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon solver for decentralized POMDPs with delayed "
               "information sharing"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario,
                    "Built-in scenario (paper_example, separated, random)")
        ->check(CLI::IsMember({"paper_example", "separated", "random"}));
    sub->add_option("--file", o.file, "Problem description file (JSON)");
    sub->add_option("--mode", o.mode, "Sweep order of the solver")
        ->check(CLI::IsMember({"time_first", "full_sweep"}));
    sub->add_option("--max-outer", o.max_outer, "Outer iteration bound");
    sub->add_option("--seed", o.seed, "Seed for random scenarios and draws");
    sub->add_option("--init", o.init,
                    "Initial strategy profile (default = lowest-index action "
                    "everywhere, highest = highest-index, random = seeded draw)")
        ->check(CLI::IsMember({"default", "highest", "random"}));
    sub->add_option("--threads", o.threads, "Worker threads for stage sweeps");
    sub->add_option("--out", o.out, "Write the report to this path");
    sub->add_option("--format", o.format, "Output format for export")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--tolerance", o.tolerance, "Equilibrium gap tolerance");
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "Solve for a person-by-person optimal strategy profile");
  add_common(solve);
  solve->add_option("--strategy", o.strategy_path,
                    "Also write the strategy profile to this path");

  CLI::App* verify = app.add_subcommand(
      "verify", "Check a profile against the exhaustive-Bayes oracle");
  add_common(verify);
  verify->add_option("--strategy", o.strategy_path,
                     "Strategy file to verify (default: solve first)");

  CLI::App* exp = app.add_subcommand("export", "Export solver artifacts");
  add_common(exp);
  exp->add_option("--what", o.what, "Artifact to export")
      ->check(CLI::IsMember({"values", "strategy", "posteriors", "sample_values"}));

  CLI::App* oracle = app.add_subcommand(
      "oracle", "Run the independent evaluation battery on the solution");
  add_common(oracle);
  oracle->add_option("--samples", o.samples, "Monte-Carlo rollout count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (o.format == "csv" && !exp->parsed()) {
    std::cerr << "error: --format csv applies to the export subcommand only\n";
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (verify->parsed()) return cmd_verify(o);
    if (exp->parsed()) return cmd_export(o);
    return cmd_oracle(o);
  } catch (const decpomdp::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
