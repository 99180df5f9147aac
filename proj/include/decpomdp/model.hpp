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

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace decpomdp {

inline constexpr double kRowSumTolerance = 1e-12;

/// Observation and action labels of one agent, in declared order.
struct AgentSpaces {
  std::vector<std::string> obs;
  std::vector<std::string> actions;
};

/// A finite decentralized POMDP instance.
///
/// Stages are indexed 0..horizon-1 internally; file formats and printed
/// output use 1-based stage numbers. Spaces are time-invariant; the stage
/// cost table may vary with the stage. The first-stage observation kernel
/// is stored separately because no prior actions exist at stage 0.
///
/// Tensor layouts (row-major, big-endian joint action index):
///   transition  : [x][a][x']            size |X| * A * |X|
///   observation : per agent [x][a][y]   size |X| * A * |Y^k|
///   initial_obs : per agent [x][y]      size |X| * |Y^k|
///   stage_cost  : [t][x][a]             size n * |X| * A
struct ProblemSpec {
  int horizon = 0;  // n >= 1
  int delay = 0;    // T, 1 <= T <= n; T == n means no sharing
  std::vector<std::string> states;
  std::vector<AgentSpaces> agents;
  std::vector<double> initial;
  std::vector<std::vector<double>> initial_obs;
  std::vector<double> transition;
  std::vector<std::vector<double>> observation;
  std::vector<double> stage_cost;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_agents() const { return static_cast<int>(agents.size()); }
  int num_obs(int k) const { return static_cast<int>(agents[k].obs.size()); }
  int num_actions(int k) const {
    return static_cast<int>(agents[k].actions.size());
  }

  int num_joint_actions() const {
    int a = 1;
    for (const auto& ag : agents) a *= static_cast<int>(ag.actions.size());
    return a;
  }

  /// Joint action index with agent 0 most significant, so that the index
  /// order matches the (u^1,...,u^K) tuple order.
  int encode_actions(const std::vector<int>& u) const {
    int a = 0;
    for (int k = 0; k < num_agents(); ++k) a = a * num_actions(k) + u[k];
    return a;
  }
  void decode_actions(int a, std::vector<int>& u) const {
    const int kk = num_agents();
    u.resize(kk);
    for (int k = kk - 1; k >= 0; --k) {
      u[k] = a % num_actions(k);
      a /= num_actions(k);
    }
  }

  double trans(int x, int a, int x2) const {
    return transition[(static_cast<size_t>(x) * num_joint_actions() + a) *
                          num_states() +
                      x2];
  }
  double obs(int k, int x, int a, int y) const {
    return observation[k][(static_cast<size_t>(x) * num_joint_actions() + a) *
                              num_obs(k) +
                          y];
  }
  double obs1(int k, int x, int y) const {
    return initial_obs[k][static_cast<size_t>(x) * num_obs(k) + y];
  }
  double cost(int s, int x, int a) const {
    return stage_cost[(static_cast<size_t>(s) * num_states() + x) *
                          num_joint_actions() +
                      a];
  }

  double& trans_ref(int x, int a, int x2) {
    return transition[(static_cast<size_t>(x) * num_joint_actions() + a) *
                          num_states() +
                      x2];
  }
  double& obs_ref(int k, int x, int a, int y) {
    return observation[k][(static_cast<size_t>(x) * num_joint_actions() + a) *
                              num_obs(k) +
                          y];
  }
  double& obs1_ref(int k, int x, int y) {
    return initial_obs[k][static_cast<size_t>(x) * num_obs(k) + y];
  }
  double& cost_ref(int s, int x, int a) {
    return stage_cost[(static_cast<size_t>(s) * num_states() + x) *
                          num_joint_actions() +
                      a];
  }

  /// Allocates all tensors (zero-filled) from the declared spaces.
  void allocate() {
    const size_t nx = states.size();
    const size_t na = num_joint_actions();
    initial.assign(nx, 0.0);
    transition.assign(nx * na * nx, 0.0);
    stage_cost.assign(static_cast<size_t>(horizon) * nx * na, 0.0);
    observation.resize(agents.size());
    initial_obs.resize(agents.size());
    for (int k = 0; k < num_agents(); ++k) {
      observation[k].assign(nx * na * agents[k].obs.size(), 0.0);
      initial_obs[k].assign(nx * agents[k].obs.size(), 0.0);
    }
  }
};

namespace detail {

inline std::string label_tuple(const std::vector<std::string>& parts) {
  std::string s = "(";
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ",";
    s += parts[i];
  }
  s += ")";
  return s;
}

inline void check_pmf_row(const double* row, int len, const std::string& what,
                          std::vector<std::string>& out) {
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    if (row[i] < 0.0) {
      std::ostringstream os;
      os << what << ": negative entry " << row[i] << " at position " << i;
      out.push_back(os.str());
    }
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": row sum " << sum << " != 1 (tolerance 1e-12)";
    out.push_back(os.str());
  }
}

}  // namespace detail

/// Checks every invariant of a ProblemSpec and returns the list of
/// violations with table coordinates. An empty report means valid.
inline std::vector<std::string> validate_problem(const ProblemSpec& p) {
  std::vector<std::string> report;
  if (p.horizon < 1) report.push_back("horizon must be >= 1");
  if (p.num_agents() < 1) report.push_back("num_agents must be >= 1");
  if (p.delay < 1) report.push_back("delay must be >= 1");
  if (p.delay > p.horizon)
    report.push_back("delay exceeds horizon (T=" + std::to_string(p.delay) +
                     " > n=" + std::to_string(p.horizon) + ")");
  if (p.states.empty()) report.push_back("state space is empty");
  for (int k = 0; k < p.num_agents(); ++k) {
    if (p.agents[k].obs.empty())
      report.push_back("agent " + std::to_string(k + 1) +
                       ": observation space is empty");
    if (p.agents[k].actions.empty())
      report.push_back("agent " + std::to_string(k + 1) +
                       ": action space is empty");
  }
  if (!report.empty()) return report;  // dimensions below assume sane sizes

  const size_t nx = p.states.size();
  const size_t na = p.num_joint_actions();
  if (p.initial.size() != nx) report.push_back("initial: wrong length");
  if (p.transition.size() != nx * na * nx)
    report.push_back("transition: wrong tensor size");
  if (p.stage_cost.size() != static_cast<size_t>(p.horizon) * nx * na)
    report.push_back("cost: wrong tensor size");
  if (p.observation.size() != static_cast<size_t>(p.num_agents()) ||
      p.initial_obs.size() != static_cast<size_t>(p.num_agents()))
    report.push_back("observation tables: wrong agent count");
  else {
    for (int k = 0; k < p.num_agents(); ++k) {
      if (p.observation[k].size() != nx * na * p.agents[k].obs.size())
        report.push_back("observation[" + std::to_string(k + 1) +
                         "]: wrong tensor size");
      if (p.initial_obs[k].size() != nx * p.agents[k].obs.size())
        report.push_back("initial_obs[" + std::to_string(k + 1) +
                         "]: wrong tensor size");
    }
  }
  if (!report.empty()) return report;

  detail::check_pmf_row(p.initial.data(), static_cast<int>(nx), "initial",
                        report);
  std::vector<int> u;
  for (int x = 0; x < static_cast<int>(nx); ++x) {
    for (int a = 0; a < static_cast<int>(na); ++a) {
      p.decode_actions(a, u);
      std::vector<std::string> parts{p.states[x]};
      for (int k = 0; k < p.num_agents(); ++k)
        parts.push_back(p.agents[k].actions[u[k]]);
      detail::check_pmf_row(
          &p.transition[(static_cast<size_t>(x) * na + a) * nx],
          static_cast<int>(nx), "transition row " + detail::label_tuple(parts),
          report);
      for (int k = 0; k < p.num_agents(); ++k) {
        detail::check_pmf_row(
            &p.observation[k][(static_cast<size_t>(x) * na + a) *
                              p.agents[k].obs.size()],
            p.num_obs(k),
            "observation[" + std::to_string(k + 1) + "] row " +
                detail::label_tuple(parts),
            report);
      }
    }
    for (int k = 0; k < p.num_agents(); ++k) {
      detail::check_pmf_row(
          &p.initial_obs[k][static_cast<size_t>(x) * p.agents[k].obs.size()],
          p.num_obs(k),
          "initial_obs[" + std::to_string(k + 1) + "] row (" + p.states[x] +
              ")",
          report);
    }
  }
  return report;
}

/// Two-agent master-apprentice instance: n=3, T=2, two states, binary
/// observations and actions, action-independent observation channels and
/// an additive stage cost. Initial distribution (0.7, 0.3).
inline ProblemSpec build_paper_example() {
  ProblemSpec p;
  p.horizon = 3;
  p.delay = 2;
  p.states = {"s1", "s2"};
  p.agents = {{{"o1", "o2"}, {"c1", "c2"}}, {{"o1", "o2"}, {"c1", "c2"}}};
  p.allocate();
  p.initial = {0.7, 0.3};

  // Observation channels, independent of previous actions.
  const double q1[2][2] = {{0.9, 0.1}, {0.1, 0.9}};
  const double q2[2][2] = {{0.7, 0.3}, {0.3, 0.7}};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      p.obs1_ref(0, x, y) = q1[x][y];
      p.obs1_ref(1, x, y) = q2[x][y];
      for (int a = 0; a < 4; ++a) {
        p.obs_ref(0, x, a, y) = q1[x][y];
        p.obs_ref(1, x, a, y) = q2[x][y];
      }
    }

  // State transitions, rows by (x, u1, u2) with joint index u1*2+u2.
  const double s_next[2][4] = {{0.9, 0.7, 0.8, 0.7}, {0.2, 0.5, 0.7, 0.8}};
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 4; ++a) {
      p.trans_ref(x, a, 0) = s_next[x][a];
      p.trans_ref(x, a, 1) = 1.0 - s_next[x][a];
    }

  // Additive stage cost l(x,u1,u2) = l1(x,u1) + l2(x,u2), time-invariant.
  const double l1[2][2] = {{0.0, 1.0}, {8.0, 2.0}};
  const double l2[2][2] = {{0.0, 1.0}, {4.0, 2.0}};
  for (int t = 0; t < 3; ++t)
    for (int x = 0; x < 2; ++x)
      for (int u1 = 0; u1 < 2; ++u1)
        for (int u2 = 0; u2 < 2; ++u2)
          p.cost_ref(t, x, u1 * 2 + u2) = l1[x][u1] + l2[x][u2];
  return p;
}

/// Builds the product problem of K independent single-agent POMDPs: the
/// state space is the Cartesian product of the sub-states, the transition
/// and observation kernels factorize, and the stage cost is the sum of the
/// sub-costs. Each sub-spec must be a valid K=1 problem with the same
/// horizon. `delay` picks the sharing pattern of the product problem.
inline ProblemSpec build_separated_example(const std::vector<ProblemSpec>& subs,
                                           int delay) {
  if (subs.empty()) throw std::invalid_argument("no sub-problems given");
  const int n = subs[0].horizon;
  for (const auto& sub : subs) {
    if (sub.num_agents() != 1)
      throw std::invalid_argument("sub-problem is not single-agent");
    if (sub.horizon != n)
      throw std::invalid_argument("sub-problem horizon mismatch");
  }
  const int kk = static_cast<int>(subs.size());
  ProblemSpec p;
  p.horizon = n;
  p.delay = delay;
  for (const auto& sub : subs) p.agents.push_back(sub.agents[0]);

  // Product state labels, sub-state of agent 1 most significant.
  std::vector<int> nx(kk);
  int total = 1;
  for (int k = 0; k < kk; ++k) {
    nx[k] = subs[k].num_states();
    total *= nx[k];
  }
  auto factor = [&](int x, int k) {
    for (int j = kk - 1; j > k; --j) x /= nx[j];
    return x % nx[k];
  };
  for (int x = 0; x < total; ++x) {
    std::string label;
    for (int k = 0; k < kk; ++k) {
      if (k) label += "|";
      label += subs[k].states[factor(x, k)];
    }
    p.states.push_back(label);
  }
  p.allocate();

  const int na = p.num_joint_actions();
  std::vector<int> u;
  for (int x = 0; x < total; ++x) {
    double pi = 1.0;
    for (int k = 0; k < kk; ++k) pi *= subs[k].initial[factor(x, k)];
    p.initial[x] = pi;
    for (int k = 0; k < kk; ++k)
      for (int y = 0; y < p.num_obs(k); ++y)
        p.obs1_ref(k, x, y) = subs[k].obs1(0, factor(x, k), y);
    for (int a = 0; a < na; ++a) {
      p.decode_actions(a, u);
      for (int x2 = 0; x2 < total; ++x2) {
        double s = 1.0;
        for (int k = 0; k < kk; ++k)
          s *= subs[k].trans(factor(x, k), u[k], factor(x2, k));
        p.trans_ref(x, a, x2) = s;
      }
      for (int k = 0; k < kk; ++k)
        for (int y = 0; y < p.num_obs(k); ++y)
          p.obs_ref(k, x, a, y) = subs[k].obs(0, factor(x, k), u[k], y);
      for (int t = 0; t < n; ++t) {
        double c = 0.0;
        for (int k = 0; k < kk; ++k)
          c += subs[k].cost(t, factor(x, k), u[k]);
        p.cost_ref(t, x, a) = c;
      }
    }
  }
  return p;
}

/// Seeded random instance with stochastic rows drawn uniformly on the
/// simplex interior and costs uniform in [0, 10).
inline ProblemSpec make_random_problem(uint64_t seed, int n, int delay, int kk,
                                       int nx, int ny, int nu) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::uniform_real_distribution<double> cost_dist(0.0, 10.0);
  auto fill_pmf = [&](double* row, int len) {
    double sum = 0.0;
    for (int i = 0; i < len; ++i) {
      row[i] = unif(rng);
      sum += row[i];
    }
    for (int i = 0; i < len; ++i) row[i] /= sum;
    // Re-normalize exactly: force the last entry to absorb roundoff.
    double partial = 0.0;
    for (int i = 0; i + 1 < len; ++i) partial += row[i];
    row[len - 1] = 1.0 - partial;
  };

  ProblemSpec p;
  p.horizon = n;
  p.delay = delay;
  for (int x = 0; x < nx; ++x) p.states.push_back("x" + std::to_string(x + 1));
  for (int k = 0; k < kk; ++k) {
    AgentSpaces ag;
    for (int y = 0; y < ny; ++y) ag.obs.push_back("y" + std::to_string(y + 1));
    for (int u = 0; u < nu; ++u)
      ag.actions.push_back("u" + std::to_string(u + 1));
    p.agents.push_back(ag);
  }
  p.allocate();
  fill_pmf(p.initial.data(), nx);
  const int na = p.num_joint_actions();
  for (int x = 0; x < nx; ++x) {
    for (int a = 0; a < na; ++a) {
      fill_pmf(&p.transition[(static_cast<size_t>(x) * na + a) * nx], nx);
      for (int k = 0; k < kk; ++k)
        fill_pmf(&p.observation[k][(static_cast<size_t>(x) * na + a) * ny],
                 ny);
      for (int t = 0; t < n; ++t) p.cost_ref(t, x, a) = cost_dist(rng);
    }
    for (int k = 0; k < kk; ++k)
      fill_pmf(&p.initial_obs[k][static_cast<size_t>(x) * ny], ny);
  }
  return p;
}

/// Single-agent random POMDP, used as a factor of the separated scenario.
inline ProblemSpec make_random_pomdp(uint64_t seed, int n, int nx, int ny,
                                     int nu) {
  return make_random_problem(seed, n, /*delay=*/1, /*agents=*/1, nx, ny, nu);
}

}  // namespace decpomdp
