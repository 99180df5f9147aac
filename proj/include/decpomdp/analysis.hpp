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
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "decpomdp/beliefs.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/oracle.hpp"

// Cross-checks that combine the recursive solver with the brute-force
// reference machinery, plus the sufficient-statistic compression study.

namespace decpomdp {

struct EquilibriumReport {
  double payoff = 0.0;              // exact expected cost of the profile
  std::vector<double> dp_gaps;      // payoff minus recursive best-response value
  std::vector<double> oracle_gaps;  // payoff minus tree best-response payoff
  bool equilibrium = false;
  double tolerance = 0.0;
};

/// A profile is person-by-person optimal when no agent's best response
/// improves on it. Both gap columns must vanish (within tolerance) and
/// neither may be meaningfully negative, which would indicate an
/// inconsistency between the exact payoff and the induction.
inline EquilibriumReport verify_equilibrium(const ProblemSpec& p,
                                            const StrategyProfile& g,
                                            double tolerance = 1e-9,
                                            int threads = 1) {
  EquilibriumReport rep;
  rep.tolerance = tolerance;
  rep.payoff = oracle::exact_payoff(p, g);
  rep.equilibrium = true;
  for (int k = 0; k < p.num_agents(); ++k) {
    const double dp_gap =
        rep.payoff - best_response(p, g, k, threads).expected_value;
    const double orc_gap = rep.payoff - oracle::tree_best_response(p, g, k).payoff;
    rep.dp_gaps.push_back(dp_gap);
    rep.oracle_gaps.push_back(orc_gap);
    if (!(dp_gap <= tolerance && dp_gap >= -tolerance)) rep.equilibrium = false;
    if (!(orc_gap <= tolerance && orc_gap >= -tolerance))
      rep.equilibrium = false;
  }
  return rep;
}

namespace detail {

/// Fixed-point key for grouping probability vectors: entries rounded at
/// the 1e-10 level.
inline void append_rounded(std::vector<long long>& key,
                           const std::vector<double>& v) {
  for (double x : v) key.push_back(std::llround(x * 1e10));
}

/// Expected stage cost of each own action on one realization, the other
/// agents playing the profile on their own coordinates.
inline std::vector<double> terminal_action_values(const ProblemSpec& p,
                                                  const StrategyProfile& g,
                                                  int s,
                                                  const PrivatePosterior& xi,
                                                  long long shared_idx) {
  const int k = xi.agent;
  GroupPrivateSpace group(p, s, k);
  const long long ll = group.size();
  const int nx = p.num_states();
  std::vector<double> q(static_cast<size_t>(p.num_actions(k)), 0.0);
  std::vector<int> u(p.num_agents());
  for (int uo = 0; uo < p.num_actions(k); ++uo)
    for (long long lam = 0; lam < ll; ++lam) {
      double col = 0.0;
      for (int x = 0; x < nx; ++x)
        col += xi.p[static_cast<size_t>(x) * ll + lam];
      if (col == 0.0) continue;
      u[k] = uo;
      for (int i = 0; i < group.count(); ++i) {
        const int j = group.agent(i);
        u[j] = g.action(j, s, InfoSpace(p, j, s).compose(
                                  shared_idx, group.component(lam, i)));
      }
      const int a = p.encode_actions(u);
      for (int x = 0; x < nx; ++x)
        q[static_cast<size_t>(uo)] +=
            p.cost(s, x, a) * xi.p[static_cast<size_t>(x) * ll + lam];
    }
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Recursion-versus-oracle sweeps. Each check visits every realization (or
// shared block) of every stage and reports the largest entrywise deviation
// together with where it happened; support disagreements count as
// deviation 1.

struct CheckResult {
  double max_delta = 0.0;
  long long checked = 0;
  std::string worst;  // label of the realization with the largest deviation
};

namespace detail {

inline void track(CheckResult& res, double delta, const std::string& label) {
  if (delta > res.max_delta) {
    res.max_delta = delta;
    res.worst = label;
  }
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Positive-weight one-step children of a realization under one own
/// action; fn(weight, child realization). Weights sum to one.
template <typename Fn>
inline void for_each_child(const ProblemSpec& p, const StrategyProfile& g,
                           const PrivatePosterior& xi,
                           const InfoRealization& r, int u_own, Fn&& fn) {
  const int k = r.agent;
  const int s = r.stage;
  GroupPrivateSpace group(p, s, k);
  const long long ll = group.size();
  const int nx = p.num_states();
  const int ny = p.num_obs(k);
  const bool reveal = s >= p.delay - 1;
  const int reveal_stage = s + 1 - p.delay;

  long long keycard = 1;
  std::vector<long long> dkey(static_cast<size_t>(ll), 0);
  if (reveal) {
    PrivateHistory h;
    for (int i = 0; i < group.count(); ++i)
      keycard *= p.num_obs(group.agent(i));
    for (long long lam = 0; lam < ll; ++lam) {
      long long key = 0;
      for (int i = 0; i < group.count(); ++i) {
        group.space(i).decode(group.component(lam, i), h);
        key = key * p.num_obs(group.agent(i)) + h.obs[0];
      }
      dkey[static_cast<size_t>(lam)] = key;
    }
  }

  const std::vector<double> m = stage_measure(p, g, xi, r, u_own);
  std::vector<double> weight(static_cast<size_t>(ny) * keycard, 0.0);
  for (int y = 0; y < ny; ++y)
    for (long long lam = 0; lam < ll; ++lam) {
      double wsum = 0.0;
      const size_t base = (static_cast<size_t>(y) * ll + lam) * nx * nx;
      for (int xx = 0; xx < nx * nx; ++xx) wsum += m[base + xx];
      weight[static_cast<size_t>(y) * keycard +
             dkey[static_cast<size_t>(lam)]] += wsum;
    }

  std::vector<int> oobs, oact;
  for (long long key = 0; key < keycard; ++key) {
    if (reveal) {
      oobs.assign(p.num_agents(), 0);
      oact.assign(p.num_agents(), 0);
      long long rest = key;
      for (int i = group.count() - 1; i >= 0; --i) {
        const int j = group.agent(i);
        oobs[j] = static_cast<int>(rest % p.num_obs(j));
        rest /= p.num_obs(j);
      }
      for (int i = 0; i < group.count(); ++i) {
        const int j = group.agent(i);
        const InfoRealization rj =
            reconstruct_info(p, r.shared, j, reveal_stage, oobs[j]);
        oact[j] = g.action(j, reveal_stage,
                           InfoSpace(p, j, reveal_stage).encode(rj));
      }
    }
    for (int y = 0; y < ny; ++y) {
      const double w = weight[static_cast<size_t>(y) * keycard + key];
      if (w <= 0.0) continue;
      fn(w, extend_info(p, r, u_own, y, oobs, oact));
    }
  }
}

}  // namespace detail

/// Recursive private posteriors against exhaustive Bayes, all agents, all
/// stages, every realization (support flags must agree everywhere; values
/// compared on the common support).
inline CheckResult check_private_filter(const ProblemSpec& p,
                                        const StrategyProfile& g) {
  CheckResult res;
  for (int k = 0; k < p.num_agents(); ++k) {
    const PosteriorTable tab = compute_posterior_table(p, g, k);
    for (int s = 0; s < p.horizon; ++s) {
      InfoSpace space(p, k, s);
      for (long long idx = 0; idx < space.size(); ++idx) {
        const InfoRealization r = space.decode(idx);
        const PrivatePosterior& mine = tab.xi[s][static_cast<size_t>(idx)];
        const PrivatePosterior ref = oracle::exhaustive_posterior(p, g, r);
        ++res.checked;
        if (mine.off_support != ref.off_support) {
          detail::track(res, 1.0, realization_key(p, r));
          continue;
        }
        if (mine.off_support) continue;
        detail::track(res, detail::max_abs_diff(mine.p, ref.p),
                      realization_key(p, r));
      }
    }
  }
  return res;
}

/// Recursive delayed-state posterior against the direct conditional, on
/// every shared block that carries positive probability under the profile.
inline CheckResult check_delayed_state(const ProblemSpec& p,
                                       const StrategyProfile& g) {
  CheckResult res;
  const DelayedStateTable tab = compute_delayed_state_table(p);
  for (int s = p.delay; s < p.horizon; ++s) {
    SharedSpace space(p, s);
    SharedHistory sh;
    for (long long d = 0; d < space.size(); ++d) {
      space.decode(d, sh);
      const std::vector<double> ref = oracle::delayed_state_conditional(p, g, sh);
      if (ref.empty()) continue;  // zero probability under this profile
      ++res.checked;
      const auto& mine = tab.theta[static_cast<size_t>(s)][static_cast<size_t>(d)];
      const std::string label = "shared block #" + std::to_string(d) +
                                " at stage " + std::to_string(s + 1);
      if (mine.empty()) {
        detail::track(res, 1.0, label);
        continue;
      }
      detail::track(res, detail::max_abs_diff(mine, ref), label);
    }
  }
  return res;
}

/// Recursive joint posterior over (state, all private blocks) against the
/// exhaustive conditional, on every positive-probability shared block.
inline CheckResult check_shared_joint(const ProblemSpec& p,
                                      const StrategyProfile& g) {
  CheckResult res;
  const SharedJointTable tab = compute_shared_joint_table(p, g);
  for (int s = 0; s < p.horizon; ++s) {
    SharedSpace space(p, s);
    SharedHistory sh;
    for (long long d = 0; d < space.size(); ++d) {
      space.decode(d, sh);
      const std::vector<double> ref = oracle::shared_joint_conditional(p, g, s, sh);
      if (ref.empty()) continue;
      ++res.checked;
      const auto& mine = tab.pi[static_cast<size_t>(s)][static_cast<size_t>(d)];
      const std::string label = "shared block #" + std::to_string(d) +
                                " at stage " + std::to_string(s + 1);
      if (mine.empty()) {
        detail::track(res, 1.0, label);
        continue;
      }
      detail::track(res, detail::max_abs_diff(mine, ref), label);
    }
  }
  return res;
}

/// Conditional Markov property of the realization process: realizations
/// sharing (posterior, shared block) and the same own action must induce
/// the same distribution over the next posterior value. Realizations are
/// grouped by posterior entries rounded at 1e-10, and the induced
/// distributions (weight attached to each rounded next-posterior value)
/// are compared within each group.
inline CheckResult check_markov_grouping(const ProblemSpec& p,
                                         const StrategyProfile& g) {
  CheckResult res;
  for (int k = 0; k < p.num_agents(); ++k) {
    const PosteriorTable tab = compute_posterior_table(p, g, k);
    for (int s = 0; s + 1 < p.horizon; ++s) {
      InfoSpace space(p, k, s);
      InfoSpace next(p, k, s + 1);
      const long long priv_size = space.priv().size();
      std::map<std::vector<long long>, std::map<std::vector<long long>, double>>
          group_dist;
      for (long long idx = 0; idx < space.size(); ++idx) {
        const PrivatePosterior& xi = tab.xi[s][static_cast<size_t>(idx)];
        if (xi.off_support) continue;
        const InfoRealization r = space.decode(idx);
        for (int u = 0; u < p.num_actions(k); ++u) {
          std::map<std::vector<long long>, double> dist;
          detail::for_each_child(
              p, g, xi, r, u, [&](double w, const InfoRealization& child) {
                const PrivatePosterior& cxi =
                    tab.xi[s + 1][static_cast<size_t>(next.encode(child))];
                std::vector<long long> ckey;
                ckey.push_back(cxi.off_support ? 1 : 0);
                detail::append_rounded(ckey, cxi.p);
                dist[ckey] += w;
              });
          std::vector<long long> gkey;
          detail::append_rounded(gkey, xi.p);
          gkey.push_back(idx / priv_size);
          gkey.push_back(u);
          auto [it, fresh] = group_dist.emplace(gkey, dist);
          ++res.checked;
          if (fresh) continue;
          const std::string label =
              realization_key(p, r) + " action " + p.agents[k].actions[u];
          if (it->second.size() != dist.size()) {
            detail::track(res, 1.0, label);
            continue;
          }
          auto a = it->second.begin();
          auto b = dist.begin();
          for (; a != it->second.end(); ++a, ++b) {
            if (a->first != b->first) {
              detail::track(res, 1.0, label);
              break;
            }
            detail::track(res, std::abs(a->second - b->second), label);
          }
        }
      }
    }
  }
  return res;
}

/// Compression findings for one (agent, stage) slice.
struct StageCompression {
  int agent = 0;
  int stage = 0;  // 0-based
  long long reachable = 0;
  // classes of (posterior, shared block, own window) — the full realization
  long long distinct_full = 0;
  // classes of (posterior, delayed-state posterior, own window); posterior
  // alone when the delay equals the horizon
  long long distinct_separated = 0;
  // classes of (posterior, joint posterior attached to the shared block)
  long long distinct_info_state = 0;
  bool actions_factor = true;       // chosen action constant per separated class
  bool terminal_consistent = true;  // final stage only
  bool measures_consistent = true;  // earlier stages only
};

struct CompressionReport {
  std::vector<StageCompression> stages;
  bool actions_factor = true;
  bool terminal_consistent = true;
  bool measures_consistent = true;
};

/// Groups the reachable realizations of every agent and stage by candidate
/// sufficient statistics and checks which decision data are constant on
/// each class: terminal action values and minimizer sets on
/// (posterior, shared block) classes, one-step measures on the same
/// classes at earlier stages, and the chosen actions on
/// (posterior, delayed-state, own window) classes.
inline CompressionReport compression_report(const ProblemSpec& p,
                                            const StrategyProfile& g,
                                            double value_tol = 1e-10,
                                            double measure_tol = 1e-12) {
  const int n = p.horizon;
  CompressionReport rep;
  const DelayedStateTable theta = compute_delayed_state_table(p);
  const SharedJointTable pi = compute_shared_joint_table(p, g);

  for (int k = 0; k < p.num_agents(); ++k) {
    const PosteriorTable tab = compute_posterior_table(p, g, k);
    for (int s = 0; s < n; ++s) {
      StageCompression sc;
      sc.agent = k;
      sc.stage = s;
      InfoSpace space(p, k, s);
      const long long priv_size = space.priv().size();

      std::map<std::vector<long long>, long long> full, separated, info_state;
      // separated class -> first seen chosen action
      std::map<std::vector<long long>, int> class_action;
      // (posterior, shared) class -> representative realization index
      std::map<std::vector<long long>, long long> rep_member;

      for (long long idx = 0; idx < space.size(); ++idx) {
        const PrivatePosterior& xi = tab.xi[s][static_cast<size_t>(idx)];
        if (xi.off_support) continue;
        ++sc.reachable;
        const long long shared_idx = idx / priv_size;
        const long long priv_idx = idx % priv_size;

        std::vector<long long> xi_key;
        detail::append_rounded(xi_key, xi.p);

        std::vector<long long> key = xi_key;
        key.push_back(shared_idx);
        key.push_back(priv_idx);
        ++full[key];

        key = xi_key;
        if (p.delay < n) {
          if (s >= p.delay) {
            const auto& th =
                theta.theta[static_cast<size_t>(s)][static_cast<size_t>(
                    shared_idx)];
            if (th.empty())
              key.push_back(-1);
            else
              detail::append_rounded(key, th);
          }
          key.push_back(priv_idx);
        }
        const int chosen = g.action(k, s, idx);
        auto [it, fresh] = class_action.emplace(key, chosen);
        if (!fresh && it->second != chosen) sc.actions_factor = false;
        ++separated[key];

        key = xi_key;
        {
          const auto& pv =
              pi.pi[static_cast<size_t>(s)][static_cast<size_t>(shared_idx)];
          if (pv.empty())
            key.push_back(-1);
          else
            detail::append_rounded(key, pv);
        }
        ++info_state[key];

        // (posterior, shared block) classes: compare decision data against
        // the first member seen.
        key = xi_key;
        key.push_back(shared_idx);
        auto [mit, first] = rep_member.emplace(key, idx);
        if (!first) {
          const PrivatePosterior& xi0 =
              tab.xi[s][static_cast<size_t>(mit->second)];
          if (s == n - 1) {
            const std::vector<double> qa =
                detail::terminal_action_values(p, g, s, xi0, shared_idx);
            const std::vector<double> qb =
                detail::terminal_action_values(p, g, s, xi, shared_idx);
            double mina = qa[0], minb = qb[0];
            for (double v : qa) mina = std::min(mina, v);
            for (double v : qb) minb = std::min(minb, v);
            if (std::abs(mina - minb) > value_tol)
              sc.terminal_consistent = false;
            for (size_t i = 0; i < qa.size(); ++i) {
              const bool ina = qa[i] <= mina + value_tol;
              const bool inb = qb[i] <= minb + value_tol;
              if (ina != inb) sc.terminal_consistent = false;
            }
          } else {
            const InfoRealization r0 = space.decode(mit->second);
            const InfoRealization r1 = space.decode(idx);
            for (int u = 0; u < p.num_actions(k); ++u) {
              const std::vector<double> m0 = stage_measure(p, g, xi0, r0, u);
              const std::vector<double> m1 = stage_measure(p, g, xi, r1, u);
              for (size_t i = 0; i < m0.size(); ++i)
                if (std::abs(m0[i] - m1[i]) > measure_tol)
                  sc.measures_consistent = false;
            }
          }
        }
      }
      sc.distinct_full = static_cast<long long>(full.size());
      sc.distinct_separated = static_cast<long long>(separated.size());
      sc.distinct_info_state = static_cast<long long>(info_state.size());
      rep.actions_factor = rep.actions_factor && sc.actions_factor;
      rep.terminal_consistent =
          rep.terminal_consistent && sc.terminal_consistent;
      rep.measures_consistent =
          rep.measures_consistent && sc.measures_consistent;
      rep.stages.push_back(std::move(sc));
    }
  }
  return rep;
}

}  // namespace decpomdp
