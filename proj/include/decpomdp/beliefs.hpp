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

#include <stdexcept>
#include <vector>

#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"

namespace decpomdp {

/// Agent k's belief over the current state and the other agents' private
/// blocks, conditioned on k's own realization. Dense over
/// X x (joint private space of the others); entries with no support are
/// exact zeros. `off_support` marks a realization of zero probability
/// under the profile (zero normalizer somewhere along the recursion).
struct PrivatePosterior {
  int agent = 0;
  int stage = 0;
  bool off_support = false;
  std::vector<double> p;  // index x * L + lam

  double at(int x, long long lam, long long group_size) const {
    return p[static_cast<size_t>(x) * group_size + lam];
  }
};

namespace detail {

inline bool normalize_pmf(std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total <= 0.0) return false;
  for (double& x : v) x /= total;
  return true;
}

/// Odometer over the product of observation spaces of a set of agents.
inline bool next_tuple(std::vector<int>& digits, const std::vector<int>& card) {
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    if (++digits[i] < card[i]) return true;
    digits[i] = 0;
  }
  return false;
}

}  // namespace detail

/// Slides one agent's private window from stage s to s+1: the oldest
/// entries leave (they migrate into the shared block) once the window is
/// full, the fresh observation and action enter. With T == 1 the window
/// carries no actions at all.
inline void slide_private(const ProblemSpec& p, int stage, PrivateHistory& h,
                          int y_next, int u_taken) {
  if (stage >= p.delay - 1) {
    h.obs.erase(h.obs.begin());
    if (p.delay >= 2) h.act.erase(h.act.begin());
  }
  h.obs.push_back(y_next);
  if (p.delay >= 2) h.act.push_back(u_taken);
}

/// First-stage belief: condition the prior and the first-stage observation
/// channels on the own observation; the unknowns are the state and the
/// other agents' first observations.
inline PrivatePosterior init_private_posterior(const ProblemSpec& p, int k,
                                               int y_own) {
  GroupPrivateSpace group(p, 0, k);
  const int nx = p.num_states();
  PrivatePosterior xi;
  xi.agent = k;
  xi.stage = 0;
  xi.p.assign(static_cast<size_t>(nx) * group.size(), 0.0);
  PrivateHistory h;
  for (int x = 0; x < nx; ++x) {
    const double base = p.initial[x] * p.obs1(k, x, y_own);
    if (base == 0.0) continue;
    for (long long lam = 0; lam < group.size(); ++lam) {
      double w = base;
      for (int i = 0; i < group.count(); ++i) {
        group.space(i).decode(group.component(lam, i), h);
        w *= p.obs1(group.agent(i), x, h.obs[0]);
      }
      xi.p[static_cast<size_t>(x) * group.size() + lam] = w;
    }
  }
  xi.off_support = !detail::normalize_pmf(xi.p);
  return xi;
}

/// One filtering step. `info` is the stage-s realization the input belief
/// is conditioned on; the output conditions additionally on the own action
/// `u_own`, the fresh own observation `y_next`, and -- once sharing has
/// started (s >= T-1) -- on the other agents' newly revealed stage-(s+1-T)
/// entries in `revealed_obs` / `revealed_act` (indexed by agent id, own
/// slot ignored). Inputs whose windows contradict the revealed entries or
/// whose hidden actions contradict the profile carry zero weight; a zero
/// normalizer yields the off-support marker, not NaN.
inline PrivatePosterior update_private_posterior(
    const ProblemSpec& p, const StrategyProfile& g, const PrivatePosterior& xi,
    const InfoRealization& info, int u_own, int y_next,
    const std::vector<int>& revealed_obs,
    const std::vector<int>& revealed_act) {
  if (xi.off_support)
    throw std::logic_error("update_private_posterior: input is off-support");
  const int k = info.agent;
  const int s = info.stage;
  const int nx = p.num_states();
  const bool reveal = s >= p.delay - 1;
  GroupPrivateSpace group(p, s, k);
  GroupPrivateSpace group_next(p, s + 1, k);
  SharedSpace shared_space(p, s);
  const long long shared_idx = shared_space.encode(info.shared);

  PrivatePosterior out;
  out.agent = k;
  out.stage = s + 1;
  out.p.assign(static_cast<size_t>(nx) * group_next.size(), 0.0);

  const int others = group.count();
  std::vector<PrivateHistory> h(others);
  std::vector<int> u(p.num_agents());
  std::vector<int> ycard(others), ynext(others);
  std::vector<long long> comp_next(others);
  for (int i = 0; i < others; ++i) ycard[i] = p.num_obs(group.agent(i));

  for (long long lam = 0; lam < group.size(); ++lam) {
    bool sliced_out = false;
    for (int i = 0; i < others; ++i) {
      group.space(i).decode(group.component(lam, i), h[i]);
      const int j = group.agent(i);
      if (reveal && (h[i].obs[0] != revealed_obs[j] ||
                     (p.delay >= 2 && h[i].act[0] != revealed_act[j]))) {
        sliced_out = true;
        break;
      }
    }
    if (sliced_out) continue;
    double col = 0.0;
    for (int x = 0; x < nx; ++x)
      col += xi.p[static_cast<size_t>(x) * group.size() + lam];
    if (col == 0.0) continue;

    u[k] = u_own;
    for (int i = 0; i < others; ++i) {
      const int j = group.agent(i);
      const long long info_idx = InfoSpace(p, j, s).compose(
          shared_idx, group.space(i).encode(h[i]));
      u[j] = g.action(j, s, info_idx);
    }
    const int a = p.encode_actions(u);

    for (int x2 = 0; x2 < nx; ++x2) {
      const double qk = p.obs(k, x2, a, y_next);
      if (qk == 0.0) continue;
      double flow = 0.0;
      for (int x = 0; x < nx; ++x)
        flow += xi.p[static_cast<size_t>(x) * group.size() + lam] *
                p.trans(x, a, x2);
      flow *= qk;
      if (flow == 0.0) continue;

      std::fill(ynext.begin(), ynext.end(), 0);
      do {
        double w = flow;
        for (int i = 0; i < others; ++i)
          w *= p.obs(group.agent(i), x2, a, ynext[i]);
        if (w != 0.0) {
          for (int i = 0; i < others; ++i) {
            PrivateHistory slid = h[i];
            slide_private(p, s, slid, ynext[i], u[group.agent(i)]);
            comp_next[i] = group_next.space(i).encode(slid);
          }
          out.p[static_cast<size_t>(x2) * group_next.size() +
                group_next.compose(comp_next)] += w;
        }
      } while (others > 0 && detail::next_tuple(ynext, ycard));
    }
  }
  out.off_support = !detail::normalize_pmf(out.p);
  return out;
}

/// Predictive law of the own next observation given the current belief,
/// the shared block, and the own action; equals, for each observation, the
/// normalizer of the corresponding filtering step marginalized over the
/// revealed entries. Sums to one.
inline std::vector<double> predictive_observation(const ProblemSpec& p,
                                                  const StrategyProfile& g,
                                                  const PrivatePosterior& xi,
                                                  const InfoRealization& info,
                                                  int u_own) {
  const int k = info.agent;
  const int s = info.stage;
  const int nx = p.num_states();
  GroupPrivateSpace group(p, s, k);
  SharedSpace shared_space(p, s);
  const long long shared_idx = shared_space.encode(info.shared);
  std::vector<double> out(p.num_obs(k), 0.0);
  PrivateHistory h;
  std::vector<int> u(p.num_agents());
  for (long long lam = 0; lam < group.size(); ++lam) {
    u[k] = u_own;
    for (int i = 0; i < group.count(); ++i) {
      const int j = group.agent(i);
      group.space(i).decode(group.component(lam, i), h);
      const long long info_idx =
          InfoSpace(p, j, s).compose(shared_idx, group.space(i).encode(h));
      u[j] = g.action(j, s, info_idx);
    }
    const int a = p.encode_actions(u);
    for (int x = 0; x < nx; ++x) {
      const double base = xi.p[static_cast<size_t>(x) * group.size() + lam];
      if (base == 0.0) continue;
      for (int x2 = 0; x2 < nx; ++x2) {
        const double flow = base * p.trans(x, a, x2);
        if (flow == 0.0) continue;
        for (int y = 0; y < p.num_obs(k); ++y)
          out[y] += flow * p.obs(k, x2, a, y);
      }
    }
  }
  return out;
}

/// Unnormalized one-stage transition measure over (own next observation,
/// others' private blocks, current state, next state), the object the
/// backward recursion integrates against. Depends on the realization only
/// through the belief and the shared block.
/// Layout: m[((y * L + lam) * nx + x) * nx + x2].
inline std::vector<double> stage_measure(const ProblemSpec& p,
                                         const StrategyProfile& g,
                                         const PrivatePosterior& xi,
                                         const InfoRealization& info,
                                         int u_own) {
  const int k = info.agent;
  const int s = info.stage;
  const int nx = p.num_states();
  const int ny = p.num_obs(k);
  GroupPrivateSpace group(p, s, k);
  SharedSpace shared_space(p, s);
  const long long shared_idx = shared_space.encode(info.shared);
  const long long ll = group.size();
  std::vector<double> m(static_cast<size_t>(ny) * ll * nx * nx, 0.0);
  PrivateHistory h;
  std::vector<int> u(p.num_agents());
  for (long long lam = 0; lam < ll; ++lam) {
    u[k] = u_own;
    for (int i = 0; i < group.count(); ++i) {
      const int j = group.agent(i);
      group.space(i).decode(group.component(lam, i), h);
      const long long info_idx =
          InfoSpace(p, j, s).compose(shared_idx, group.space(i).encode(h));
      u[j] = g.action(j, s, info_idx);
    }
    const int a = p.encode_actions(u);
    for (int x = 0; x < nx; ++x) {
      const double base = xi.p[static_cast<size_t>(x) * ll + lam];
      if (base == 0.0) continue;
      for (int x2 = 0; x2 < nx; ++x2) {
        const double flow = base * p.trans(x, a, x2);
        if (flow == 0.0) continue;
        for (int y = 0; y < ny; ++y) {
          const double w = flow * p.obs(k, x2, a, y);
          if (w != 0.0)
            m[((static_cast<size_t>(y) * ll + lam) * nx + x) * nx + x2] = w;
        }
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Posterior over the T-delayed state given the shared block. Independent of
// every strategy: the embedded actions are treated as exogenous inputs.
// Defined from the first stage with a non-empty shared block (s >= T).

/// theta over the stage-0 state after the first reveal (shared block
/// covering exactly stage 0): condition the prior on all agents' stage-0
/// observations. The embedded stage-0 actions carry no extra information
/// about the stage-0 state.
inline std::vector<double> delayed_state_init(const ProblemSpec& p,
                                              const std::vector<int>& y0) {
  std::vector<double> theta(p.num_states(), 0.0);
  for (int x = 0; x < p.num_states(); ++x) {
    double w = p.initial[x];
    for (int k = 0; k < p.num_agents(); ++k) w *= p.obs1(k, x, y0[k]);
    theta[x] = w;
  }
  if (!detail::normalize_pmf(theta)) theta.clear();  // unreachable block
  return theta;
}

/// One delayed-state filtering step: fold in the newly revealed stage
/// observations of all agents and the previous revealed stage's actions.
inline std::vector<double> delayed_state_update(const ProblemSpec& p,
                                                const std::vector<double>& theta,
                                                const std::vector<int>& y_new,
                                                const std::vector<int>& u_prev) {
  const int nx = p.num_states();
  const int a = p.encode_actions(u_prev);
  std::vector<double> out(nx, 0.0);
  for (int x2 = 0; x2 < nx; ++x2) {
    double flow = 0.0;
    for (int x = 0; x < nx; ++x) flow += theta[x] * p.trans(x, a, x2);
    for (int k = 0; k < p.num_agents(); ++k)
      flow *= p.obs(k, x2, a, y_new[k]);
    out[x2] = flow;
  }
  if (!detail::normalize_pmf(out)) out.clear();
  return out;
}

/// Delayed-state posterior tabulated for every shared realization at every
/// stage with a non-empty shared block. Profile-free, so it is computed
/// once per problem. Empty vectors mark shared blocks of zero probability.
struct DelayedStateTable {
  // theta[s][shared index] -> pmf over the stage-(s-T) state.
  std::vector<std::vector<std::vector<double>>> theta;
};

inline DelayedStateTable compute_delayed_state_table(const ProblemSpec& p) {
  DelayedStateTable table;
  table.theta.resize(p.horizon);
  if (p.delay >= p.horizon) return table;  // no stage ever reveals
  SharedHistory sh;
  {
    const int s = p.delay;
    SharedSpace space(p, s);
    auto& slot = table.theta[s];
    slot.resize(static_cast<size_t>(space.size()));
    for (long long d = 0; d < space.size(); ++d) {
      space.decode(d, sh);
      slot[static_cast<size_t>(d)] = delayed_state_init(p, sh.obs[0]);
    }
  }
  for (int s = p.delay + 1; s < p.horizon; ++s) {
    SharedSpace space(p, s);
    auto& slot = table.theta[s];
    slot.resize(static_cast<size_t>(space.size()));
    // The newest covered stage is the least significant digit block, so
    // the parent shared index is the quotient by the block cardinality.
    long long block = 1;
    for (int k = 0; k < p.num_agents(); ++k)
      block *= static_cast<long long>(p.num_obs(k)) * p.num_actions(k);
    for (long long d = 0; d < space.size(); ++d) {
      space.decode(d, sh);
      const auto& parent = table.theta[s - 1][static_cast<size_t>(d / block)];
      if (parent.empty()) continue;
      const int newest = sh.cover() - 1;
      slot[static_cast<size_t>(d)] = delayed_state_update(
          p, parent, sh.obs[newest], sh.act[newest - 1]);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Joint posterior over the current state and all agents' private blocks
// given the shared block, under a full strategy profile. This is the
// information state of the equivalent coordinator formulation.

struct SharedJointTable {
  // pi[s][shared index] -> pmf over (x, joint private index of all agents),
  // laid out x * L + lam. Empty = zero-probability shared block.
  std::vector<std::vector<std::vector<double>>> pi;
};

/// One stage-(s+1) child of a shared block: the digits of the newly
/// revealed stage (0 while no reveal occurs), the probability of that
/// reveal given the parent, and the normalized joint posterior.
struct SharedJointChild {
  long long key = 0;
  double prob = 0.0;
  std::vector<double> pi;
};

/// One forward step of the joint posterior, pushing mass from a stage-s
/// shared block to its stage-(s+1) children. `prescribe` must return the
/// action of agent j given its private index; the children probabilities
/// sum to one.
template <typename Prescribe>
inline void shared_joint_push(const ProblemSpec& p, int s,
                              const std::vector<double>& pi,
                              Prescribe&& prescribe,
                              std::vector<SharedJointChild>& children) {
  const int nx = p.num_states();
  const int kk = p.num_agents();
  const bool reveal = s >= p.delay - 1;
  GroupPrivateSpace group(p, s, -1);
  GroupPrivateSpace group_next(p, s + 1, -1);
  const long long ll = group.size();
  const long long ll_next = group_next.size();

  long long block = 1;  // cardinality of one revealed stage block
  if (reveal)
    for (int k = 0; k < kk; ++k)
      block *= static_cast<long long>(p.num_obs(k)) * p.num_actions(k);

  // child key = revealed block digits (0 when no reveal yet)
  std::vector<std::vector<double>> acc(
      static_cast<size_t>(block),
      std::vector<double>(static_cast<size_t>(nx) * ll_next, 0.0));

  std::vector<PrivateHistory> h(kk);
  std::vector<int> u(kk), ynext(kk), ycard(kk);
  std::vector<long long> comp_next(kk);
  for (int k = 0; k < kk; ++k) ycard[k] = p.num_obs(k);

  for (long long lam = 0; lam < ll; ++lam) {
    for (int k = 0; k < kk; ++k) {
      group.space(k).decode(group.component(lam, k), h[k]);
      u[k] = prescribe(k, group.component(lam, k));
    }
    const int a = p.encode_actions(u);
    long long key = 0;
    if (reveal) {
      for (int k = 0; k < kk; ++k) key = key * p.num_obs(k) + h[k].obs[0];
      for (int k = 0; k < kk; ++k) {
        const int act0 = p.delay >= 2 ? h[k].act[0] : u[k];
        key = key * p.num_actions(k) + act0;
      }
    }
    for (int x = 0; x < nx; ++x) {
      const double base = pi[static_cast<size_t>(x) * ll + lam];
      if (base == 0.0) continue;
      for (int x2 = 0; x2 < nx; ++x2) {
        const double flow = base * p.trans(x, a, x2);
        if (flow == 0.0) continue;
        std::fill(ynext.begin(), ynext.end(), 0);
        do {
          double w = flow;
          for (int k = 0; k < kk; ++k) w *= p.obs(k, x2, a, ynext[k]);
          if (w != 0.0) {
            for (int k = 0; k < kk; ++k) {
              PrivateHistory slid = h[k];
              slide_private(p, s, slid, ynext[k], u[k]);
              comp_next[k] = group_next.space(k).encode(slid);
            }
            acc[static_cast<size_t>(key)]
               [static_cast<size_t>(x2) * ll_next +
                group_next.compose(comp_next)] += w;
          }
        } while (detail::next_tuple(ynext, ycard));
      }
    }
  }
  children.clear();
  for (long long key = 0; key < block; ++key) {
    double total = 0.0;
    for (double w : acc[static_cast<size_t>(key)]) total += w;
    if (total <= 0.0) continue;
    for (double& w : acc[static_cast<size_t>(key)]) w /= total;
    children.push_back(
        {key, total, std::move(acc[static_cast<size_t>(key)])});
  }
}

/// Initial joint posterior (empty shared block): prior times all
/// first-stage observation channels, already a probability measure.
inline std::vector<double> shared_joint_init(const ProblemSpec& p) {
  GroupPrivateSpace group(p, 0, -1);
  const int nx = p.num_states();
  std::vector<double> pi(static_cast<size_t>(nx) * group.size(), 0.0);
  PrivateHistory h;
  for (int x = 0; x < nx; ++x)
    for (long long lam = 0; lam < group.size(); ++lam) {
      double w = p.initial[x];
      for (int k = 0; k < p.num_agents(); ++k) {
        group.space(k).decode(group.component(lam, k), h);
        w *= p.obs1(k, x, h.obs[0]);
      }
      pi[static_cast<size_t>(x) * group.size() + lam] = w;
    }
  detail::normalize_pmf(pi);
  return pi;
}

/// One profile-driven step of the joint posterior for a specific parent
/// shared block: prescriptions are the profile's stage-s restrictions.
inline void shared_joint_update(const ProblemSpec& p,
                                const StrategyProfile& g, int s,
                                long long shared_idx,
                                const std::vector<double>& pi,
                                std::vector<SharedJointChild>& children) {
  shared_joint_push(
      p, s, pi,
      [&](int j, long long priv_idx) {
        return g.action(j, s,
                        InfoSpace(p, j, s).compose(shared_idx, priv_idx));
      },
      children);
}

/// Tabulates the joint posterior for every reachable shared block at every
/// stage under the given profile.
inline SharedJointTable compute_shared_joint_table(const ProblemSpec& p,
                                                   const StrategyProfile& g) {
  SharedJointTable table;
  table.pi.resize(p.horizon);
  for (int s = 0; s < p.horizon; ++s)
    table.pi[s].resize(static_cast<size_t>(SharedSpace(p, s).size()));
  table.pi[0][0] = shared_joint_init(p);
  std::vector<SharedJointChild> children;
  for (int s = 0; s + 1 < p.horizon; ++s) {
    const bool reveal = s >= p.delay - 1;
    long long block = 1;
    if (reveal)
      for (int k = 0; k < p.num_agents(); ++k)
        block *= static_cast<long long>(p.num_obs(k)) * p.num_actions(k);
    for (long long d = 0; d < static_cast<long long>(table.pi[s].size());
         ++d) {
      const auto& pi = table.pi[s][static_cast<size_t>(d)];
      if (pi.empty()) continue;
      shared_joint_update(p, g, s, d, pi, children);
      for (auto& child : children)
        table.pi[s + 1][static_cast<size_t>(d * block + child.key)] =
            std::move(child.pi);
    }
  }
  return table;
}

}  // namespace decpomdp
