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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "decpomdp/model.hpp"

namespace decpomdp {

// Information pattern with a sharing delay of T stages (0-based stage s):
//   shared block   : all agents' observations and actions of stages 0..s-T
//   private block  : own observations of stages max(s-T+1,0)..s and own
//                    actions of stages max(s-T+1,0)..s-1
// At stage s+1 the stage-(s+1-T) entries of every private block migrate
// into the shared block.

inline int shared_cover(int stage, int delay) {
  return std::max(stage - delay + 1, 0);
}
inline int priv_obs_begin(int stage, int delay) {
  return std::max(stage - delay + 1, 0);
}
inline int priv_obs_len(int stage, int delay) {
  return stage - priv_obs_begin(stage, delay) + 1;  // = min(stage+1, delay)
}
inline int priv_act_len(int stage, int delay) {
  return stage - priv_obs_begin(stage, delay);  // = min(stage, delay-1)
}

/// Shared block: observation/action indices per covered stage and agent.
struct SharedHistory {
  std::vector<std::vector<int>> obs;  // [stage][agent]
  std::vector<std::vector<int>> act;  // [stage][agent]
  int cover() const { return static_cast<int>(obs.size()); }
};

/// Private block of one agent: window entries, oldest stage first.
struct PrivateHistory {
  std::vector<int> obs;
  std::vector<int> act;
};

struct InfoRealization {
  int agent = 0;
  int stage = 0;
  SharedHistory shared;
  PrivateHistory priv;
};

/// Index space of one agent's private block at a stage. Indices are
/// big-endian over the flat tuple (obs window, then action window), so the
/// enumeration order is lexicographic in the canonical tuple.
class PrivateSpace {
 public:
  PrivateSpace(const ProblemSpec& p, int agent, int stage)
      : obs_len_(priv_obs_len(stage, p.delay)),
        act_len_(priv_act_len(stage, p.delay)),
        ny_(p.num_obs(agent)),
        nu_(p.num_actions(agent)) {}

  long long size() const {
    long long s = 1;
    for (int i = 0; i < obs_len_; ++i) s *= ny_;
    for (int i = 0; i < act_len_; ++i) s *= nu_;
    return s;
  }
  int obs_len() const { return obs_len_; }
  int act_len() const { return act_len_; }

  void decode(long long idx, PrivateHistory& h) const {
    h.obs.assign(obs_len_, 0);
    h.act.assign(act_len_, 0);
    for (int i = act_len_ - 1; i >= 0; --i) {
      h.act[i] = static_cast<int>(idx % nu_);
      idx /= nu_;
    }
    for (int i = obs_len_ - 1; i >= 0; --i) {
      h.obs[i] = static_cast<int>(idx % ny_);
      idx /= ny_;
    }
  }
  long long encode(const PrivateHistory& h) const {
    long long idx = 0;
    for (int i = 0; i < obs_len_; ++i) idx = idx * ny_ + h.obs[i];
    for (int i = 0; i < act_len_; ++i) idx = idx * nu_ + h.act[i];
    return idx;
  }

 private:
  int obs_len_, act_len_, ny_, nu_;
};

/// Index space of the shared block at a stage (agent-independent). The
/// canonical flat tuple is stage-major: for each covered stage, first all
/// agents' observations, then all agents' actions.
class SharedSpace {
 public:
  SharedSpace(const ProblemSpec& p, int stage)
      : cover_(shared_cover(stage, p.delay)) {
    for (int k = 0; k < p.num_agents(); ++k) {
      ny_.push_back(p.num_obs(k));
      nu_.push_back(p.num_actions(k));
    }
  }

  int cover() const { return cover_; }
  long long size() const {
    long long s = 1;
    for (int c = 0; c < cover_; ++c)
      for (size_t k = 0; k < ny_.size(); ++k) s *= ny_[k] * nu_[k];
    return s;
  }

  void decode(long long idx, SharedHistory& h) const {
    const int kk = static_cast<int>(ny_.size());
    h.obs.assign(cover_, std::vector<int>(kk, 0));
    h.act.assign(cover_, std::vector<int>(kk, 0));
    for (int c = cover_ - 1; c >= 0; --c) {
      for (int k = kk - 1; k >= 0; --k) {
        h.act[c][k] = static_cast<int>(idx % nu_[k]);
        idx /= nu_[k];
      }
      for (int k = kk - 1; k >= 0; --k) {
        h.obs[c][k] = static_cast<int>(idx % ny_[k]);
        idx /= ny_[k];
      }
    }
  }
  long long encode(const SharedHistory& h) const {
    const int kk = static_cast<int>(ny_.size());
    long long idx = 0;
    for (int c = 0; c < cover_; ++c) {
      for (int k = 0; k < kk; ++k) idx = idx * ny_[k] + h.obs[c][k];
      for (int k = 0; k < kk; ++k) idx = idx * nu_[k] + h.act[c][k];
    }
    return idx;
  }

 private:
  int cover_;
  std::vector<int> ny_, nu_;
};

/// Full realization space of one agent at one stage; index composes the
/// shared index (major) with the private index (minor).
class InfoSpace {
 public:
  InfoSpace(const ProblemSpec& p, int agent, int stage)
      : agent_(agent),
        stage_(stage),
        shared_(p, stage),
        priv_(p, agent, stage) {}

  long long size() const { return shared_.size() * priv_.size(); }
  const SharedSpace& shared() const { return shared_; }
  const PrivateSpace& priv() const { return priv_; }

  long long encode(const InfoRealization& r) const {
    return shared_.encode(r.shared) * priv_.size() + priv_.encode(r.priv);
  }
  long long compose(long long shared_idx, long long priv_idx) const {
    return shared_idx * priv_.size() + priv_idx;
  }
  InfoRealization decode(long long idx) const {
    InfoRealization r;
    r.agent = agent_;
    r.stage = stage_;
    shared_.decode(idx / priv_.size(), r.shared);
    priv_.decode(idx % priv_.size(), r.priv);
    return r;
  }

 private:
  int agent_, stage_;
  SharedSpace shared_;
  PrivateSpace priv_;
};

/// Joint index space over the private blocks of a group of agents at one
/// stage, optionally excluding one agent (pass exclude = -1 for all).
/// Component order is ascending agent id, first component most significant.
class GroupPrivateSpace {
 public:
  GroupPrivateSpace(const ProblemSpec& p, int stage, int exclude) {
    for (int j = 0; j < p.num_agents(); ++j) {
      if (j == exclude) continue;
      agents_.push_back(j);
      spaces_.emplace_back(p, j, stage);
    }
    stride_.assign(agents_.size(), 1);
    for (int i = static_cast<int>(agents_.size()) - 2; i >= 0; --i)
      stride_[i] = stride_[i + 1] * spaces_[i + 1].size();
    size_ = agents_.empty() ? 1 : stride_[0] * spaces_[0].size();
  }

  long long size() const { return size_; }
  int count() const { return static_cast<int>(agents_.size()); }
  int agent(int i) const { return agents_[i]; }
  const PrivateSpace& space(int i) const { return spaces_[i]; }

  long long component(long long idx, int i) const {
    return (idx / stride_[i]) % spaces_[i].size();
  }
  long long compose(const std::vector<long long>& comp) const {
    long long idx = 0;
    for (size_t i = 0; i < agents_.size(); ++i) idx += comp[i] * stride_[i];
    return idx;
  }

 private:
  std::vector<int> agents_;
  std::vector<PrivateSpace> spaces_;
  std::vector<long long> stride_;
  long long size_ = 1;
};

/// Deterministic strategy profile: one action index per realization, for
/// every agent and stage. Total by construction; entries at unreachable
/// realizations are kept at the lowest action index.
struct StrategyProfile {
  std::vector<std::vector<std::vector<int>>> act;  // [agent][stage][info idx]

  int action(int k, int s, long long idx) const {
    return act[k][s][static_cast<size_t>(idx)];
  }
  int& slot(int k, int s, long long idx) {
    return act[k][s][static_cast<size_t>(idx)];
  }
  bool operator==(const StrategyProfile&) const = default;
};

inline StrategyProfile make_default_profile(const ProblemSpec& p) {
  StrategyProfile g;
  g.act.resize(p.num_agents());
  for (int k = 0; k < p.num_agents(); ++k) {
    g.act[k].resize(p.horizon);
    for (int s = 0; s < p.horizon; ++s)
      g.act[k][s].assign(static_cast<size_t>(InfoSpace(p, k, s).size()), 0);
  }
  return g;
}

inline StrategyProfile make_random_profile(const ProblemSpec& p,
                                           uint64_t seed) {
  StrategyProfile g = make_default_profile(p);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < p.num_agents(); ++k)
    for (int s = 0; s < p.horizon; ++s) {
      std::uniform_int_distribution<int> pick(0, p.num_actions(k) - 1);
      for (auto& a : g.act[k][s]) a = pick(rng);
    }
  return g;
}

/// Extends a realization by one stage: own action taken, own next
/// observation received, and (once the delay has elapsed) the other
/// agents' stage-(s+1-T) entries revealed through the shared channel.
/// `others_obs` / `others_act` are indexed by agent id; the own slot is
/// ignored (own revealed entries come from the private window, or from
/// `u_own` when T == 1). Pass empty vectors while no reveal occurs.
inline InfoRealization extend_info(const ProblemSpec& p,
                                   const InfoRealization& r, int u_own,
                                   int y_next,
                                   const std::vector<int>& others_obs,
                                   const std::vector<int>& others_act) {
  const int s = r.stage;
  const int t_delay = p.delay;
  InfoRealization out;
  out.agent = r.agent;
  out.stage = s + 1;
  out.shared = r.shared;
  out.priv = r.priv;

  const bool reveal = s >= t_delay - 1;
  if (reveal) {
    const int kk = p.num_agents();
    std::vector<int> ob(kk), ac(kk);
    for (int j = 0; j < kk; ++j) {
      if (j == r.agent) {
        ob[j] = r.priv.obs.front();
        ac[j] = (t_delay >= 2) ? r.priv.act.front() : u_own;
      } else {
        ob[j] = others_obs[j];
        ac[j] = others_act[j];
      }
    }
    out.shared.obs.push_back(std::move(ob));
    out.shared.act.push_back(std::move(ac));
    out.priv.obs.erase(out.priv.obs.begin());
    if (t_delay >= 2) out.priv.act.erase(out.priv.act.begin());
  }
  out.priv.obs.push_back(y_next);
  if (t_delay >= 2) out.priv.act.push_back(u_own);
  return out;
}

/// Reconstructs agent j's full realization at stage `sigma` from a shared
/// block covering stages 0..cover-1. Requires sigma <= cover; when
/// sigma == cover, the stage-sigma own observation is not part of the
/// shared block and must be supplied as `y_sigma`.
inline InfoRealization reconstruct_info(const ProblemSpec& p,
                                        const SharedHistory& sh, int j,
                                        int sigma, int y_sigma = -1) {
  const int t_delay = p.delay;
  InfoRealization r;
  r.agent = j;
  r.stage = sigma;
  const int cover = shared_cover(sigma, t_delay);
  r.shared.obs.assign(sh.obs.begin(), sh.obs.begin() + cover);
  r.shared.act.assign(sh.act.begin(), sh.act.begin() + cover);
  const int begin = priv_obs_begin(sigma, t_delay);
  for (int tau = begin; tau <= sigma; ++tau)
    r.priv.obs.push_back(tau < sh.cover() ? sh.obs[tau][j] : y_sigma);
  for (int tau = begin; tau <= sigma - 1; ++tau)
    r.priv.act.push_back(sh.act[tau][j]);
  return r;
}

/// Agent r.agent's own realization at an earlier stage sigma <= r.stage,
/// read off the embedded own data of `r`.
inline InfoRealization own_prefix_info(const ProblemSpec& p,
                                       const InfoRealization& r, int sigma) {
  const int t_delay = p.delay;
  const int k = r.agent;
  const int window0 = priv_obs_begin(r.stage, t_delay);
  auto own_obs = [&](int tau) {
    return tau < window0 ? r.shared.obs[tau][k] : r.priv.obs[tau - window0];
  };
  auto own_act = [&](int tau) {
    return tau < window0 ? r.shared.act[tau][k] : r.priv.act[tau - window0];
  };
  InfoRealization out;
  out.agent = k;
  out.stage = sigma;
  const int cover = shared_cover(sigma, t_delay);
  out.shared.obs.assign(r.shared.obs.begin(), r.shared.obs.begin() + cover);
  out.shared.act.assign(r.shared.act.begin(), r.shared.act.begin() + cover);
  const int begin = priv_obs_begin(sigma, t_delay);
  for (int tau = begin; tau <= sigma; ++tau)
    out.priv.obs.push_back(own_obs(tau));
  for (int tau = begin; tau <= sigma - 1; ++tau)
    out.priv.act.push_back(own_act(tau));
  return out;
}

/// True when every action embedded in the shared block equals the action
/// the profile prescribes at the (fully reconstructible) realization of
/// the acting agent. Realizations failing this have probability zero.
inline bool shared_action_consistency(const ProblemSpec& p,
                                      const StrategyProfile& g,
                                      const SharedHistory& sh) {
  for (int sigma = 0; sigma < sh.cover(); ++sigma) {
    for (int j = 0; j < p.num_agents(); ++j) {
      InfoRealization rj = reconstruct_info(p, sh, j, sigma);
      const long long idx = InfoSpace(p, j, sigma).encode(rj);
      if (g.action(j, sigma, idx) != sh.act[sigma][j]) return false;
    }
  }
  return true;
}

/// True when, additionally to shared consistency, the own actions embedded
/// in the private window equal the profile's prescriptions along the own
/// information prefix.
inline bool realization_consistent(const ProblemSpec& p,
                                   const StrategyProfile& g,
                                   const InfoRealization& r) {
  if (!shared_action_consistency(p, g, r.shared)) return false;
  const int window0 = priv_obs_begin(r.stage, p.delay);
  for (int i = 0; i < static_cast<int>(r.priv.act.size()); ++i) {
    const int sigma = window0 + i;
    InfoRealization pre = own_prefix_info(p, r, sigma);
    const long long idx = InfoSpace(p, r.agent, sigma).encode(pre);
    if (g.action(r.agent, sigma, idx) != r.priv.act[i]) return false;
  }
  return true;
}

/// Canonical flat label tuple of a realization: shared block stage-major
/// (per stage: all agents' observations, then all agents' actions), then
/// the private observation window, then the private action window.
inline std::vector<std::string> realization_labels(const ProblemSpec& p,
                                                   const InfoRealization& r) {
  std::vector<std::string> out;
  for (int c = 0; c < r.shared.cover(); ++c) {
    for (int j = 0; j < p.num_agents(); ++j)
      out.push_back(p.agents[j].obs[r.shared.obs[c][j]]);
    for (int j = 0; j < p.num_agents(); ++j)
      out.push_back(p.agents[j].actions[r.shared.act[c][j]]);
  }
  for (int y : r.priv.obs) out.push_back(p.agents[r.agent].obs[y]);
  for (int u : r.priv.act) out.push_back(p.agents[r.agent].actions[u]);
  return out;
}

inline std::string realization_key(const ProblemSpec& p,
                                   const InfoRealization& r) {
  return detail::label_tuple(realization_labels(p, r));
}

namespace detail {
inline int index_of(const std::vector<std::string>& labels,
                    const std::string& s, const std::string& what) {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == s) return static_cast<int>(i);
  throw std::invalid_argument("unknown " + what + " label '" + s + "'");
}
}  // namespace detail

/// Parses a flat label tuple into a realization of agent `k` at stage `s`.
/// With `alternate_shared_order` the shared block is read agent-major
/// instead (per agent: observations then actions, stages ascending).
inline InfoRealization parse_realization(const ProblemSpec& p, int k, int s,
                                         const std::vector<std::string>& tuple,
                                         bool alternate_shared_order = false) {
  InfoRealization r;
  r.agent = k;
  r.stage = s;
  const int cover = shared_cover(s, p.delay);
  const int obs_len = priv_obs_len(s, p.delay);
  const int act_len = priv_act_len(s, p.delay);
  size_t expected = static_cast<size_t>(obs_len + act_len);
  for (int j = 0; j < p.num_agents(); ++j) expected += 2 * cover;
  if (tuple.size() != expected)
    throw std::invalid_argument("realization tuple has " +
                                std::to_string(tuple.size()) +
                                " entries, expected " +
                                std::to_string(expected));
  size_t pos = 0;
  r.shared.obs.assign(cover, std::vector<int>(p.num_agents(), 0));
  r.shared.act.assign(cover, std::vector<int>(p.num_agents(), 0));
  if (!alternate_shared_order) {
    for (int c = 0; c < cover; ++c) {
      for (int j = 0; j < p.num_agents(); ++j)
        r.shared.obs[c][j] =
            detail::index_of(p.agents[j].obs, tuple[pos++], "observation");
      for (int j = 0; j < p.num_agents(); ++j)
        r.shared.act[c][j] =
            detail::index_of(p.agents[j].actions, tuple[pos++], "action");
    }
  } else {
    for (int j = 0; j < p.num_agents(); ++j) {
      for (int c = 0; c < cover; ++c)
        r.shared.obs[c][j] =
            detail::index_of(p.agents[j].obs, tuple[pos++], "observation");
      for (int c = 0; c < cover; ++c)
        r.shared.act[c][j] =
            detail::index_of(p.agents[j].actions, tuple[pos++], "action");
    }
  }
  for (int i = 0; i < obs_len; ++i)
    r.priv.obs.push_back(
        detail::index_of(p.agents[k].obs, tuple[pos++], "observation"));
  for (int i = 0; i < act_len; ++i)
    r.priv.act.push_back(
        detail::index_of(p.agents[k].actions, tuple[pos++], "action"));
  return r;
}

}  // namespace decpomdp
