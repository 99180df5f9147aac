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

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "decpomdp/beliefs.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"

// Brute-force reference implementations. Everything here works directly on
// enumerated system histories and plain Bayes conditioning; none of it
// shares probability machinery with the recursive filters or the backward
// induction, so agreement between the two is evidence, not tautology.

namespace decpomdp::oracle {

struct Trajectory {
  std::vector<int> x;               // per stage
  std::vector<std::vector<int>> y;  // [stage][agent]
  std::vector<std::vector<int>> u;  // [stage][agent]
  double prob = 0.0;
};

/// P(first own observation) of one agent.
inline std::vector<double> first_obs_marginal(const ProblemSpec& p, int k) {
  std::vector<double> out(p.num_obs(k), 0.0);
  for (int x = 0; x < p.num_states(); ++x)
    for (int y = 0; y < p.num_obs(k); ++y)
      out[y] += p.initial[x] * p.obs1(k, x, y);
  return out;
}

/// Agent k's realization at stage s read off a raw system history.
inline InfoRealization info_from_history(const ProblemSpec& p, int k, int s,
                                         const std::vector<std::vector<int>>& y,
                                         const std::vector<std::vector<int>>& u) {
  InfoRealization r;
  r.agent = k;
  r.stage = s;
  const int cover = shared_cover(s, p.delay);
  for (int tau = 0; tau < cover; ++tau) {
    r.shared.obs.push_back(y[tau]);
    r.shared.act.push_back(u[tau]);
  }
  const int begin = priv_obs_begin(s, p.delay);
  for (int tau = begin; tau <= s; ++tau) r.priv.obs.push_back(y[tau][k]);
  for (int tau = begin; tau <= s - 1; ++tau) r.priv.act.push_back(u[tau][k]);
  return r;
}

namespace detail {

using decpomdp::detail::next_tuple;

/// Recursive walk over all system histories through stage `limit`.
/// `fixed_obs(tau, j)` pins observation branches (-1 = free);
/// `actions(tau, y, u)` must fill u[tau] given the history so far and may
/// veto the branch by returning false. Actions are produced for every
/// stage through `limit` so leaves can price stage-`limit` costs.
/// `leaf(w, x, y, u)` receives each completed history and its probability.
class HistoryWalker {
 public:
  HistoryWalker(const ProblemSpec& p, int limit,
                std::function<int(int, int)> fixed_obs,
                std::function<bool(int, const std::vector<std::vector<int>>&,
                                   std::vector<std::vector<int>>&)>
                    actions,
                std::function<void(double, const std::vector<int>&,
                                   const std::vector<std::vector<int>>&,
                                   const std::vector<std::vector<int>>&)>
                    leaf)
      : p_(p),
        limit_(limit),
        fixed_obs_(std::move(fixed_obs)),
        actions_(std::move(actions)),
        leaf_(std::move(leaf)),
        x_(limit + 1),
        y_(limit + 1, std::vector<int>(p.num_agents())),
        u_(limit + 1, std::vector<int>(p.num_agents())) {}

  void run() { stage(0, 1.0); }

 private:
  void stage(int tau, double w) {
    const int a_prev = tau > 0 ? p_.encode_actions(u_[tau - 1]) : 0;
    for (int x = 0; x < p_.num_states(); ++x) {
      const double wx =
          w * (tau == 0 ? p_.initial[x] : p_.trans(x_[tau - 1], a_prev, x));
      if (wx == 0.0) continue;
      x_[tau] = x;
      obs_branch(tau, 0, wx);
    }
  }

  void obs_branch(int tau, int j, double w) {
    if (w == 0.0) return;
    const int kk = p_.num_agents();
    if (j == kk) {
      if (!actions_(tau, y_, u_)) return;
      if (tau == limit_)
        leaf_(w, x_, y_, u_);
      else
        stage(tau + 1, w);
      return;
    }
    const int a_prev = tau > 0 ? p_.encode_actions(u_[tau - 1]) : 0;
    auto chan = [&](int yy) {
      return tau == 0 ? p_.obs1(j, x_[tau], yy)
                      : p_.obs(j, x_[tau], a_prev, yy);
    };
    const int pin = fixed_obs_(tau, j);
    if (pin >= 0) {
      y_[tau][j] = pin;
      obs_branch(tau, j + 1, w * chan(pin));
    } else {
      for (int yy = 0; yy < p_.num_obs(j); ++yy) {
        y_[tau][j] = yy;
        obs_branch(tau, j + 1, w * chan(yy));
      }
    }
  }

  const ProblemSpec& p_;
  int limit_;
  std::function<int(int, int)> fixed_obs_;
  std::function<bool(int, const std::vector<std::vector<int>>&,
                     std::vector<std::vector<int>>&)>
      actions_;
  std::function<void(double, const std::vector<int>&,
                     const std::vector<std::vector<int>>&,
                     const std::vector<std::vector<int>>&)>
      leaf_;
  std::vector<int> x_;
  std::vector<std::vector<int>> y_, u_;
};

/// Own observation of the conditioning realization at any stage <= r.stage.
inline int own_obs_at(const InfoRealization& r, int delay, int tau) {
  const int w0 = priv_obs_begin(r.stage, delay);
  return tau < w0 ? r.shared.obs[tau][r.agent] : r.priv.obs[tau - w0];
}
/// Own action embedded in the conditioning realization, tau <= r.stage-1.
inline int own_act_at(const InfoRealization& r, int delay, int tau) {
  const int w0 = priv_obs_begin(r.stage, delay);
  return tau < w0 ? r.shared.act[tau][r.agent] : r.priv.act[tau - w0];
}

}  // namespace detail

/// Unnormalized joint weight accumulated over (current state, others'
/// private blocks) for every history consistent with the realization, plus
/// the total mass of the conditioning event. With
/// `own_actions_from_strategy` the own actions are produced by the
/// profile's own strategy and checked against the embedded values;
/// otherwise they are pinned directly to the embedded values, which is the
/// strategy-independent form.
inline PrivatePosterior exhaustive_posterior(const ProblemSpec& p,
                                             const StrategyProfile& g,
                                             const InfoRealization& r,
                                             bool own_actions_from_strategy =
                                                 false,
                                             double* event_mass = nullptr) {
  const int k = r.agent;
  const int s = r.stage;
  const int cover = r.shared.cover();
  GroupPrivateSpace group(p, s, k);
  PrivatePosterior out;
  out.agent = k;
  out.stage = s;
  out.p.assign(static_cast<size_t>(p.num_states()) * group.size(), 0.0);
  double total = 0.0;

  auto fixed_obs = [&](int tau, int j) -> int {
    if (j == k) return detail::own_obs_at(r, p.delay, tau);
    return tau < cover ? r.shared.obs[tau][j] : -1;
  };
  auto actions = [&](int tau, const std::vector<std::vector<int>>& y,
                     std::vector<std::vector<int>>& u) -> bool {
    for (int j = 0; j < p.num_agents(); ++j) {
      int uj;
      if (j == k && !own_actions_from_strategy) {
        uj = tau < s ? detail::own_act_at(r, p.delay, tau) : 0;
      } else {
        InfoRealization rj = info_from_history(p, j, tau, y, u);
        uj = g.action(j, tau, InfoSpace(p, j, tau).encode(rj));
        if (j == k && tau < s && uj != detail::own_act_at(r, p.delay, tau))
          return false;
      }
      if (j != k && tau < cover && uj != r.shared.act[tau][j]) return false;
      u[tau][j] = uj;
    }
    return true;
  };
  auto leaf = [&](double w, const std::vector<int>& x,
                  const std::vector<std::vector<int>>& y,
                  const std::vector<std::vector<int>>& u) {
    total += w;
    std::vector<long long> comp(group.count());
    for (int i = 0; i < group.count(); ++i) {
      const int j = group.agent(i);
      PrivateHistory h;
      const int begin = priv_obs_begin(s, p.delay);
      for (int tau = begin; tau <= s; ++tau) h.obs.push_back(y[tau][j]);
      for (int tau = begin; tau <= s - 1; ++tau) h.act.push_back(u[tau][j]);
      comp[i] = group.space(i).encode(h);
    }
    out.p[static_cast<size_t>(x[s]) * group.size() + group.compose(comp)] += w;
  };

  detail::HistoryWalker(p, s, fixed_obs, actions, leaf).run();
  if (event_mass) *event_mass = total;
  out.off_support = !decpomdp::detail::normalize_pmf(out.p);
  return out;
}

/// Probability of the realization's information event, with the own
/// actions pinned to the embedded values.
inline double info_event_mass(const ProblemSpec& p, const StrategyProfile& g,
                              const InfoRealization& r) {
  double mass = 0.0;
  exhaustive_posterior(p, g, r, false, &mass);
  return mass;
}

/// Expected remaining cost from stage r.stage on, conditioned on the
/// realization, all actions produced by the full profile. NaN when the
/// realization has probability zero.
inline double conditional_cost_to_go(const ProblemSpec& p,
                                     const StrategyProfile& g,
                                     const InfoRealization& r) {
  const int k = r.agent;
  const int s = r.stage;
  const int cover = r.shared.cover();
  double total_mass = 0.0, total_cost = 0.0;

  auto fixed_obs = [&](int tau, int j) -> int {
    if (tau > s) return -1;
    if (j == k) return detail::own_obs_at(r, p.delay, tau);
    return tau < cover ? r.shared.obs[tau][j] : -1;
  };
  auto actions = [&](int tau, const std::vector<std::vector<int>>& y,
                     std::vector<std::vector<int>>& u) -> bool {
    for (int j = 0; j < p.num_agents(); ++j) {
      InfoRealization rj = info_from_history(p, j, tau, y, u);
      const int uj = g.action(j, tau, InfoSpace(p, j, tau).encode(rj));
      if (j == k && tau < s && uj != detail::own_act_at(r, p.delay, tau))
        return false;
      if (j != k && tau < cover && uj != r.shared.act[tau][j]) return false;
      u[tau][j] = uj;
    }
    return true;
  };
  auto leaf = [&](double w, const std::vector<int>& x,
                  const std::vector<std::vector<int>>&,
                  const std::vector<std::vector<int>>& u) {
    total_mass += w;
    double c = 0.0;
    for (int tau = s; tau < p.horizon; ++tau)
      c += p.cost(tau, x[tau], p.encode_actions(u[tau]));
    total_cost += w * c;
  };

  detail::HistoryWalker(p, p.horizon - 1, fixed_obs, actions, leaf).run();
  if (total_mass <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return total_cost / total_mass;
}

/// Full-support joint law of (states, observations, actions) under a
/// profile: every positive-probability system history with its weight.
inline std::vector<Trajectory> joint_law(const ProblemSpec& p,
                                         const StrategyProfile& g) {
  std::vector<Trajectory> out;
  auto fixed_obs = [](int, int) { return -1; };
  auto actions = [&](int tau, const std::vector<std::vector<int>>& y,
                     std::vector<std::vector<int>>& u) -> bool {
    for (int j = 0; j < p.num_agents(); ++j) {
      InfoRealization rj = info_from_history(p, j, tau, y, u);
      u[tau][j] = g.action(j, tau, InfoSpace(p, j, tau).encode(rj));
    }
    return true;
  };
  auto leaf = [&](double w, const std::vector<int>& x,
                  const std::vector<std::vector<int>>& y,
                  const std::vector<std::vector<int>>& u) {
    if (w == 0.0) return;
    out.push_back({x, y, u, w});
  };
  detail::HistoryWalker(p, p.horizon - 1, fixed_obs, actions, leaf).run();
  return out;
}

// ---------------------------------------------------------------------------
// Fast exact payoff. The history tree of (state, observation) branches is
// profile-independent; per-agent realization indices evolve through
// precomputed extension tables, so evaluating one profile is a plain tree
// walk with table lookups. Used stand-alone and by the team search.

class PayoffEvaluator {
 public:
  explicit PayoffEvaluator(const ProblemSpec& p) : p_(p) {
    const int kk = p.num_agents();
    ext_.resize(kk);
    rcard_.resize(p.horizon, 1);
    for (int s = 0; s + 1 < p.horizon; ++s)
      if (s >= p.delay - 1) {
        long long c = 1;
        for (int j = 0; j < kk; ++j)
          c *= static_cast<long long>(p.num_obs(j)) * p.num_actions(j);
        rcard_[s] = c;
      }
    std::vector<int> oobs(kk), oact(kk);
    for (int k = 0; k < kk; ++k) {
      ext_[k].resize(p.horizon);
      for (int s = 0; s + 1 < p.horizon; ++s) {
        InfoSpace space(p, k, s);
        InfoSpace next(p, k, s + 1);
        const long long ni = space.size();
        const int nu = p.num_actions(k);
        const int ny = p.num_obs(k);
        auto& table = ext_[k][s];
        table.assign(static_cast<size_t>(ni) * nu * ny * rcard_[s], 0);
        for (long long i = 0; i < ni; ++i) {
          const InfoRealization r = space.decode(i);
          for (int uo = 0; uo < nu; ++uo)
            for (int yn = 0; yn < ny; ++yn)
              for (long long rk = 0; rk < rcard_[s]; ++rk) {
                decode_reveal(rk, oobs, oact);
                const InfoRealization child =
                    extend_info(p, r, uo, yn, oobs, oact);
                table[static_cast<size_t>(
                    ((i * nu + uo) * ny + yn) * rcard_[s] + rk)] =
                    next.encode(child);
              }
        }
      }
    }
  }

  /// Exact expected total cost of a deterministic profile.
  double expected_cost(const StrategyProfile& g) const {
    const int kk = p_.num_agents();
    Scratch sc(p_.horizon, kk);
    double total = 0.0;
    std::vector<int> y0(kk);
    for (int x = 0; x < p_.num_states(); ++x) {
      if (p_.initial[x] == 0.0) continue;
      std::fill(y0.begin(), y0.end(), 0);
      do {
        double w = p_.initial[x];
        for (int j = 0; j < kk; ++j) w *= p_.obs1(j, x, y0[j]);
        if (w == 0.0) continue;
        sc.y[0] = y0;
        for (int j = 0; j < kk; ++j) sc.idx[0][j] = y0[j];
        walk(g, sc, 0, x, w, total);
      } while (decpomdp::detail::next_tuple(y0, ycard()));
    }
    return total;
  }

  /// One simulated rollout; returns the realized total cost.
  double rollout(const StrategyProfile& g, std::mt19937_64& rng) const {
    const int kk = p_.num_agents();
    Scratch sc(p_.horizon, kk);
    auto draw = [&](auto&& pmf_at, int card) {
      const double r = uniform01(rng);
      double acc = 0.0;
      for (int i = 0; i < card; ++i) {
        acc += pmf_at(i);
        if (r < acc) return i;
      }
      return card - 1;
    };
    int x = draw([&](int i) { return p_.initial[i]; }, p_.num_states());
    for (int j = 0; j < kk; ++j) {
      sc.y[0][j] = draw([&](int i) { return p_.obs1(j, x, i); }, p_.num_obs(j));
      sc.idx[0][j] = sc.y[0][j];
    }
    double cost = 0.0;
    for (int s = 0; s < p_.horizon; ++s) {
      for (int j = 0; j < kk; ++j)
        sc.u[s][j] = g.action(j, s, sc.idx[s][j]);
      const int a = p_.encode_actions(sc.u[s]);
      cost += p_.cost(s, x, a);
      if (s + 1 == p_.horizon) break;
      const int x2 = draw([&](int i) { return p_.trans(x, a, i); },
                          p_.num_states());
      for (int j = 0; j < kk; ++j)
        sc.y[s + 1][j] =
            draw([&](int i) { return p_.obs(j, x2, a, i); }, p_.num_obs(j));
      const long long rk = reveal_key(sc, s);
      for (int j = 0; j < kk; ++j)
        sc.idx[s + 1][j] = child_index(j, s, sc.idx[s][j], sc.u[s][j],
                                       sc.y[s + 1][j], rk);
      x = x2;
    }
    return cost;
  }

 private:
  struct Scratch {
    Scratch(int n, int kk)
        : y(n, std::vector<int>(kk)),
          u(n, std::vector<int>(kk)),
          idx(n, std::vector<long long>(kk)) {}
    std::vector<std::vector<int>> y, u;
    std::vector<std::vector<long long>> idx;
  };

  static double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw; avoids distribution-object implementation
    // differences so that seeded runs reproduce everywhere.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  const std::vector<int>& ycard() const {
    if (ycard_.empty())
      for (int j = 0; j < p_.num_agents(); ++j)
        ycard_.push_back(p_.num_obs(j));
    return ycard_;
  }

  void decode_reveal(long long rk, std::vector<int>& oobs,
                     std::vector<int>& oact) const {
    const int kk = p_.num_agents();
    for (int j = kk - 1; j >= 0; --j) {
      oact[j] = static_cast<int>(rk % p_.num_actions(j));
      rk /= p_.num_actions(j);
    }
    for (int j = kk - 1; j >= 0; --j) {
      oobs[j] = static_cast<int>(rk % p_.num_obs(j));
      rk /= p_.num_obs(j);
    }
  }

  long long reveal_key(const Scratch& sc, int s) const {
    if (rcard_[s] == 1) return 0;
    const int reveal_stage = s + 1 - p_.delay;
    long long rk = 0;
    for (int j = 0; j < p_.num_agents(); ++j)
      rk = rk * p_.num_obs(j) + sc.y[reveal_stage][j];
    for (int j = 0; j < p_.num_agents(); ++j)
      rk = rk * p_.num_actions(j) + sc.u[reveal_stage][j];
    return rk;
  }

  long long child_index(int k, int s, long long i, int uo, int yn,
                        long long rk) const {
    return ext_[k][s][static_cast<size_t>(
        ((i * p_.num_actions(k) + uo) * p_.num_obs(k) + yn) * rcard_[s] + rk)];
  }

  void walk(const StrategyProfile& g, Scratch& sc, int s, int x, double w,
            double& total) const {
    const int kk = p_.num_agents();
    for (int j = 0; j < kk; ++j) sc.u[s][j] = g.action(j, s, sc.idx[s][j]);
    const int a = p_.encode_actions(sc.u[s]);
    total += w * p_.cost(s, x, a);
    if (s + 1 == p_.horizon) return;
    const long long rk = reveal_key(sc, s);
    std::vector<int> yn(kk, 0);
    for (int x2 = 0; x2 < p_.num_states(); ++x2) {
      const double wt = w * p_.trans(x, a, x2);
      if (wt == 0.0) continue;
      std::fill(yn.begin(), yn.end(), 0);
      do {
        double wy = wt;
        for (int j = 0; j < kk; ++j) wy *= p_.obs(j, x2, a, yn[j]);
        if (wy == 0.0) continue;
        sc.y[s + 1] = yn;
        for (int j = 0; j < kk; ++j)
          sc.idx[s + 1][j] =
              child_index(j, s, sc.idx[s][j], sc.u[s][j], yn[j], rk);
        walk(g, sc, s + 1, x2, wy, total);
      } while (decpomdp::detail::next_tuple(yn, ycard()));
    }
  }

  const ProblemSpec& p_;
  std::vector<std::vector<std::vector<long long>>> ext_;  // [k][s][packed]
  std::vector<long long> rcard_;
  mutable std::vector<int> ycard_;
};

/// Exact expected total cost under a profile (single-shot convenience).
inline double exact_payoff(const ProblemSpec& p, const StrategyProfile& g) {
  return PayoffEvaluator(p).expected_cost(g);
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

/// Seeded Monte-Carlo estimate of the expected total cost.
inline MonteCarloEstimate monte_carlo_payoff(const ProblemSpec& p,
                                             const StrategyProfile& g,
                                             long long samples,
                                             uint64_t seed) {
  PayoffEvaluator eval(p);
  std::mt19937_64 rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (long long i = 0; i < samples; ++i) {
    const double c = eval.rollout(g, rng);
    sum += c;
    sumsq += c * c;
  }
  MonteCarloEstimate est;
  est.samples = samples;
  est.mean = sum / static_cast<double>(samples);
  const double var =
      (sumsq - sum * sum / static_cast<double>(samples)) /
      static_cast<double>(samples - 1);
  est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
  return est;
}

// ---------------------------------------------------------------------------
// History-tree best response: backward induction on the raw realization
// tree, beliefs and transition probabilities both obtained by exhaustive
// Bayes conditioning (mass ratios), sharing nothing with the DP filters.

struct TreeBestResponse {
  double payoff = 0.0;
  StrategyProfile profile;  // input profile with agent k's strategy replaced
  std::vector<std::vector<double>> value;  // [stage][info idx], NaN unreachable
};

inline TreeBestResponse tree_best_response(const ProblemSpec& p,
                                           const StrategyProfile& g, int k) {
  const int n = p.horizon;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TreeBestResponse res;
  res.profile = g;
  res.value.resize(n);
  std::vector<std::vector<double>> mass(n);

  for (int s = n - 1; s >= 0; --s) {
    InfoSpace space(p, k, s);
    res.value[s].assign(static_cast<size_t>(space.size()), nan);
    mass[s].assign(static_cast<size_t>(space.size()), 0.0);
    GroupPrivateSpace group(p, s, k);
    SharedSpace shared_space(p, s);
    const bool reveal = s >= p.delay - 1;
    std::vector<int> ocard, oobs(p.num_agents(), 0), oact(p.num_agents(), 0);
    for (int j = 0; j < p.num_agents(); ++j)
      if (j != k) ocard.push_back(p.num_obs(j));

    for (long long idx = 0; idx < space.size(); ++idx) {
      const InfoRealization r = space.decode(idx);
      double m = 0.0;
      const PrivatePosterior xi = exhaustive_posterior(p, g, r, false, &m);
      mass[s][static_cast<size_t>(idx)] = m;
      if (m <= 0.0) continue;
      const long long shared_idx = shared_space.encode(r.shared);

      double best = std::numeric_limits<double>::infinity();
      int best_u = 0;
      std::vector<int> u(p.num_agents());
      PrivateHistory h;
      for (int uo = 0; uo < p.num_actions(k); ++uo) {
        double q = 0.0;
        for (long long lam = 0; lam < group.size(); ++lam) {
          double col = 0.0;
          for (int x = 0; x < p.num_states(); ++x)
            col += xi.p[static_cast<size_t>(x) * group.size() + lam];
          if (col == 0.0) continue;
          u[k] = uo;
          for (int i = 0; i < group.count(); ++i) {
            const int j = group.agent(i);
            group.space(i).decode(group.component(lam, i), h);
            u[j] = g.action(j, s,
                            InfoSpace(p, j, s).compose(
                                shared_idx, group.space(i).encode(h)));
          }
          const int a = p.encode_actions(u);
          for (int x = 0; x < p.num_states(); ++x)
            q += p.cost(s, x, a) *
                 xi.p[static_cast<size_t>(x) * group.size() + lam];
        }
        if (s + 1 < n) {
          InfoSpace next(p, k, s + 1);
          // Children: own next observation x revealed others' observations;
          // the revealed actions are determined by the profile.
          std::vector<int> od(ocard.size(), 0);
          do {
            if (reveal) {
              int pos = 0;
              for (int j = 0; j < p.num_agents(); ++j) {
                if (j == k) continue;
                oobs[j] = od[pos++];
                const InfoRealization rj = reconstruct_info(
                    p, r.shared, j, shared_cover(s, p.delay), oobs[j]);
                oact[j] = g.action(j, rj.stage,
                                   InfoSpace(p, j, rj.stage).encode(rj));
              }
            }
            for (int yn = 0; yn < p.num_obs(k); ++yn) {
              const InfoRealization child =
                  extend_info(p, r, uo, yn, oobs, oact);
              const long long cidx = next.encode(child);
              const double cm = mass[s + 1][static_cast<size_t>(cidx)];
              if (cm <= 0.0) continue;
              q += cm / m * res.value[s + 1][static_cast<size_t>(cidx)];
            }
          } while (reveal && !ocard.empty() &&
                   decpomdp::detail::next_tuple(od, ocard));
        }
        if (q < best) {
          best = q;
          best_u = uo;
        }
      }
      res.value[s][static_cast<size_t>(idx)] = best;
      res.profile.slot(k, s, idx) = best_u;
    }
  }

  // Expected first-stage value; the stage-0 event masses are exactly the
  // first-observation marginals.
  InfoSpace space0(p, k, 0);
  double total = 0.0;
  for (long long idx = 0; idx < space0.size(); ++idx)
    if (mass[0][static_cast<size_t>(idx)] > 0.0)
      total += mass[0][static_cast<size_t>(idx)] *
               res.value[0][static_cast<size_t>(idx)];
  res.payoff = total;
  return res;
}

// ---------------------------------------------------------------------------
// Exhaustive search over deterministic team profiles. Actions are only
// enumerated on realizations that are action-consistent with the already
// fixed earlier stages; everything else carries probability zero.

struct TeamSearchResult {
  double payoff = 0.0;
  StrategyProfile profile;
  long long profiles_searched = 0;
};

inline TeamSearchResult enumerate_team_optimal(const ProblemSpec& p,
                                               long long guard = 10'000'000) {
  // Size estimate: one consistent realization per observation pattern.
  double log2_profiles = 0.0;
  for (int s = 0; s < p.horizon; ++s) {
    double shared_patterns = 1.0;
    for (int c = 0; c < shared_cover(s, p.delay); ++c)
      for (int j = 0; j < p.num_agents(); ++j)
        shared_patterns *= p.num_obs(j);
    for (int k = 0; k < p.num_agents(); ++k) {
      const double own =
          std::pow(static_cast<double>(p.num_obs(k)),
                   priv_obs_len(s, p.delay));
      log2_profiles +=
          shared_patterns * own * std::log2(double(p.num_actions(k)));
    }
  }
  if (log2_profiles > std::log2(static_cast<double>(guard)))
    throw std::runtime_error(
        "team enumeration would visit about 2^" +
        std::to_string(log2_profiles) + " profiles, over the guard of " +
        std::to_string(guard));

  PayoffEvaluator eval(p);
  StrategyProfile g = make_default_profile(p);
  TeamSearchResult best;
  best.payoff = std::numeric_limits<double>::infinity();

  struct Slot {
    int agent;
    long long idx;
    int card;
  };
  std::function<void(int)> rec = [&](int s) {
    if (s == p.horizon) {
      const double pay = eval.expected_cost(g);
      ++best.profiles_searched;
      if (pay < best.payoff) {
        best.payoff = pay;
        best.profile = g;
      }
      return;
    }
    std::vector<Slot> slots;
    for (int k = 0; k < p.num_agents(); ++k) {
      InfoSpace space(p, k, s);
      for (long long idx = 0; idx < space.size(); ++idx)
        if (realization_consistent(p, g, space.decode(idx)))
          slots.push_back({k, idx, p.num_actions(k)});
    }
    std::vector<int> digits(slots.size(), 0);
    while (true) {
      for (size_t i = 0; i < slots.size(); ++i)
        g.slot(slots[i].agent, s, slots[i].idx) = digits[i];
      rec(s + 1);
      int pos = static_cast<int>(slots.size()) - 1;
      while (pos >= 0 && ++digits[pos] == slots[pos].card) digits[pos--] = 0;
      if (pos < 0) break;
    }
    for (const auto& sl : slots) g.slot(sl.agent, s, sl.idx) = 0;
  };
  rec(0);
  return best;
}

// ---------------------------------------------------------------------------
// Classical single-agent POMDP solved exactly on the reachable belief tree.

struct CentralizedSolution {
  double value = 0.0;
  StrategyProfile strategy;
};

inline CentralizedSolution centralized_pomdp_solve(const ProblemSpec& p) {
  if (p.num_agents() != 1)
    throw std::invalid_argument(
        "centralized solve requires a single-agent problem");
  CentralizedSolution sol;
  sol.strategy = make_default_profile(p);
  const int nx = p.num_states();
  const int ny = p.num_obs(0);
  const int nu = p.num_actions(0);
  const std::vector<int> no_reveal;

  // Value of a belief node; fills the policy along the way.
  std::function<double(int, const InfoRealization&, const std::vector<double>&)>
      value = [&](int s, const InfoRealization& r,
                  const std::vector<double>& b) -> double {
    double best = std::numeric_limits<double>::infinity();
    int best_u = 0;
    for (int u = 0; u < nu; ++u) {
      double q = 0.0;
      for (int x = 0; x < nx; ++x) q += b[x] * p.cost(s, x, u);
      if (s + 1 < p.horizon) {
        for (int y = 0; y < ny; ++y) {
          std::vector<double> nb(nx, 0.0);
          double py = 0.0;
          for (int x2 = 0; x2 < nx; ++x2) {
            double m = 0.0;
            for (int x = 0; x < nx; ++x) m += b[x] * p.trans(x, u, x2);
            m *= p.obs(0, x2, u, y);
            nb[x2] = m;
            py += m;
          }
          if (py == 0.0) continue;
          for (double& v : nb) v /= py;
          const InfoRealization child =
              extend_info(p, r, u, y, no_reveal, no_reveal);
          q += py * value(s + 1, child, nb);
        }
      }
      if (q < best) {
        best = q;
        best_u = u;
      }
    }
    sol.strategy.slot(0, s, InfoSpace(p, 0, s).encode(r)) = best_u;
    return best;
  };

  double total = 0.0;
  for (int y = 0; y < ny; ++y) {
    std::vector<double> b(nx, 0.0);
    double py = 0.0;
    for (int x = 0; x < nx; ++x) {
      b[x] = p.initial[x] * p.obs1(0, x, y);
      py += b[x];
    }
    if (py == 0.0) continue;
    for (double& v : b) v /= py;
    InfoRealization r;
    r.agent = 0;
    r.stage = 0;
    r.priv.obs.push_back(y);
    total += py * value(0, r, b);
  }
  sol.value = total;
  return sol;
}

// ---------------------------------------------------------------------------
// Exact team optimum through the equivalent coordinator recursion: the
// state is the joint posterior attached to the realized shared block, the
// decisions are joint prescriptions (one action per private block value).

struct CommonInfoResult {
  double value = 0.0;
  StrategyProfile profile;
};

namespace detail {

struct PrescriptionNode {
  std::vector<std::vector<int>> choice;  // [agent][private idx] -> action
  // children keyed by revealed-block digits, only under the best choice
  std::vector<std::pair<long long, std::unique_ptr<PrescriptionNode>>> kids;
};

}  // namespace detail

inline CommonInfoResult common_info_dp(const ProblemSpec& p,
                                       long long max_prescriptions = 1 << 20) {
  if (p.delay >= p.horizon)
    throw std::runtime_error(
        "common-information recursion is vacuous when the delay equals the "
        "horizon: the shared block stays empty at every stage, so the "
        "coordinator never receives information and the recursion reduces "
        "to brute force over full strategies");

  // Per-stage joint prescription counts, guarded both per stage and for
  // the whole recursion (prescriptions times branch factor, multiplied
  // over stages).
  std::vector<std::vector<long long>> priv_sizes(p.horizon);
  double log2_work = 0.0;
  for (int s = 0; s < p.horizon; ++s) {
    double log2_joint = 0.0;
    priv_sizes[s].resize(p.num_agents());
    for (int k = 0; k < p.num_agents(); ++k) {
      priv_sizes[s][k] = PrivateSpace(p, k, s).size();
      log2_joint += static_cast<double>(priv_sizes[s][k]) *
                    std::log2(double(p.num_actions(k)));
    }
    if (log2_joint > std::log2(static_cast<double>(max_prescriptions)))
      throw std::runtime_error(
          "joint prescription space at stage " + std::to_string(s + 1) +
          " is about 2^" + std::to_string(log2_joint) +
          ", over the guard of " + std::to_string(max_prescriptions));
    double log2_branch = 0.0;
    if (s + 1 < p.horizon && s >= p.delay - 1)
      for (int k = 0; k < p.num_agents(); ++k)
        log2_branch +=
            std::log2(double(p.num_obs(k)) * double(p.num_actions(k)));
    log2_work += log2_joint + log2_branch;
  }
  constexpr double kMaxWorkLog2 = 26.0;  // ~6.7e7 prescription evaluations
  if (log2_work > kMaxWorkLog2)
    throw std::runtime_error(
        "common-information recursion would evaluate about 2^" +
        std::to_string(log2_work) +
        " prescription nodes, over the built-in guard of 2^26");

  using detail::PrescriptionNode;
  std::function<std::pair<double, std::unique_ptr<PrescriptionNode>>(
      int, const std::vector<double>&)>
      rec = [&](int s, const std::vector<double>& pi) {
        GroupPrivateSpace group(p, s, -1);
        const long long ll = group.size();
        const int nx = p.num_states();

        // Odometer over joint prescriptions: one digit per (agent,
        // private index), most significant first.
        std::vector<std::vector<int>> choice(p.num_agents());
        for (int k = 0; k < p.num_agents(); ++k)
          choice[k].assign(static_cast<size_t>(priv_sizes[s][k]), 0);

        double best = std::numeric_limits<double>::infinity();
        std::unique_ptr<PrescriptionNode> best_node;
        std::vector<SharedJointChild> children;
        while (true) {
          double q = 0.0;
          for (long long lam = 0; lam < ll; ++lam) {
            double col = 0.0;
            for (int x = 0; x < nx; ++x)
              col += pi[static_cast<size_t>(x) * ll + lam];
            if (col == 0.0) continue;
            std::vector<int> u(p.num_agents());
            for (int k = 0; k < p.num_agents(); ++k)
              u[k] = choice[k][static_cast<size_t>(group.component(lam, k))];
            const int a = p.encode_actions(u);
            for (int x = 0; x < nx; ++x)
              q += p.cost(s, x, a) * pi[static_cast<size_t>(x) * ll + lam];
          }
          auto node = std::make_unique<PrescriptionNode>();
          node->choice = choice;
          if (s + 1 < p.horizon) {
            shared_joint_push(
                p, s, pi,
                [&](int j, long long priv_idx) {
                  return choice[j][static_cast<size_t>(priv_idx)];
                },
                children);
            for (auto& child : children) {
              auto [cv, cn] = rec(s + 1, child.pi);
              q += child.prob * cv;
              node->kids.emplace_back(child.key, std::move(cn));
            }
          }
          if (q < best) {
            best = q;
            best_node = std::move(node);
          }
          // advance odometer with carry over all (agent, private) digits
          bool carried = true;
          for (int k = p.num_agents() - 1; carried && k >= 0; --k)
            for (long long i = priv_sizes[s][k] - 1; carried && i >= 0; --i) {
              if (++choice[k][static_cast<size_t>(i)] < p.num_actions(k))
                carried = false;
              else
                choice[k][static_cast<size_t>(i)] = 0;
            }
          if (carried) break;
        }
        return std::make_pair(best, std::move(best_node));
      };

  auto [value, root] = rec(0, shared_joint_init(p));

  // Replay the optimal decision tree to write out a full profile keyed by
  // (shared block, private block) realizations.
  CommonInfoResult res;
  res.value = value;
  res.profile = make_default_profile(p);
  std::function<void(int, long long, const PrescriptionNode&)> fill =
      [&](int s, long long shared_idx, const PrescriptionNode& node) {
        for (int k = 0; k < p.num_agents(); ++k) {
          InfoSpace space(p, k, s);
          for (long long lam = 0; lam < priv_sizes[s][k]; ++lam)
            res.profile.slot(k, s, space.compose(shared_idx, lam)) =
                node.choice[k][static_cast<size_t>(lam)];
        }
        if (s + 1 >= p.horizon) return;
        long long block = 1;
        if (s >= p.delay - 1)
          for (int k = 0; k < p.num_agents(); ++k)
            block *= static_cast<long long>(p.num_obs(k)) * p.num_actions(k);
        for (const auto& [key, kid] : node.kids)
          fill(s + 1, shared_idx * block + key, *kid);
      };
  fill(0, 0, *root);
  return res;
}

// ---------------------------------------------------------------------------
// Reference conditionals on the shared block, for cross-checking the
// recursive tables.

/// P(state at the newest covered stage | shared block), by direct forward
/// summation with the embedded actions treated as inputs. Empty when the
/// block is inconsistent with the profile or carries zero probability.
inline std::vector<double> delayed_state_conditional(const ProblemSpec& p,
                                                     const StrategyProfile& g,
                                                     const SharedHistory& sh) {
  if (!shared_action_consistency(p, g, sh)) return {};
  const int nx = p.num_states();
  std::vector<double> alpha(nx, 0.0);
  for (int x = 0; x < nx; ++x) {
    alpha[x] = p.initial[x];
    for (int j = 0; j < p.num_agents(); ++j)
      alpha[x] *= p.obs1(j, x, sh.obs[0][j]);
  }
  for (int tau = 1; tau < sh.cover(); ++tau) {
    const int a = p.encode_actions(sh.act[tau - 1]);
    std::vector<double> next(nx, 0.0);
    for (int x2 = 0; x2 < nx; ++x2) {
      double m = 0.0;
      for (int x = 0; x < nx; ++x) m += alpha[x] * p.trans(x, a, x2);
      for (int j = 0; j < p.num_agents(); ++j)
        m *= p.obs(j, x2, a, sh.obs[tau][j]);
      next[x2] = m;
    }
    alpha.swap(next);
  }
  if (!decpomdp::detail::normalize_pmf(alpha)) alpha.clear();
  return alpha;
}

/// P(current state, all private blocks | shared block) under a profile, by
/// exhaustive Bayes over histories. Empty when the block has probability
/// zero. Layout matches the recursive joint table (x * L + lam).
inline std::vector<double> shared_joint_conditional(const ProblemSpec& p,
                                                    const StrategyProfile& g,
                                                    int s,
                                                    const SharedHistory& sh) {
  GroupPrivateSpace group(p, s, -1);
  std::vector<double> out(
      static_cast<size_t>(p.num_states()) * group.size(), 0.0);
  auto fixed_obs = [&](int tau, int j) -> int {
    return tau < sh.cover() ? sh.obs[tau][j] : -1;
  };
  auto actions = [&](int tau, const std::vector<std::vector<int>>& y,
                     std::vector<std::vector<int>>& u) -> bool {
    for (int j = 0; j < p.num_agents(); ++j) {
      InfoRealization rj = info_from_history(p, j, tau, y, u);
      const int uj = g.action(j, tau, InfoSpace(p, j, tau).encode(rj));
      if (tau < sh.cover() && uj != sh.act[tau][j]) return false;
      u[tau][j] = uj;
    }
    return true;
  };
  auto leaf = [&](double w, const std::vector<int>& x,
                  const std::vector<std::vector<int>>& y,
                  const std::vector<std::vector<int>>& u) {
    std::vector<long long> comp(p.num_agents());
    const int begin = priv_obs_begin(s, p.delay);
    for (int j = 0; j < p.num_agents(); ++j) {
      PrivateHistory h;
      for (int tau = begin; tau <= s; ++tau) h.obs.push_back(y[tau][j]);
      for (int tau = begin; tau <= s - 1; ++tau) h.act.push_back(u[tau][j]);
      comp[j] = group.space(j).encode(h);
    }
    out[static_cast<size_t>(x[s]) * group.size() + group.compose(comp)] += w;
  };
  detail::HistoryWalker(p, s, fixed_obs, actions, leaf).run();
  if (!decpomdp::detail::normalize_pmf(out)) out.clear();
  return out;
}

}  // namespace decpomdp::oracle
