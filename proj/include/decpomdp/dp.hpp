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

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "decpomdp/beliefs.hpp"
#include "decpomdp/info.hpp"
#include "decpomdp/log.hpp"
#include "decpomdp/model.hpp"

// Per-agent dynamic programming over information realizations. Each agent
// evaluates actions against its private posterior (over the current state
// and the other agents' private blocks); the continuation couples stages
// through the one-step measure and the realization-extension map.

namespace decpomdp {

/// Private posteriors for one agent at every realization of every stage.
/// Entries never produced by the forward pass keep off_support = true.
struct PosteriorTable {
  std::vector<std::vector<PrivatePosterior>> xi;  // [stage][info idx]
};

/// Forward pass: initial posteriors at stage 0, then one filter update per
/// (parent realization, own action, own observation, revealed block).
/// Fixing the other agents' strategies makes each child reachable from
/// exactly one parent combination, so every entry is written at most once.
inline PosteriorTable compute_posterior_table(const ProblemSpec& p,
                                              const StrategyProfile& g,
                                              int k) {
  const int n = p.horizon;
  PosteriorTable table;
  table.xi.resize(n);
  for (int s = 0; s < n; ++s) {
    table.xi[s].resize(static_cast<size_t>(InfoSpace(p, k, s).size()));
    for (auto& e : table.xi[s]) {
      e.agent = k;
      e.stage = s;
      e.off_support = true;
    }
  }
  for (int y = 0; y < p.num_obs(k); ++y)
    table.xi[0][static_cast<size_t>(y)] = init_private_posterior(p, k, y);

  std::vector<int> ocard;
  for (int j = 0; j < p.num_agents(); ++j)
    if (j != k) ocard.push_back(p.num_obs(j));

  for (int s = 0; s + 1 < n; ++s) {
    InfoSpace space(p, k, s);
    InfoSpace next(p, k, s + 1);
    const bool reveal = s >= p.delay - 1;
    const int reveal_stage = s + 1 - p.delay;
    for (long long idx = 0; idx < space.size(); ++idx) {
      const PrivatePosterior& xi = table.xi[s][static_cast<size_t>(idx)];
      if (xi.off_support) continue;
      const InfoRealization r = space.decode(idx);
      std::vector<int> oobs, oact;
      std::vector<int> od(ocard.size(), 0);
      do {
        if (reveal) {
          oobs.assign(p.num_agents(), 0);
          oact.assign(p.num_agents(), 0);
          int pos = 0;
          for (int j = 0; j < p.num_agents(); ++j) {
            if (j == k) continue;
            oobs[j] = od[pos++];
            const InfoRealization rj =
                reconstruct_info(p, r.shared, j, reveal_stage, oobs[j]);
            oact[j] =
                g.action(j, reveal_stage, InfoSpace(p, j, reveal_stage).encode(rj));
          }
        } else {
          oobs.clear();
          oact.clear();
        }
        for (int u = 0; u < p.num_actions(k); ++u)
          for (int y = 0; y < p.num_obs(k); ++y) {
            const InfoRealization child = extend_info(p, r, u, y, oobs, oact);
            table.xi[s + 1][static_cast<size_t>(next.encode(child))] =
                update_private_posterior(p, g, xi, r, u, y, oobs, oact);
          }
      } while (reveal && !ocard.empty() &&
               decpomdp::detail::next_tuple(od, ocard));
    }
  }
  return table;
}

/// One backward-induction sweep over the realizations of a single stage.
struct StageEval {
  std::vector<double> value;  // per info idx, NaN where off support
  std::vector<int> action;    // argmin per info idx, 0 where off support
  bool missing_child = false;  // a positive-weight child had no value yet
};

inline StageEval eval_stage(const ProblemSpec& p, const StrategyProfile& g,
                            int k, int s,
                            const std::vector<PrivatePosterior>& xi_s,
                            const std::vector<double>* v_next,
                            int threads = 1) {
  const int n = p.horizon;
  InfoSpace space(p, k, s);
  const long long count = space.size();
  StageEval out;
  out.value.assign(static_cast<size_t>(count),
                   std::numeric_limits<double>::quiet_NaN());
  out.action.assign(static_cast<size_t>(count), 0);
  std::atomic<bool> missing{false};

  GroupPrivateSpace group(p, s, k);
  const long long ll = group.size();
  const int nx = p.num_states();
  const int ny = p.num_obs(k);
  const int nu = p.num_actions(k);
  const long long priv_size = space.priv().size();
  const bool interior = v_next != nullptr;
  const bool reveal = interior && s >= p.delay - 1;
  const int reveal_stage = s + 1 - p.delay;

  std::vector<InfoSpace> other_spaces;
  other_spaces.reserve(static_cast<size_t>(p.num_agents()));
  for (int j = 0; j < p.num_agents(); ++j) other_spaces.emplace_back(p, j, s);

  // Revealed-observation key per joint private block value: the other
  // agents' oldest window observations, most significant agent first.
  long long keycard = 1;
  std::vector<long long> dkey(static_cast<size_t>(ll), 0);
  std::vector<int> keydigit_card;
  if (reveal) {
    for (int i = 0; i < group.count(); ++i) {
      keycard *= p.num_obs(group.agent(i));
      keydigit_card.push_back(p.num_obs(group.agent(i)));
    }
    PrivateHistory h;
    for (long long lam = 0; lam < ll; ++lam) {
      long long key = 0;
      for (int i = 0; i < group.count(); ++i) {
        group.space(i).decode(group.component(lam, i), h);
        key = key * p.num_obs(group.agent(i)) + h.obs[0];
      }
      dkey[static_cast<size_t>(lam)] = key;
    }
  }

  auto work = [&](long long lo, long long hi) {
    PrivateHistory h;
    std::vector<int> u(p.num_agents());
    std::vector<double> weight(static_cast<size_t>(ny) * keycard);
    InfoSpace next_space = interior ? InfoSpace(p, k, s + 1) : space;
    for (long long idx = lo; idx < hi; ++idx) {
      const PrivatePosterior& xi = xi_s[static_cast<size_t>(idx)];
      if (xi.off_support) continue;
      const InfoRealization r = space.decode(idx);
      const long long shared_idx = idx / priv_size;

      // Revealed-block values per key: observations from the key digits,
      // actions forced by the other agents' strategies at the revealed
      // stage (their realization there is determined by the shared block
      // and the revealed observation).
      std::vector<std::vector<int>> key_obs, key_act;
      if (reveal) {
        key_obs.assign(static_cast<size_t>(keycard),
                       std::vector<int>(p.num_agents(), 0));
        key_act = key_obs;
        for (long long key = 0; key < keycard; ++key) {
          long long rest = key;
          for (int i = group.count() - 1; i >= 0; --i) {
            const int j = group.agent(i);
            key_obs[static_cast<size_t>(key)][j] =
                static_cast<int>(rest % p.num_obs(j));
            rest /= p.num_obs(j);
          }
          for (int i = 0; i < group.count(); ++i) {
            const int j = group.agent(i);
            const InfoRealization rj =
                reconstruct_info(p, r.shared, j, reveal_stage,
                                 key_obs[static_cast<size_t>(key)][j]);
            key_act[static_cast<size_t>(key)][j] = g.action(
                j, reveal_stage, InfoSpace(p, j, reveal_stage).encode(rj));
          }
        }
      } else {
        key_obs.assign(1, {});
        key_act.assign(1, {});
      }

      double best = std::numeric_limits<double>::infinity();
      int best_u = 0;
      for (int uo = 0; uo < nu; ++uo) {
        double q = 0.0;
        for (long long lam = 0; lam < ll; ++lam) {
          double col = 0.0;
          for (int x = 0; x < nx; ++x)
            col += xi.p[static_cast<size_t>(x) * ll + lam];
          if (col == 0.0) continue;
          u[k] = uo;
          for (int i = 0; i < group.count(); ++i) {
            const int j = group.agent(i);
            u[j] = g.action(
                j, s, other_spaces[static_cast<size_t>(j)].compose(
                          shared_idx, group.component(lam, i)));
          }
          const int a = p.encode_actions(u);
          for (int x = 0; x < nx; ++x)
            q += p.cost(s, x, a) * xi.p[static_cast<size_t>(x) * ll + lam];
        }
        if (interior) {
          const std::vector<double> m = stage_measure(p, g, xi, r, uo);
          std::fill(weight.begin(), weight.end(), 0.0);
          for (int y = 0; y < ny; ++y)
            for (long long lam = 0; lam < ll; ++lam) {
              double wsum = 0.0;
              const size_t base =
                  (static_cast<size_t>(y) * ll + lam) * nx * nx;
              for (int xx = 0; xx < nx * nx; ++xx) wsum += m[base + xx];
              weight[static_cast<size_t>(y) * keycard +
                     dkey[static_cast<size_t>(lam)]] += wsum;
            }
          for (int y = 0; y < ny; ++y)
            for (long long key = 0; key < keycard; ++key) {
              const double w =
                  weight[static_cast<size_t>(y) * keycard + key];
              if (w <= 0.0) continue;
              const InfoRealization child =
                  extend_info(p, r, uo, y, key_obs[static_cast<size_t>(key)],
                              key_act[static_cast<size_t>(key)]);
              const double v =
                  (*v_next)[static_cast<size_t>(next_space.encode(child))];
              if (std::isnan(v)) {
                missing.store(true, std::memory_order_relaxed);
                continue;
              }
              q += w * v;
            }
        }
        if (q < best) {
          best = q;
          best_u = uo;
        }
      }
      out.value[static_cast<size_t>(idx)] = best;
      out.action[static_cast<size_t>(idx)] = best_u;
    }
  };

  if (threads <= 1 || count < 64) {
    work(0, count);
  } else {
    const int nt = std::min<long long>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nt));
    for (int i = 0; i < nt; ++i) {
      const long long lo = count * i / nt;
      const long long hi = count * (i + 1) / nt;
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  out.missing_child = missing.load();
  return out;
}

/// Full single-agent best response against a fixed profile.
struct BestResponseResult {
  StrategyProfile profile;  // input profile with agent k's strategy replaced
  std::vector<std::vector<double>> value;  // [stage][info idx]
  double expected_value = 0.0;             // over the first own observation
  PosteriorTable posteriors;
};

inline BestResponseResult best_response(const ProblemSpec& p,
                                        const StrategyProfile& g, int k,
                                        int threads = 1) {
  const int n = p.horizon;
  BestResponseResult res;
  res.profile = g;
  res.posteriors = compute_posterior_table(p, g, k);
  res.value.resize(static_cast<size_t>(n));
  for (int s = n - 1; s >= 0; --s) {
    StageEval eval = eval_stage(
        p, g, k, s, res.posteriors.xi[s],
        s + 1 < n ? &res.value[static_cast<size_t>(s + 1)] : nullptr, threads);
    if (eval.missing_child)
      throw std::logic_error(
          "internal error: a positive-probability child realization has no "
          "value in a freshly built table");
    res.value[static_cast<size_t>(s)] = std::move(eval.value);
    res.profile.act[static_cast<size_t>(k)][static_cast<size_t>(s)] =
        std::move(eval.action);
  }
  double total = 0.0;
  for (int y = 0; y < p.num_obs(k); ++y) {
    double py = 0.0;
    for (int x = 0; x < p.num_states(); ++x)
      py += p.initial[x] * p.obs1(k, x, y);
    if (py > 0.0) total += py * res.value[0][static_cast<size_t>(y)];
  }
  res.expected_value = total;
  return res;
}

inline std::string format_profile(const ProblemSpec& p,
                                  const StrategyProfile& g) {
  std::ostringstream os;
  for (int k = 0; k < p.num_agents(); ++k) {
    os << "agent " << k + 1 << ":";
    for (int s = 0; s < p.horizon; ++s) {
      os << " stage " << s + 1 << " [";
      for (size_t i = 0; i < g.act[k][s].size(); ++i) {
        if (i) os << ",";
        os << g.act[k][s][i];
      }
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

enum class SweepMode { kTimeFirst, kFullSweep };

struct IterationOptions {
  SweepMode mode = SweepMode::kTimeFirst;
  int max_outer = 100;
  int max_inner = 100;
  int threads = 1;
};

struct IterationResult {
  StrategyProfile profile;
  std::vector<double> agent_values;  // per-agent expected value at the fixpoint
  double payoff = 0.0;
  int outer_rounds = 0;
};

namespace detail {

[[noreturn]] inline void report_no_convergence(const ProblemSpec& p,
                                               const StrategyProfile& prev,
                                               const StrategyProfile& last,
                                               int rounds) {
  throw std::runtime_error(
      "person-by-person iteration did not converge after " +
      std::to_string(rounds) +
      " outer rounds; last two profiles:\n--- previous ---\n" +
      format_profile(p, prev) + "--- current ---\n" + format_profile(p, last));
}

}  // namespace detail

/// Person-by-person strategy iteration. kTimeFirst stabilizes one stage at
/// a time from the last stage backwards, refreshing every agent's later-
/// stage value tables on arrival at each stage (and again whenever a
/// strategy change makes a previously unreachable child show up, which the
/// stale tables cannot price). kFullSweep plays whole-horizon best
/// responses round-robin. Both run until a complete pass leaves the
/// profile unchanged; unreachable realizations are always normalized to
/// action 0, so convergence is plain equality of action tables.
inline IterationResult pbp_iterate(const ProblemSpec& p,
                                   const IterationOptions& opts = {},
                                   const StrategyProfile* init = nullptr) {
  const int n = p.horizon;
  const int kk = p.num_agents();
  StrategyProfile g = init ? *init : make_default_profile(p);

  auto finish = [&](int rounds) {
    IterationResult res;
    res.profile = g;
    res.outer_rounds = rounds;
    res.agent_values.resize(static_cast<size_t>(kk));
    for (int k = 0; k < kk; ++k)
      res.agent_values[static_cast<size_t>(k)] =
          best_response(p, g, k, opts.threads).expected_value;
    res.payoff = res.agent_values[0];
    return res;
  };

  if (opts.mode == SweepMode::kFullSweep) {
    StrategyProfile prev = g;
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
      log_line(1, "full-sweep round " + std::to_string(outer));
      prev = g;
      for (int k = 0; k < kk; ++k) {
        BestResponseResult br = best_response(p, g, k, opts.threads);
        g.act[static_cast<size_t>(k)] = br.profile.act[static_cast<size_t>(k)];
      }
      if (g == prev) return finish(outer);
    }
    detail::report_no_convergence(p, prev, g, opts.max_outer);
  }

  // Stage-by-stage schedule.
  std::vector<PosteriorTable> tabs(static_cast<size_t>(kk));
  std::vector<std::vector<std::vector<double>>> vtab(
      static_cast<size_t>(kk));
  auto refresh = [&](int k, int t) {
    tabs[static_cast<size_t>(k)] = compute_posterior_table(p, g, k);
    auto& v = vtab[static_cast<size_t>(k)];
    v.assign(static_cast<size_t>(n), {});
    for (int s = n - 1; s > t; --s) {
      StageEval eval = eval_stage(
          p, g, k, s, tabs[static_cast<size_t>(k)].xi[s],
          s + 1 < n ? &v[static_cast<size_t>(s + 1)] : nullptr, opts.threads);
      if (eval.missing_child)
        throw std::logic_error(
            "internal error: missing child value in a freshly refreshed "
            "table");
      v[static_cast<size_t>(s)] = std::move(eval.value);
    }
  };

  StrategyProfile prev = g;
  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    log_line(1, "time-first round " + std::to_string(outer));
    prev = g;
    for (int t = n - 1; t >= 0; --t) {
      log_line(2, "  stabilizing stage " + std::to_string(t + 1));
      for (int k = 0; k < kk; ++k) refresh(k, t);
      for (int inner = 1;; ++inner) {
        if (inner > opts.max_inner)
          throw std::runtime_error(
              "stage " + std::to_string(t + 1) +
              " did not stabilize within " + std::to_string(opts.max_inner) +
              " agent sweeps");
        bool changed = false;
        for (int k = 0; k < kk; ++k) {
          // The stage-t posterior only depends on strategies before t, so
          // the tables from the last refresh stay valid inside this loop.
          StageEval eval = eval_stage(
              p, g, k, t, tabs[static_cast<size_t>(k)].xi[t],
              t + 1 < n ? &vtab[static_cast<size_t>(k)][static_cast<size_t>(
                              t + 1)]
                        : nullptr,
              opts.threads);
          if (eval.missing_child) {
            // A strategy change re-opened a child the stale tables never
            // priced; rebuild against the current profile and retry.
            refresh(k, t);
            eval = eval_stage(
                p, g, k, t, tabs[static_cast<size_t>(k)].xi[t],
                t + 1 < n
                    ? &vtab[static_cast<size_t>(k)][static_cast<size_t>(t + 1)]
                    : nullptr,
                opts.threads);
            if (eval.missing_child)
              throw std::logic_error(
                  "internal error: missing child value right after a "
                  "refresh");
          }
          if (g.act[static_cast<size_t>(k)][static_cast<size_t>(t)] !=
              eval.action) {
            g.act[static_cast<size_t>(k)][static_cast<size_t>(t)] =
                std::move(eval.action);
            changed = true;
          }
        }
        if (!changed) break;
      }
    }
    if (g == prev) return finish(outer);
  }
  detail::report_no_convergence(p, prev, g, opts.max_outer);
}

}  // namespace decpomdp
