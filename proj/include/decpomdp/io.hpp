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

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "decpomdp/info.hpp"
#include "decpomdp/model.hpp"

// JSON problem and strategy files, plus the shared serialization helpers
// that keep JSON and CSV exports numerically identical.

namespace decpomdp {

using ordered_json = nlohmann::ordered_json;

/// Schema or format violations in user-supplied files (exit code 2 at the
/// CLI, as opposed to verification failures).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The exact text the JSON serializer produces for a double; CSV exports
/// use the same function so both formats carry identical numbers.
inline std::string double_text(double v) { return ordered_json(v).dump(); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_cell(cells[i]);
  }
  out += '\n';
  return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

/// Splits a "(a,b,c)" label-tuple key into its parts.
inline std::vector<std::string> split_tuple(const std::string& s) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    throw SchemaError("malformed tuple key '" + s +
                      "': expected parentheses around comma-separated labels");
  std::vector<std::string> out;
  const std::string body = s.substr(1, s.size() - 2);
  if (trim(body).empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t comma = body.find(',', start);
    out.push_back(trim(body.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline const ordered_json& require_field(const ordered_json& j,
                                         const std::string& name,
                                         const std::string& path) {
  if (!j.is_object() || !j.contains(name))
    throw SchemaError("schema error: missing field '" +
                      (path.empty() ? name : path + "." + name) + "'");
  return j.at(name);
}

inline int require_int(const ordered_json& j, const std::string& name,
                       const std::string& path) {
  const ordered_json& f = require_field(j, name, path);
  if (!f.is_number_integer())
    throw SchemaError("schema error: field '" + name +
                      "' must be an integer");
  return f.get<int>();
}

inline std::vector<std::string> require_string_array(const ordered_json& f,
                                                     const std::string& what) {
  if (!f.is_array() || f.empty())
    throw SchemaError("schema error: '" + what +
                      "' must be a non-empty array of labels");
  std::vector<std::string> out;
  for (const auto& e : f) {
    if (!e.is_string())
      throw SchemaError("schema error: '" + what + "' entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::vector<double> require_pmf_array(const ordered_json& f, size_t len,
                                             const std::string& what) {
  if (!f.is_array() || f.size() != len)
    throw SchemaError("schema error: '" + what + "' must be an array of " +
                      std::to_string(len) + " numbers");
  std::vector<double> out;
  for (const auto& e : f) {
    if (!e.is_number())
      throw SchemaError("schema error: '" + what + "' entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Label tuple "(state, action of agent 1, ..., action of agent K)".
inline std::string kernel_key(const ProblemSpec& p, int x, int a) {
  std::vector<std::string> parts;
  parts.push_back(p.states[x]);
  std::vector<int> u;
  p.decode_actions(a, u);
  for (int k = 0; k < p.num_agents(); ++k)
    parts.push_back(p.agents[k].actions[u[k]]);
  return label_tuple(parts);
}

inline std::set<std::string> kernel_key_set(const ProblemSpec& p) {
  std::set<std::string> keys;
  for (int x = 0; x < p.num_states(); ++x)
    for (int a = 0; a < p.num_joint_actions(); ++a)
      keys.insert(kernel_key(p, x, a));
  return keys;
}

/// Names one offending key of a table that holds more keys than the schema
/// defines; called only after all expected keys were found.
[[noreturn]] inline void reject_extra_keys(const std::set<std::string>& allowed,
                                           const ordered_json& obj,
                                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw SchemaError("schema error: '" + where + "' has unexpected key '" +
                        it.key() + "'");
  throw SchemaError("schema error: '" + where + "' has repeated keys");
}

/// Label tuple "(stage, state, actions...)" with 1-based stage text.
inline std::string cost_key(const ProblemSpec& p, int s, int x, int a) {
  std::vector<std::string> parts;
  parts.push_back(std::to_string(s + 1));
  parts.push_back(p.states[x]);
  std::vector<int> u;
  p.decode_actions(a, u);
  for (int k = 0; k < p.num_agents(); ++k)
    parts.push_back(p.agents[k].actions[u[k]]);
  return label_tuple(parts);
}

}  // namespace detail

inline ordered_json problem_to_json(const ProblemSpec& p) {
  ordered_json j;
  j["horizon"] = p.horizon;
  j["delay"] = p.delay;
  j["states"] = p.states;
  j["agents"] = ordered_json::array();
  for (const auto& ag : p.agents)
    j["agents"].push_back({{"obs", ag.obs}, {"actions", ag.actions}});
  j["initial"] = p.initial;

  j["initial_obs"] = ordered_json::array();
  for (int k = 0; k < p.num_agents(); ++k) {
    ordered_json rows = ordered_json::array();
    for (int x = 0; x < p.num_states(); ++x) {
      ordered_json row = ordered_json::array();
      for (int y = 0; y < p.num_obs(k); ++y) row.push_back(p.obs1(k, x, y));
      rows.push_back(std::move(row));
    }
    j["initial_obs"].push_back(std::move(rows));
  }

  ordered_json trans = ordered_json::object();
  for (int x = 0; x < p.num_states(); ++x)
    for (int a = 0; a < p.num_joint_actions(); ++a) {
      ordered_json row = ordered_json::array();
      for (int x2 = 0; x2 < p.num_states(); ++x2)
        row.push_back(p.trans(x, a, x2));
      trans[detail::kernel_key(p, x, a)] = std::move(row);
    }
  j["transition"] = std::move(trans);

  j["observation"] = ordered_json::array();
  for (int k = 0; k < p.num_agents(); ++k) {
    ordered_json table = ordered_json::object();
    for (int x = 0; x < p.num_states(); ++x)
      for (int a = 0; a < p.num_joint_actions(); ++a) {
        ordered_json row = ordered_json::array();
        for (int y = 0; y < p.num_obs(k); ++y) row.push_back(p.obs(k, x, a, y));
        table[detail::kernel_key(p, x, a)] = std::move(row);
      }
    j["observation"].push_back(std::move(table));
  }

  ordered_json cost = ordered_json::object();
  for (int s = 0; s < p.horizon; ++s)
    for (int x = 0; x < p.num_states(); ++x)
      for (int a = 0; a < p.num_joint_actions(); ++a)
        cost[detail::cost_key(p, s, x, a)] = p.cost(s, x, a);
  j["cost"] = std::move(cost);
  return j;
}

inline ProblemSpec problem_from_json(const ordered_json& j) {
  if (!j.is_object())
    throw SchemaError("schema error: top-level document must be an object");
  ProblemSpec p;
  p.horizon = detail::require_int(j, "horizon", "");
  p.delay = detail::require_int(j, "delay", "");
  if (p.horizon < 1)
    throw SchemaError("schema error: 'horizon' must be at least 1");
  if (p.delay < 1 || p.delay > p.horizon)
    throw SchemaError(
        "schema error: 'delay' must satisfy 1 <= delay <= horizon");
  p.states =
      detail::require_string_array(detail::require_field(j, "states", ""),
                                   "states");
  const ordered_json& agents = detail::require_field(j, "agents", "");
  if (!agents.is_array() || agents.empty())
    throw SchemaError("schema error: 'agents' must be a non-empty array");
  for (size_t k = 0; k < agents.size(); ++k) {
    AgentSpaces ag;
    const std::string path = "agents[" + std::to_string(k) + "]";
    ag.obs = detail::require_string_array(
        detail::require_field(agents[k], "obs", path), path + ".obs");
    ag.actions = detail::require_string_array(
        detail::require_field(agents[k], "actions", path), path + ".actions");
    p.agents.push_back(std::move(ag));
  }
  p.allocate();

  p.initial = detail::require_pmf_array(detail::require_field(j, "initial", ""),
                                        p.states.size(), "initial");

  const ordered_json& iobs = detail::require_field(j, "initial_obs", "");
  if (!iobs.is_array() || iobs.size() != p.agents.size())
    throw SchemaError(
        "schema error: 'initial_obs' must be an array with one entry per "
        "agent");
  for (int k = 0; k < p.num_agents(); ++k) {
    const ordered_json& rows = iobs[static_cast<size_t>(k)];
    if (!rows.is_array() || rows.size() != p.states.size())
      throw SchemaError("schema error: 'initial_obs[" + std::to_string(k) +
                        "]' must have one row per state");
    for (int x = 0; x < p.num_states(); ++x) {
      const std::vector<double> row = detail::require_pmf_array(
          rows[static_cast<size_t>(x)], static_cast<size_t>(p.num_obs(k)),
          "initial_obs[" + std::to_string(k) + "][" + std::to_string(x) + "]");
      for (int y = 0; y < p.num_obs(k); ++y) p.obs1_ref(k, x, y) = row[y];
    }
  }

  const ordered_json& trans = detail::require_field(j, "transition", "");
  if (!trans.is_object())
    throw SchemaError("schema error: 'transition' must be an object");
  size_t expected = static_cast<size_t>(p.num_states()) *
                    static_cast<size_t>(p.num_joint_actions());
  for (int x = 0; x < p.num_states(); ++x)
    for (int a = 0; a < p.num_joint_actions(); ++a) {
      const std::string key = detail::kernel_key(p, x, a);
      if (!trans.contains(key))
        throw SchemaError("schema error: 'transition' is missing key '" + key +
                          "'");
      const std::vector<double> row = detail::require_pmf_array(
          trans.at(key), p.states.size(), "transition['" + key + "']");
      for (int x2 = 0; x2 < p.num_states(); ++x2)
        p.trans_ref(x, a, x2) = row[x2];
    }
  // Every expected key is present, so a count mismatch means extras.
  if (trans.size() != expected)
    detail::reject_extra_keys(detail::kernel_key_set(p), trans, "transition");

  const ordered_json& obs = detail::require_field(j, "observation", "");
  if (!obs.is_array() || obs.size() != p.agents.size())
    throw SchemaError(
        "schema error: 'observation' must be an array with one table per "
        "agent");
  for (int k = 0; k < p.num_agents(); ++k) {
    const ordered_json& table = obs[static_cast<size_t>(k)];
    const std::string where = "observation[" + std::to_string(k) + "]";
    if (!table.is_object())
      throw SchemaError("schema error: '" + where + "' must be an object");
    for (int x = 0; x < p.num_states(); ++x)
      for (int a = 0; a < p.num_joint_actions(); ++a) {
        const std::string key = detail::kernel_key(p, x, a);
        if (!table.contains(key))
          throw SchemaError("schema error: '" + where + "' is missing key '" +
                            key + "'");
        const std::vector<double> row = detail::require_pmf_array(
            table.at(key), static_cast<size_t>(p.num_obs(k)),
            where + "['" + key + "']");
        for (int y = 0; y < p.num_obs(k); ++y) p.obs_ref(k, x, a, y) = row[y];
      }
    if (table.size() != expected)
      detail::reject_extra_keys(detail::kernel_key_set(p), table, where);
  }

  const ordered_json& cost = detail::require_field(j, "cost", "");
  if (!cost.is_object())
    throw SchemaError("schema error: 'cost' must be an object");
  expected *= static_cast<size_t>(p.horizon);
  for (int s = 0; s < p.horizon; ++s)
    for (int x = 0; x < p.num_states(); ++x)
      for (int a = 0; a < p.num_joint_actions(); ++a) {
        const std::string key = detail::cost_key(p, s, x, a);
        if (!cost.contains(key))
          throw SchemaError("schema error: 'cost' is missing key '" + key +
                            "'");
        if (!cost.at(key).is_number())
          throw SchemaError("schema error: 'cost['" + key +
                            "']' must be a number");
        p.cost_ref(s, x, a) = cost.at(key).get<double>();
      }
  if (cost.size() != expected) {
    std::set<std::string> allowed;
    for (int s = 0; s < p.horizon; ++s)
      for (int x = 0; x < p.num_states(); ++x)
        for (int a = 0; a < p.num_joint_actions(); ++a)
          allowed.insert(detail::cost_key(p, s, x, a));
    detail::reject_extra_keys(allowed, cost, "cost");
  }

  const std::vector<std::string> report = validate_problem(p);
  if (!report.empty()) {
    std::string msg = "problem validation failed:";
    for (const auto& r : report) msg += "\n  - " + r;
    throw SchemaError(msg);
  }
  return p;
}

inline ProblemSpec load_problem_file(const std::string& path) {
  const std::string text = read_text_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("parse error in '" + path + "' at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  return problem_from_json(j);
}

inline void save_problem_file(const ProblemSpec& p, const std::string& path) {
  write_text_file(path, problem_to_json(p).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Strategy files: per agent and stage, one action per realization, keyed by
// the canonical ordered label tuple.

inline ordered_json strategy_to_json(const ProblemSpec& p,
                                     const StrategyProfile& g) {
  ordered_json j;
  j["horizon"] = p.horizon;
  j["agents"] = ordered_json::array();
  for (int k = 0; k < p.num_agents(); ++k) {
    ordered_json stages = ordered_json::array();
    for (int s = 0; s < p.horizon; ++s) {
      InfoSpace space(p, k, s);
      ordered_json map = ordered_json::array();
      for (long long idx = 0; idx < space.size(); ++idx) {
        const InfoRealization r = space.decode(idx);
        map.push_back(
            {{"realization", realization_labels(p, r)},
             {"action", p.agents[k].actions[g.action(k, s, idx)]}});
      }
      stages.push_back({{"stage", s + 1}, {"map", std::move(map)}});
    }
    j["agents"].push_back({{"agent", k + 1}, {"stages", std::move(stages)}});
  }
  return j;
}

inline StrategyProfile strategy_from_json(const ProblemSpec& p,
                                          const ordered_json& j) {
  if (detail::require_int(j, "horizon", "") != p.horizon)
    throw SchemaError("schema error: strategy horizon does not match the "
                      "problem horizon");
  const ordered_json& agents = detail::require_field(j, "agents", "");
  if (!agents.is_array() || agents.size() != static_cast<size_t>(p.num_agents()))
    throw SchemaError("schema error: strategy must list exactly " +
                      std::to_string(p.num_agents()) + " agents");
  StrategyProfile g = make_default_profile(p);
  for (int k = 0; k < p.num_agents(); ++k) {
    const ordered_json& ja = agents[static_cast<size_t>(k)];
    if (detail::require_int(ja, "agent", "agents") != k + 1)
      throw SchemaError("schema error: agents must appear in order 1.." +
                        std::to_string(p.num_agents()));
    const ordered_json& stages = detail::require_field(ja, "stages", "agents");
    if (!stages.is_array() || stages.size() != static_cast<size_t>(p.horizon))
      throw SchemaError("schema error: agent " + std::to_string(k + 1) +
                        " must list exactly " + std::to_string(p.horizon) +
                        " stages");
    for (int s = 0; s < p.horizon; ++s) {
      const ordered_json& js = stages[static_cast<size_t>(s)];
      if (detail::require_int(js, "stage", "stages") != s + 1)
        throw SchemaError("schema error: stages must appear in order 1.." +
                          std::to_string(p.horizon));
      const ordered_json& map = detail::require_field(js, "map", "stages");
      InfoSpace space(p, k, s);
      if (!map.is_array() || map.size() != static_cast<size_t>(space.size()))
        throw SchemaError(
            "schema error: agent " + std::to_string(k + 1) + " stage " +
            std::to_string(s + 1) + " must map exactly " +
            std::to_string(space.size()) + " realizations, got " +
            std::to_string(map.size()));
      std::vector<bool> seen(static_cast<size_t>(space.size()), false);
      for (const auto& entry : map) {
        const std::vector<std::string> labels = detail::require_string_array(
            detail::require_field(entry, "realization", "map"), "realization");
        InfoRealization r;
        try {
          r = parse_realization(p, k, s, labels);
        } catch (const std::invalid_argument& e) {
          throw SchemaError(std::string("schema error: ") + e.what());
        }
        const long long idx = space.encode(r);
        if (seen[static_cast<size_t>(idx)])
          throw SchemaError("schema error: duplicate realization " +
                            realization_key(p, r));
        seen[static_cast<size_t>(idx)] = true;
        const ordered_json& af = detail::require_field(entry, "action", "map");
        if (!af.is_string())
          throw SchemaError("schema error: 'action' must be a label string");
        try {
          g.slot(k, s, idx) = detail::index_of(p.agents[k].actions,
                                               af.get<std::string>(), "action");
        } catch (const std::invalid_argument& e) {
          throw SchemaError(std::string("schema error: ") + e.what());
        }
      }
    }
  }
  return g;
}

inline StrategyProfile load_strategy_file(const ProblemSpec& p,
                                          const std::string& path) {
  const std::string text = read_text_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("parse error in '" + path + "' at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  return strategy_from_json(p, j);
}

inline void save_strategy_file(const ProblemSpec& p, const StrategyProfile& g,
                               const std::string& path) {
  write_text_file(path, strategy_to_json(p, g).dump(2) + "\n");
}

}  // namespace decpomdp
