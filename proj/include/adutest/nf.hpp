// Copyright 2026 The adutest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The contract every network-function model satisfies.
//
// A model is immutable configuration plus a transition procedure. All of its
// mutable state lives in a StateStore as an ensemble of small FSMs keyed by
// (nf, task, traffic unit); instances exist only once touched. A transition
// consumes one ADU and yields one output ADU, at most one output port and
// exactly one Effect.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"

namespace adutest {

using PortName = std::string;

enum class EffectLabel { kOk, kDrop, kAlarm, kHit, kMiss, kForward, kMapped, kRespond };

inline constexpr std::array<std::pair<EffectLabel, std::string_view>, 8> kEffectNames{{
    {EffectLabel::kOk, "OK"},
    {EffectLabel::kDrop, "DROP"},
    {EffectLabel::kAlarm, "ALARM"},
    {EffectLabel::kHit, "HIT"},
    {EffectLabel::kMiss, "MISS"},
    {EffectLabel::kForward, "FORWARD"},
    {EffectLabel::kMapped, "MAPPED"},
    {EffectLabel::kRespond, "RESPOND"},
}};

inline std::string_view to_string(EffectLabel l) {
  for (const auto& [k, n] : kEffectNames) {
    if (k == l) return n;
  }
  return "?";
}

inline std::optional<EffectLabel> effect_label_from(std::string_view s) {
  for (const auto& [k, n] : kEffectNames) {
    if (n == s) return k;
  }
  return std::nullopt;
}

struct Effect {
  NodeId nf;
  EffectLabel label = EffectLabel::kOk;
  std::map<std::string, int> annotations;

  friend bool operator==(const Effect&, const Effect&) = default;
};

inline Json to_json(const Effect& e) {
  return Json{{"nf", e.nf}, {"label", std::string(to_string(e.label))},
              {"annotations", e.annotations}};
}

struct EnsembleKey {
  NodeId nf;
  std::string task;
  std::string unit;

  friend bool operator==(const EnsembleKey&, const EnsembleKey&) = default;
  friend auto operator<=>(const EnsembleKey&, const EnsembleKey&) = default;
};

// Lazily populated FSM ensemble. An absent key is in its FSM's initial state.
class StateStore {
 public:
  std::optional<int> get(const EnsembleKey& k) const {
    auto it = states_.find(k);
    if (it == states_.end()) return std::nullopt;
    return it->second;
  }
  int get_or(const EnsembleKey& k, int initial) const {
    return get(k).value_or(initial);
  }
  void set(const EnsembleKey& k, int v) { states_[k] = v; }
  void erase(const EnsembleKey& k) { states_.erase(k); }

  // Drops every key owned by `nf`.
  void erase_nf(const NodeId& nf) {
    auto it = states_.lower_bound(EnsembleKey{nf, "", ""});
    while (it != states_.end() && it->first.nf == nf) it = states_.erase(it);
  }

  std::size_t count_nf(const NodeId& nf) const {
    std::size_t n = 0;
    for (auto it = states_.lower_bound(EnsembleKey{nf, "", ""});
         it != states_.end() && it->first.nf == nf; ++it) {
      ++n;
    }
    return n;
  }

  std::vector<std::pair<EnsembleKey, int>> entries_of(const NodeId& nf,
                                                      std::string_view task) const {
    std::vector<std::pair<EnsembleKey, int>> out;
    for (auto it = states_.lower_bound(EnsembleKey{nf, std::string(task), ""});
         it != states_.end() && it->first.nf == nf && it->first.task == task; ++it) {
      out.emplace_back(it->first, it->second);
    }
    return out;
  }

  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  const std::map<EnsembleKey, int>& raw() const { return states_; }

  // Canonical text form; equal stores serialize identically.
  std::string serialize() const {
    std::string s;
    for (const auto& [k, v] : states_) {
      s += k.nf;
      s += '/';
      s += k.task;
      s += '/';
      s += k.unit;
      s += '=';
      s += std::to_string(v);
      s += ';';
    }
    return s;
  }

  Json to_json() const {
    Json j = Json::array();
    for (const auto& [k, v] : states_) {
      j.push_back(Json{{"nf", k.nf}, {"task", k.task}, {"unit", k.unit}, {"state", v}});
    }
    return j;
  }

  friend bool operator==(const StateStore&, const StateStore&) = default;

 private:
  std::map<EnsembleKey, int> states_;
};

// The slice of a store one NF may touch: every key is prefixed with its id.
class NfState {
 public:
  NfState(StateStore& store, NodeId nf) : store_(store), nf_(std::move(nf)) {}

  int get(std::string_view task, const std::string& unit, int initial) const {
    return store_.get_or(key(task, unit), initial);
  }
  bool has(std::string_view task, const std::string& unit) const {
    return store_.get(key(task, unit)).has_value();
  }
  void set(std::string_view task, const std::string& unit, int v) {
    store_.set(key(task, unit), v);
  }
  void erase(std::string_view task, const std::string& unit) {
    store_.erase(key(task, unit));
  }
  std::vector<std::pair<EnsembleKey, int>> entries(std::string_view task) const {
    return store_.entries_of(nf_, task);
  }
  const NodeId& nf() const { return nf_; }

 private:
  EnsembleKey key(std::string_view task, const std::string& unit) const {
    return EnsembleKey{nf_, std::string(task), unit};
  }
  StateStore& store_;
  NodeId nf_;
};

struct Step {
  Adu out;
  std::optional<PortName> egress;  // nullopt: the ADU ends here
  Effect effect;
};

class NetworkFunction {
 public:
  NetworkFunction(NodeId id, Json config) : id_(std::move(id)), config_(std::move(config)) {}
  virtual ~NetworkFunction() = default;

  const NodeId& id() const { return id_; }
  const Json& config() const { return config_; }

  virtual std::string_view type() const = 0;
  // Stateful NFs are the ones a policy path may name and StatefulPortsOnly
  // monitoring watches.
  virtual bool stateful() const { return true; }
  // Injectable ADU fields this NF's behavior depends on.
  virtual std::vector<std::string_view> relevant_fields() const { return {}; }
  // Context tokens this NF may attach or report.
  virtual std::vector<std::string_view> vocabulary() const { return {}; }
  // Field values this NF's configuration singles out (planner scoping).
  virtual std::vector<int> field_values(std::string_view /*field*/) const { return {}; }

  // `ingress` names this NF's port the ADU arrived on; empty when the ADU is
  // delivered out-of-band (time ADUs).
  virtual Step step(NfState& state, const Adu& in, const PortName& ingress) const = 0;

 protected:
  Step make_step(Adu out, std::optional<PortName> egress, EffectLabel label,
                 std::map<std::string, int> notes = {}) const {
    return Step{std::move(out), std::move(egress), Effect{id_, label, std::move(notes)}};
  }
  Step drop(Adu out, EffectLabel label = EffectLabel::kDrop,
            std::map<std::string, int> notes = {}) const {
    out.dropped = 1;
    return make_step(std::move(out), std::nullopt, label, std::move(notes));
  }
  // Default reaction to a time ADU: absorb it without touching state.
  Step ignore_time(const Adu& in) const {
    return make_step(in, std::nullopt, EffectLabel::kOk);
  }

 private:
  NodeId id_;
  Json config_;
};

using NfPtr = std::shared_ptr<const NetworkFunction>;

struct ProcessResult {
  StateStore store;
  Adu out;
  std::optional<PortName> egress;
  Effect effect;
};

// One transition of a single model. Rejects malformed input rather than
// modelling it as a drop.
inline ProcessResult process(const NetworkFunction& model, StateStore store, const Adu& in,
                             const PortName& ingress = {}) {
  require_well_formed(in);
  NfState view(store, model.id());
  Step s = model.step(view, in, ingress);
  return ProcessResult{std::move(store), std::move(s.out), std::move(s.egress),
                       std::move(s.effect)};
}

inline StateStore reset(const NetworkFunction& model, StateStore store) {
  store.erase_nf(model.id());
  return store;
}

inline std::size_t reachable_state_count(const NetworkFunction& model, const StateStore& store) {
  return store.count_nf(model.id());
}

}  // namespace adutest
