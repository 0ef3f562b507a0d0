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

// Policy scenarios (traffic class, intended NF/context sequence, final action)
// and the assertions checked while the model executes.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/network.hpp"
#include "adutest/nf.hpp"
#include "adutest/topology.hpp"

namespace adutest {

enum class Action { kAllow, kDrop };

inline std::string_view to_string(Action a) { return a == Action::kAllow ? "ALLOW" : "DROP"; }

inline Action action_from(const std::string& s) {
  if (s == "ALLOW" || s == "allow") return Action::kAllow;
  if (s == "DROP" || s == "drop") return Action::kDrop;
  throw PolicyError("unknown action " + s);
}

struct PathElement {
  NodeId nf;
  std::vector<std::string> contexts;
};

// Allowed values per constrained field; a field absent from the map (or
// listed as -1) is unconstrained.
using TraceSpec = std::map<std::string, std::vector<int>>;

struct PolicyScenario {
  std::string name;
  TraceSpec traceSpec;
  std::vector<PathElement> policyPath;
  Action action = Action::kAllow;
  bool allowTime = false;  // may the planner inject clock ADUs
};

inline bool satisfies(const Adu& a, const TraceSpec& spec) {
  if (a.is_time()) return true;
  for (const auto& [field, allowed] : spec) {
    const FieldInfo* f = find_field(field);
    if (f == nullptr) throw PolicyError("unknown traceSpec field " + field);
    if (allowed.empty() || (allowed.size() == 1 && allowed.front() == kDontCare)) continue;
    if (std::find(allowed.begin(), allowed.end(), a.*(f->member)) == allowed.end()) return false;
  }
  return true;
}

inline TraceSpec trace_spec_from_json(const Json& j) {
  TraceSpec spec;
  if (j.is_null()) return spec;
  if (!j.is_object()) throw PolicyError("traceSpec must be an object");
  for (const auto& [k, v] : j.items()) {
    if (find_field(k) == nullptr) throw PolicyError("unknown traceSpec field " + k);
    std::vector<int> vals;
    if (v.is_array()) {
      for (const auto& x : v) vals.push_back(x.get<int>());
    } else {
      vals.push_back(v.get<int>());
    }
    if (vals.size() == 1 && vals.front() == kDontCare) continue;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    spec[k] = std::move(vals);
  }
  return spec;
}

inline Json to_json(const TraceSpec& spec) {
  Json j = Json::object();
  for (const auto& [k, v] : spec) j[k] = v.size() == 1 ? Json(v.front()) : Json(v);
  return j;
}

inline PolicyScenario scenario_from_json(const Json& j) {
  PolicyScenario s;
  s.name = j.value("name", std::string{"scenario"});
  s.traceSpec = trace_spec_from_json(j.value("traceSpec", Json::object()));
  for (const auto& e : j.value("policyPath", Json::array())) {
    PathElement pe;
    pe.nf = e.at("nf").get<std::string>();
    for (const auto& c : e.value("contexts", Json::array())) pe.contexts.push_back(c.get<std::string>());
    s.policyPath.push_back(std::move(pe));
  }
  s.action = action_from(j.at("action").get<std::string>());
  s.allowTime = j.value("allowTime", false);
  return s;
}

inline Json to_json(const PolicyScenario& s) {
  Json path = Json::array();
  for (const auto& e : s.policyPath) path.push_back({{"nf", e.nf}, {"contexts", e.contexts}});
  Json j{{"name", s.name},
         {"traceSpec", to_json(s.traceSpec)},
         {"policyPath", path},
         {"action", std::string(to_string(s.action))}};
  if (s.allowTime) j["allowTime"] = true;
  return j;
}

inline std::vector<PolicyScenario> scenarios_from_json(const Json& j) {
  std::vector<PolicyScenario> out;
  const Json& arr = j.is_object() && j.contains("scenarios") ? j.at("scenarios") : j;
  if (!arr.is_array()) throw PolicyError("expected an array of scenarios");
  for (const auto& s : arr) out.push_back(scenario_from_json(s));
  return out;
}

// A context requirement resolved against a topology.
struct ContextToken {
  enum class Kind { kTag, kProvenance, kObject } kind = Kind::kTag;
  std::string tag;
  int value = kDontCare;
};

inline bool known_token(std::string_view t) {
  static const std::set<std::string_view> vocab = {
      token::kHit,         token::kMiss,    token::kAlarm,  token::kNatMapped, token::kEstablished,
      token::kBlocked,     token::kLoginFail, token::kAuthOk, token::kBalanced};
  return vocab.count(t) > 0 || effect_label_from(t).has_value();
}

inline ContextToken resolve_token(const std::string& t, const Topology& topo) {
  auto param = [&](std::string_view prefix) -> std::optional<std::string> {
    if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
    return std::nullopt;
  };
  auto as_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw PolicyError("bad context token " + t);
  };
  if (auto p = param("PROV:")) {
    if (topo.has_node(*p)) {
      auto ip = topo.host_ip(*p);
      if (!ip) throw PolicyError("provenance must name a host: " + t);
      return {ContextToken::Kind::kProvenance, {}, *ip};
    }
    return {ContextToken::Kind::kProvenance, {}, as_int(*p)};
  }
  if (auto p = param("OBJ:")) return {ContextToken::Kind::kObject, {}, as_int(*p)};
  if (!known_token(t)) throw PolicyError("unknown context token " + t);
  return {ContextToken::Kind::kTag, t, kDontCare};
}

inline bool token_holds(const ContextToken& tok, const Hop& hop) {
  switch (tok.kind) {
    case ContextToken::Kind::kProvenance:
      return hop.out.cTags.provenance == tok.value || hop.in.cTags.provenance == tok.value;
    case ContextToken::Kind::kObject:
      for (const Adu* a : {&hop.in, &hop.out}) {
        if (a->httpGetObj == tok.value || a->httpRespObj == tok.value) return true;
      }
      return false;
    case ContextToken::Kind::kTag:
      if (to_string(hop.effect.label) == tok.tag) return true;
      return hop.out.cTags.has(hop.node, tok.tag);
  }
  return false;
}

struct CompiledElement {
  NodeId nf;
  std::vector<ContextToken> tokens;
};

// Greedy earliest matching is exact for subsequences of per-hop predicates.
// Returns the hop index matched by each element, or nullopt.
inline std::optional<std::vector<std::size_t>> match_policy_path(
    const std::vector<CompiledElement>& path, const std::vector<Hop>& hops) {
  std::vector<std::size_t> at;
  std::size_t h = 0;
  for (const auto& el : path) {
    bool found = false;
    for (; h < hops.size(); ++h) {
      const Hop& hop = hops[h];
      if (hop.node != el.nf) continue;
      bool ok = true;
      for (const auto& t : el.tokens) ok = ok && token_holds(t, hop);
      if (ok) {
        at.push_back(h++);
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
  }
  return at;
}

enum class AssertionKind { kPolicyNegation, kLoop, kReachability };

inline std::string_view to_string(AssertionKind k) {
  switch (k) {
    case AssertionKind::kPolicyNegation: return "policy";
    case AssertionKind::kLoop: return "loop";
    case AssertionKind::kReachability: return "reachability";
  }
  return "?";
}

// Immutable predicate evaluated during execution; never mutates model state.
class Assertion {
 public:
  AssertionKind kind() const { return kind_; }
  const PolicyScenario* scenario() const { return scenario_.get(); }
  const std::vector<CompiledElement>& compiled_path() const { return path_; }
  int loop_k() const { return k_; }
  // Traffic class admissible in plans: the scenario's, or one given to a
  // loop/reachability check.
  const TraceSpec& trace_spec() const { return scenario_ ? scenario_->traceSpec : spec_; }
  Assertion with_trace_spec(TraceSpec spec) const {
    Assertion a = *this;
    if (scenario_) throw PolicyError("policy assertions take the scenario's traceSpec");
    a.spec_ = std::move(spec);
    return a;
  }
  std::optional<EdgeId> port_a() const { return port_a_; }
  std::optional<EdgeId> port_b() const { return port_b_; }

  // Loop detection needs the executor's hop budget to exceed K revisits.
  int loop_factor() const { return kind_ == AssertionKind::kLoop ? std::max(kDefaultLoopFactor, k_ + 1) : kDefaultLoopFactor; }

  bool violated_at_injection(EdgeId e) const {
    return kind_ == AssertionKind::kReachability && e == *port_b_;
  }

  // Checked after every hop of the ADU in flight.
  bool violated_at_hop(const std::vector<Hop>& path) const {
    if (path.empty()) return false;
    const Hop& last = path.back();
    switch (kind_) {
      case AssertionKind::kLoop: {
        if (last.ingress < 0) return false;
        int seen = 0;
        for (const auto& h : path) seen += h.ingress == last.ingress ? 1 : 0;
        return seen >= k_;
      }
      case AssertionKind::kReachability:
        return last.egress && *last.egress == *port_b_;
      case AssertionKind::kPolicyNegation:
        return false;
    }
    return false;
  }

  // Checked once the ADU's traversal ends.
  bool violated_at_end(const InjectResult& r) const {
    if (kind_ != AssertionKind::kPolicyNegation || path_.empty() || r.path.empty()) return false;
    if (!r.final_adu.is_time() && !satisfies(r.path.front().in, trace_spec())) return false;
    if (scenario_->action == Action::kAllow) {
      if (r.end != Termination::kDelivered) return false;
      return match_policy_path(path_, r.path).has_value();
    }
    if (r.end != Termination::kDropped) return false;
    const Hop& last = r.path.back();
    if (last.node != path_.back().nf) return false;
    auto m = match_policy_path(path_, r.path);
    return m && m->back() == r.path.size() - 1;
  }

  // Source restriction for plans; empty means "any source".
  std::optional<EdgeId> forced_injection() const { return port_a_; }

 private:
  friend Assertion compile_assertion(const PolicyScenario&, const Topology&);
  friend Assertion loop_assertion(int);
  friend Assertion reachability_assertion(const Topology&, const std::string&, const std::string&);

  AssertionKind kind_ = AssertionKind::kPolicyNegation;
  std::shared_ptr<const PolicyScenario> scenario_;
  std::vector<CompiledElement> path_;
  int k_ = 0;
  std::optional<EdgeId> port_a_;
  std::optional<EdgeId> port_b_;
  TraceSpec spec_;
};

inline void validate_scenario(const PolicyScenario& s, const Topology& topo) {
  for (const auto& e : s.policyPath) {
    if (!topo.has_node(e.nf)) throw PolicyError("policyPath names unknown NF " + e.nf);
    for (const auto& c : e.contexts) resolve_token(c, topo);
  }
}

// Violated exactly when an execution realizes the policyPath with its
// contexts and ends with the scenario's action at the action site.
inline Assertion compile_assertion(const PolicyScenario& s, const Topology& topo) {
  validate_scenario(s, topo);
  Assertion a;
  a.kind_ = AssertionKind::kPolicyNegation;
  a.scenario_ = std::make_shared<const PolicyScenario>(s);
  for (const auto& e : s.policyPath) {
    CompiledElement ce{e.nf, {}};
    for (const auto& c : e.contexts) ce.tokens.push_back(resolve_token(c, topo));
    a.path_.push_back(std::move(ce));
  }
  return a;
}

inline Assertion loop_assertion(int k) {
  if (k < 2) throw PolicyError("loop bound K must be at least 2");
  Assertion a;
  a.kind_ = AssertionKind::kLoop;
  a.k_ = k;
  return a;
}

inline Assertion reachability_assertion(const Topology& topo, const std::string& from,
                                        const std::string& to) {
  Assertion a;
  a.kind_ = AssertionKind::kReachability;
  a.port_a_ = topo.parse_port(from);
  a.port_b_ = topo.parse_port(to);
  return a;
}

// Execution hooks that stop the ADU as soon as the assertion trips.
struct AssertionProbe {
  const Assertion* assertion;
  bool tripped = false;

  ExecHooks hooks(ExecHooks base = {}) {
    base.at_injection = [this](EdgeId e, const Adu&) {
      tripped = tripped || assertion->violated_at_injection(e);
      return tripped;
    };
    base.after_hop = [this](const std::vector<Hop>& p) {
      tripped = tripped || assertion->violated_at_hop(p);
      return tripped;
    };
    return base;
  }
};

// Injects one ADU under the assertion. Returns whether it was violated; the
// caller's state is advanced either way.
inline bool inject_checked(const Topology& topo, NetworkState& state, const Adu& adu,
                           const std::string& source, const Assertion& a,
                           InjectResult* out = nullptr, const ExecHooks* base = nullptr) {
  AssertionProbe probe{&a};
  ExecHooks h = probe.hooks(base ? *base : ExecHooks{});
  InjectOptions opt{a.loop_factor(), &h};
  InjectResult r = inject(topo, state, adu, source, opt);
  bool v = probe.tripped || a.violated_at_end(r);
  if (out) *out = std::move(r);
  return v;
}

}  // namespace adutest
