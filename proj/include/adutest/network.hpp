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

// Composed network model with lock-step execution: one ADU travels from its
// injection port until it is dropped or ends at a node, and only then may the
// next ADU enter.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/nf.hpp"
#include "adutest/topology.hpp"

namespace adutest {

// Per-node stores, indexed like Topology::nodes().
class NetworkState {
 public:
  NetworkState() = default;
  explicit NetworkState(const Topology& topo) : stores_(topo.nodes().size()) {}

  StateStore& store(std::size_t node) { return stores_.at(node); }
  const StateStore& store(std::size_t node) const { return stores_.at(node); }
  std::size_t component_count() const { return stores_.size(); }

  std::string serialize() const {
    std::string s;
    for (std::size_t i = 0; i < stores_.size(); ++i) {
      if (stores_[i].empty()) continue;
      s += std::to_string(i);
      s += '{';
      s += stores_[i].serialize();
      s += '}';
    }
    return s;
  }

  Json to_json(const Topology& topo) const {
    Json j = Json::object();
    for (std::size_t i = 0; i < stores_.size(); ++i) j[topo.nodes()[i].id] = stores_[i].to_json();
    return j;
  }

  friend bool operator==(const NetworkState&, const NetworkState&) = default;

 private:
  std::vector<StateStore> stores_;
};

struct Hop {
  NodeId node;
  EdgeId ingress = -1;  // -1 for out-of-band delivery
  Adu in;
  Adu out;
  Effect effect;
  std::optional<EdgeId> egress;
};

enum class Termination { kDelivered, kDropped, kVanished, kAbsorbed };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kDelivered: return "delivered";
    case Termination::kDropped: return "dropped";
    case Termination::kVanished: return "vanished";
    case Termination::kAbsorbed: return "absorbed";
  }
  return "?";
}

struct InjectResult {
  std::vector<Hop> path;
  Adu final_adu;
  Termination end = Termination::kDelivered;
  std::optional<EdgeId> vanished_on;
  bool stopped = false;  // an after_hop observer asked to stop early
};

// kDeliver is reported by the receiving end host, not by a port monitor.
enum class Direction { kEgress, kIngress, kDeliver };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kEgress: return "egress";
    case Direction::kIngress: return "ingress";
    case Direction::kDeliver: return "deliver";
  }
  return "?";
}

inline Direction direction_from(std::string_view s) {
  if (s == "egress") return Direction::kEgress;
  if (s == "ingress") return Direction::kIngress;
  if (s == "deliver") return Direction::kDeliver;
  throw CorruptLogError("unknown direction " + std::string(s));
}

// Optional instrumentation. The model runs with none; the simulated data
// plane uses them for faults and port monitoring.
struct ExecHooks {
  // Returns false when the link is down: the ADU leaves the sender and never
  // arrives.
  std::function<bool(EdgeId)> link_up;
  // May rewrite an NF's output (e.g. suppress context tagging).
  std::function<void(const Node&, const Adu& in, Adu& out)> post_step;
  // Port observation: called on egress from a node and ingress into one.
  std::function<void(EdgeId, Direction, const Adu&)> observe;
  // Called after every hop with the path so far; returning true stops the
  // traversal (assertion checking).
  std::function<bool(const std::vector<Hop>&)> after_hop;
  // Called once before the first hop; returning true stops immediately.
  std::function<bool(EdgeId, const Adu&)> at_injection;
};

inline constexpr int kDefaultLoopFactor = 3;

struct SmallStep {
  std::size_t node;
  Adu out;
  Effect effect;
  std::optional<EdgeId> next;  // edge the ADU leaves on
  std::optional<PortName> egress_port;
};

// One hop: the node holding the ADU (which arrived on adu.networkPort)
// processes it. Only that node's store changes.
inline SmallStep small_step(const Topology& topo, NetworkState& state, const NodeId& at,
                            const Adu& adu) {
  require_well_formed(adu);
  const std::size_t idx = topo.node_index(at);
  PortName ingress;
  if (adu.networkPort != kDontCare) {
    const Edge& e = topo.edge(adu.networkPort);
    if (e.to != at) throw TopologyError("ADU on " + e.label() + " is not at " + at);
    ingress = e.to_port;
  }
  NfState view(state.store(idx), at);
  Step s = topo.nodes()[idx].nf->step(view, adu, ingress);
  SmallStep out{idx, std::move(s.out), std::move(s.effect), std::nullopt, s.egress};
  if (s.egress && !out.out.is_dropped()) {
    auto e = topo.out_edge(at, *s.egress);
    if (!e) throw TopologyError("unmapped output port " + at + ":" + *s.egress);
    out.next = *e;
    out.out.networkPort = *e;
  }
  return out;
}

struct InjectOptions {
  int loop_factor = kDefaultLoopFactor;
  const ExecHooks* hooks = nullptr;
};

// Resolves an injection point: a source host id or an explicit "node:port".
inline EdgeId injection_point(const Topology& topo, const std::string& source) {
  if (source.find(':') != std::string::npos) return topo.parse_port(source);
  if (!topo.is_source(source)) throw TopologyError(source + " is not a source");
  return topo.injection_edge(source);
}

inline InjectResult inject_at(const Topology& topo, NetworkState& state, Adu adu, EdgeId first,
                              const InjectOptions& opt = {}) {
  require_well_formed(adu);
  const ExecHooks* h = opt.hooks;
  InjectResult r;

  if (adu.is_time()) {
    // Clock ADUs reach every node out of band, in topology order.
    for (std::size_t i = 0; i < topo.nodes().size(); ++i) {
      const Node& n = topo.nodes()[i];
      NfState view(state.store(i), n.id);
      Step s = n.nf->step(view, adu, PortName{});
      r.path.push_back(Hop{n.id, -1, adu, s.out, s.effect, std::nullopt});
    }
    r.final_adu = adu;
    r.end = Termination::kAbsorbed;
    return r;
  }

  adu.networkPort = first;
  if (h && h->at_injection && h->at_injection(first, adu)) {
    r.final_adu = adu;
    r.stopped = true;
    return r;
  }
  const std::size_t bound = static_cast<std::size_t>(opt.loop_factor) * topo.edges().size();
  EdgeId edge = first;
  if (h && h->observe) h->observe(edge, Direction::kEgress, adu);
  for (;;) {
    if (r.path.size() >= bound) {
      throw LoopError("ADU " + std::to_string(adu.aduId) + " exceeded " + std::to_string(bound) +
                      " hops");
    }
    if (h && h->link_up && !h->link_up(edge)) {
      r.final_adu = adu;
      r.end = Termination::kVanished;
      r.vanished_on = edge;
      return r;
    }
    const Edge& e = topo.edge(edge);
    if (h && h->observe) h->observe(edge, Direction::kIngress, adu);
    SmallStep s = small_step(topo, state, e.to, adu);
    const Node& node = topo.nodes()[s.node];
    if (h && h->post_step) h->post_step(node, adu, s.out);
    r.path.push_back(Hop{node.id, edge, adu, s.out, s.effect, s.next});
    if (h && h->after_hop && h->after_hop(r.path)) {
      r.final_adu = s.out;
      r.stopped = true;
      r.end = s.out.is_dropped() ? Termination::kDropped : Termination::kDelivered;
      return r;
    }
    if (s.out.is_dropped()) {
      r.final_adu = s.out;
      r.end = Termination::kDropped;
      return r;
    }
    if (!s.next) {
      r.final_adu = s.out;
      r.end = topo.is_sink(node.id) ? Termination::kDelivered : Termination::kAbsorbed;
      if (r.end == Termination::kDelivered && h && h->observe) h->observe(edge, Direction::kDeliver, s.out);
      return r;
    }
    adu = s.out;
    edge = *s.next;
    if (h && h->observe) h->observe(edge, Direction::kEgress, adu);
  }
}

inline InjectResult inject(const Topology& topo, NetworkState& state, const Adu& adu,
                           const std::string& source, const InjectOptions& opt = {}) {
  if (adu.is_time()) return inject_at(topo, state, adu, -1, opt);
  return inject_at(topo, state, adu, injection_point(topo, source), opt);
}

struct TraceEntry {
  std::string source;
  Adu adu;
};

// Per injected ADU, the effects it induced end to end.
using TraceSem = std::vector<std::vector<Effect>>;

inline std::vector<Effect> effects_of(const InjectResult& r) {
  std::vector<Effect> out;
  out.reserve(r.path.size());
  for (const auto& hop : r.path) out.push_back(hop.effect);
  return out;
}

inline TraceSem execute_trace(const Topology& topo, NetworkState& state,
                              const std::vector<TraceEntry>& trace, const InjectOptions& opt = {}) {
  TraceSem sem;
  sem.reserve(trace.size());
  for (const auto& t : trace) sem.push_back(effects_of(inject(topo, state, t.adu, t.source, opt)));
  return sem;
}

}  // namespace adutest
