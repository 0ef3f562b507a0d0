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

// Simulated data plane: a separately instantiated, faultable copy of the
// network that runs test scripts alongside background traffic and records
// what port monitors see.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/network.hpp"
#include "adutest/nf_library.hpp"
#include "adutest/topology.hpp"
#include "adutest/translator.hpp"

namespace adutest {

enum class FaultType { kLinkDown, kRuleMissing, kThresholdMisconfig, kCounterReset, kControllerOff, kAggregateMiscount };

inline constexpr std::array<std::pair<FaultType, std::string_view>, 6> kFaultNames{{
    {FaultType::kLinkDown, "LinkDown"},
    {FaultType::kRuleMissing, "RuleMissing"},
    {FaultType::kThresholdMisconfig, "ThresholdMisconfig"},
    {FaultType::kCounterReset, "CounterReset"},
    {FaultType::kControllerOff, "ControllerOff"},
    {FaultType::kAggregateMiscount, "AggregateMiscount"},
}};

inline std::string_view to_string(FaultType t) {
  for (const auto& [k, n] : kFaultNames) {
    if (k == t) return n;
  }
  return "?";
}

struct Fault {
  FaultType type = FaultType::kLinkDown;
  NodeId a, b;       // LinkDown endpoints
  NodeId element;    // switch or NF
  std::string rule;  // RuleMissing
  int value = 0;     // new threshold / group size

  static Fault from_json(const Json& j) {
    Fault f;
    const auto t = j.at("type").get<std::string>();
    bool known = false;
    for (const auto& [k, n] : kFaultNames) {
      if (n == t) {
        f.type = k;
        known = true;
      }
    }
    if (!known) throw ConfigError("unknown fault type " + t);
    switch (f.type) {
      case FaultType::kLinkDown:
        f.a = j.at("a").get<std::string>();
        f.b = j.at("b").get<std::string>();
        break;
      case FaultType::kRuleMissing:
        f.element = j.at("switch").get<std::string>();
        f.rule = j.at("rule").get<std::string>();
        break;
      case FaultType::kThresholdMisconfig:
        f.element = j.at("nf").get<std::string>();
        f.value = j.at("value").get<int>();
        break;
      case FaultType::kCounterReset:
        f.element = j.at("nf").get<std::string>();
        break;
      case FaultType::kControllerOff:
        break;
      case FaultType::kAggregateMiscount:
        f.element = j.at("nf").get<std::string>();
        f.value = j.value("group", 3);
        break;
    }
    return f;
  }

  Json to_json() const {
    Json j{{"type", std::string(to_string(type))}};
    switch (type) {
      case FaultType::kLinkDown: j["a"] = a; j["b"] = b; break;
      case FaultType::kRuleMissing: j["switch"] = element; j["rule"] = rule; break;
      case FaultType::kThresholdMisconfig: j["nf"] = element; j["value"] = value; break;
      case FaultType::kCounterReset: j["nf"] = element; break;
      case FaultType::kControllerOff: break;
      case FaultType::kAggregateMiscount: j["nf"] = element; j["group"] = value; break;
    }
    return j;
  }
};

inline std::vector<Fault> faults_from_json(const Json& j) {
  std::vector<Fault> out;
  const Json& arr = j.is_object() && j.contains("faults") ? j.at("faults") : j;
  if (!arr.is_array()) throw ConfigError("faults must be an array");
  for (const auto& f : arr) out.push_back(Fault::from_json(f));
  return out;
}

enum class MonitorMode { kStatefulPortsOnly, kMonitorAll };

inline std::string_view to_string(MonitorMode m) {
  return m == MonitorMode::kMonitorAll ? "all" : "stateful";
}

inline MonitorMode monitor_mode_from(const std::string& s) {
  if (s == "all") return MonitorMode::kMonitorAll;
  if (s == "stateful") return MonitorMode::kStatefulPortsOnly;
  throw ConfigError("monitor mode must be 'stateful' or 'all'");
}

struct MonitorRecord {
  std::size_t seq = 0;
  EdgeId port = -1;
  NodeId node;
  PortName portName;
  int aduId = kDontCare;
  Direction direction = Direction::kEgress;
  Adu snapshot;
  int tick = 0;
  bool isTest = true;

  Json to_json(const Topology& topo) const {
    return Json{{"seq", seq},
                {"port", port},
                {"edge", topo.edge(port).label()},
                {"node", node},
                {"portName", portName},
                {"aduId", aduId},
                {"direction", std::string(adutest::to_string(direction))},
                {"snapshot", adutest::to_json(snapshot)},
                {"tick", tick},
                {"isTest", isTest}};
  }

  static MonitorRecord from_json(const Json& j) {
    try {
      MonitorRecord r;
      r.seq = j.at("seq").get<std::size_t>();
      r.port = j.at("port").get<EdgeId>();
      r.node = j.at("node").get<std::string>();
      r.portName = j.at("portName").get<std::string>();
      r.aduId = j.at("aduId").get<int>();
      r.direction = direction_from(j.at("direction").get<std::string>());
      r.snapshot = adu_from_json(j.at("snapshot"));
      r.tick = j.at("tick").get<int>();
      r.isTest = j.at("isTest").get<bool>();
      return r;
    } catch (const Json::exception& e) {
      throw CorruptLogError(std::string("bad log record: ") + e.what());
    }
  }
};

// Ordered monitor records for one run.
struct MonitorLog {
  MonitorMode mode = MonitorMode::kStatefulPortsOnly;
  std::vector<MonitorRecord> records;

  std::string to_jsonl(const Topology& topo) const {
    std::string out;
    for (const auto& r : records) {
      out += r.to_json(topo).dump();
      out += '\n';
    }
    return out;
  }
};

// Which records a port monitor in `mode` keeps. End-host deliveries are
// always reported.
inline bool observed(const Topology& topo, MonitorMode mode, EdgeId e, Direction d) {
  if (mode == MonitorMode::kMonitorAll || d == Direction::kDeliver) return true;
  return topo.edge_adjacent_to_stateful(e);
}

inline MonitorRecord make_record(const Topology& topo, EdgeId e, Direction d, const Adu& a, int tick,
                                 bool is_test) {
  const Edge& edge = topo.edge(e);
  MonitorRecord r;
  r.port = e;
  r.direction = d;
  r.node = d == Direction::kEgress ? edge.from : edge.to;
  r.portName = d == Direction::kEgress ? edge.from_port : (d == Direction::kIngress ? edge.to_port : "");
  r.aduId = a.aduId;
  r.snapshot = a;
  r.tick = tick;
  r.isTest = is_test;
  return r;
}

// ---- Background traffic ---------------------------------------------------

// One background flow: `count` ADUs from `src`, injected right after the plan
// position `after`, active only while fewer than `cycles` drain cycles have
// elapsed (0 = always).
struct BackgroundFlow {
  std::string kind;  // scan | web | udp | login
  NodeId src;
  std::vector<NodeId> dsts;
  int count = 1;
  int after = 0;
  int cycles = 0;
  int object = kDontCare;
};

struct BackgroundSpec {
  std::uint32_t seed = 1;
  std::vector<BackgroundFlow> flows;

  static BackgroundSpec from_json(const Json& j) {
    BackgroundSpec s;
    s.seed = j.value("seed", 1u);
    for (const auto& f : j.value("flows", Json::array())) {
      BackgroundFlow b;
      b.kind = f.at("kind").get<std::string>();
      b.src = f.at("src").get<std::string>();
      if (f.contains("dst")) {
        if (f.at("dst").is_array()) {
          b.dsts = f.at("dst").get<std::vector<std::string>>();
        } else {
          b.dsts.push_back(f.at("dst").get<std::string>());
        }
      }
      b.count = f.value("count", 1);
      b.after = f.value("after", 0);
      b.cycles = f.value("cycles", 0);
      b.object = f.value("object", kDontCare);
      if (b.kind != "scan" && b.kind != "web" && b.kind != "udp" && b.kind != "login") {
        throw ConfigError("unknown background flow kind " + b.kind);
      }
      s.flows.push_back(std::move(b));
    }
    return s;
  }
};

inline constexpr int kBackgroundIdBase = 1'000'000;

struct BackgroundAdu {
  int after;
  std::string source;
  Adu adu;
};

// Deterministic generator: the same spec and seed give the same ADUs.
// Destinations are drawn with raw engine output so the sequence does not
// depend on the standard library's distribution implementations.
inline std::vector<BackgroundAdu> background_traffic(const BackgroundSpec& spec, const Topology& topo,
                                                     int elapsed_cycles = 0) {
  std::mt19937 rng(spec.seed);
  std::vector<BackgroundAdu> out;
  int next_id = kBackgroundIdBase;
  for (const auto& f : spec.flows) {
    auto src_ip = topo.host_ip(f.src);
    if (!src_ip) throw ConfigError("background source must be a host: " + f.src);
    std::vector<int> dst_ips;
    for (const auto& d : f.dsts) {
      auto ip = topo.host_ip(d);
      if (!ip) throw ConfigError("background destination must be a host: " + d);
      dst_ips.push_back(*ip);
    }
    if (dst_ips.empty()) {
      for (int ip : topo.host_ips()) {
        if (ip != *src_ip) dst_ips.push_back(ip);
      }
    }
    if (dst_ips.empty()) throw ConfigError("background flow from " + f.src + " has no destination");
    const bool active = f.cycles == 0 || elapsed_cycles < f.cycles;
    for (int i = 0; i < f.count; ++i) {
      const int dst = dst_ips[rng() % dst_ips.size()];
      if (!active) continue;
      Adu a;
      a.srcIP = *src_ip;
      a.dstIP = dst;
      a.aduId = next_id++;
      if (f.kind == "scan") {
        a.proto = 6;
        a.tcpSYN = 1;
        a.tcpACK = 0;
      } else if (f.kind == "web") {
        a.proto = 6;
        a.tcpSYN = 0;
        a.tcpACK = 0;
        a.httpGetObj = f.object;
      } else if (f.kind == "udp") {
        a.proto = 17;
      } else {
        a.proto = 6;
        a.payloadSig = 0;
      }
      out.push_back({f.after, f.src, a});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BackgroundAdu& x, const BackgroundAdu& y) { return x.after < y.after; });
  return out;
}

// ---- Simulated network -----------------------------------------------------

class SimNetwork {
 public:
  explicit SimNetwork(const Json& topology) : json_(topology), topo_(Topology::from_json(topology)) {}

  const Topology& topology() const { return topo_; }
  const std::vector<Fault>& faults() const { return faults_; }
  const Json& json() const { return json_; }

  bool link_up(EdgeId e) const {
    const Edge& edge = topo_.edge(e);
    for (const auto& f : faults_) {
      if (f.type != FaultType::kLinkDown) continue;
      if ((edge.from == f.a && edge.to == f.b) || (edge.from == f.b && edge.to == f.a)) return false;
    }
    return true;
  }

  bool controller_off() const {
    for (const auto& f : faults_) {
      if (f.type == FaultType::kControllerOff) return true;
    }
    return false;
  }

  // Tasks wiped after every ADU at each CounterReset NF.
  std::vector<std::pair<std::size_t, std::string>> reset_tasks() const {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (const auto& f : faults_) {
      if (f.type != FaultType::kCounterReset) continue;
      const Node& n = topo_.node(f.element);
      out.emplace_back(topo_.node_index(f.element),
                       std::string(n.type == "auth" ? AuthServer::kFailTask : LightIps::kCountTask));
    }
    return out;
  }

  friend SimNetwork inject_fault(const SimNetwork& sim, const Fault& f);

 private:
  Json json_;
  Topology topo_;
  std::vector<Fault> faults_;
};

namespace detail {

inline Json& node_json(Json& topo, const NodeId& id) {
  for (auto& n : topo.at("nodes")) {
    if (n.at("id").get<std::string>() == id) {
      if (!n.contains("config")) n["config"] = Json::object();
      return n;
    }
  }
  throw ConfigError("fault references unknown element " + id);
}

inline void require_type(const Json& node, std::initializer_list<std::string_view> types, const Fault& f) {
  const auto t = node.at("type").get<std::string>();
  for (auto ok : types) {
    if (t == ok) return;
  }
  throw ConfigError(std::string(to_string(f.type)) + " does not apply to " + t + " " +
                    node.at("id").get<std::string>());
}

}  // namespace detail

// Returns a copy of the simulated plane with the fault applied. The model
// used for planning is never touched.
inline SimNetwork inject_fault(const SimNetwork& sim, const Fault& f) {
  Json j = sim.json_;
  switch (f.type) {
    case FaultType::kLinkDown: {
      bool found = false;
      for (const auto& e : sim.topo_.edges()) {
        found = found || (e.from == f.a && e.to == f.b) || (e.from == f.b && e.to == f.a);
      }
      if (!found) throw ConfigError("no link between " + f.a + " and " + f.b);
      break;
    }
    case FaultType::kRuleMissing: {
      Json& n = detail::node_json(j, f.element);
      detail::require_type(n, {"switch"}, f);
      Json& rules = n["config"]["rules"];
      Json kept = Json::array();
      bool found = false;
      for (const auto& r : rules) {
        if (r.value("name", std::string{}) == f.rule) {
          found = true;
        } else {
          kept.push_back(r);
        }
      }
      if (!found) throw ConfigError("switch " + f.element + " has no rule " + f.rule);
      rules = kept;
      break;
    }
    case FaultType::kThresholdMisconfig: {
      Json& n = detail::node_json(j, f.element);
      detail::require_type(n, {"lips", "auth"}, f);
      n["config"][n.at("type") == "lips" ? "threshold" : "limit"] = f.value;
      break;
    }
    case FaultType::kCounterReset: {
      Json& n = detail::node_json(j, f.element);
      detail::require_type(n, {"lips", "auth"}, f);
      break;
    }
    case FaultType::kControllerOff:
      // Tag-based steering rules vanish with the controller.
      for (auto& n : j.at("nodes")) {
        if (n.at("type") != "switch" || !n.contains("config") || !n["config"].contains("rules")) continue;
        Json kept = Json::array();
        for (const auto& r : n["config"]["rules"]) {
          if (!(r.contains("match") && r["match"].contains("cTags"))) kept.push_back(r);
        }
        n["config"]["rules"] = kept;
      }
      break;
    case FaultType::kAggregateMiscount: {
      Json& n = detail::node_json(j, f.element);
      detail::require_type(n, {"lips"}, f);
      if (f.value < 2) throw ConfigError("AggregateMiscount group must be >= 2");
      n["config"]["aggregateGroup"] = f.value;
      break;
    }
  }
  SimNetwork out(j);
  out.faults_ = sim.faults_;
  out.faults_.push_back(f);
  return out;
}

struct AwaitOutcome {
  int seq;
  int object;
  bool satisfied;
};

struct RunResult {
  MonitorLog log;
  std::vector<AwaitOutcome> awaits;
  std::vector<int> loop_aborted;  // aduIds cut off by the hop bound
  NetworkState final_state;
};

// Executes wire events one at a time; background ADUs scheduled after plan
// position p run once event p has drained.
inline RunResult run_script(const SimNetwork& sim, const std::vector<WireEvent>& events, MonitorMode mode,
                            const std::vector<BackgroundAdu>& background = {}) {
  const Topology& topo = sim.topology();
  RunResult res;
  res.log.mode = mode;
  NetworkState state(topo);
  int tick = 0;
  bool is_test = true;
  const bool strip = sim.controller_off();
  const auto resets = sim.reset_tasks();

  ExecHooks hooks;
  hooks.link_up = [&](EdgeId e) { return sim.link_up(e); };
  hooks.observe = [&](EdgeId e, Direction d, const Adu& a) {
    if (!observed(topo, mode, e, d)) return;
    MonitorRecord r = make_record(topo, e, d, a, tick, is_test);
    r.seq = res.log.records.size();
    res.log.records.push_back(std::move(r));
  };
  if (strip) {
    hooks.post_step = [](const Node& n, const Adu& in, Adu& out) {
      if (n.nf->stateful()) out.cTags = in.cTags;
    };
  }

  auto run_one = [&](const std::string& source, const Adu& adu) -> std::optional<InjectResult> {
    std::optional<InjectResult> r;
    try {
      r = inject(topo, state, adu, source, InjectOptions{kDefaultLoopFactor, &hooks});
    } catch (const LoopError&) {
      res.loop_aborted.push_back(adu.aduId);
    }
    if (adu.is_time()) tick = adu.tick;
    for (const auto& [idx, task] : resets) {
      for (const auto& [key, v] : state.store(idx).entries_of(topo.nodes()[idx].id, task)) {
        state.store(idx).erase(key);
      }
    }
    return r;
  };

  std::size_t bg = 0;
  auto drain_background = [&](int upto) {
    is_test = false;
    for (; bg < background.size() && background[bg].after <= upto; ++bg) {
      run_one(background[bg].source, background[bg].adu);
    }
    is_test = true;
  };

  drain_background(0);
  std::optional<InjectResult> last;
  for (const auto& ev : events) {
    if (ev.kind == WireEvent::Kind::kAwaitResponse) {
      bool ok = false;
      if (last && last->end == Termination::kDelivered) {
        const Adu& f = last->final_adu;
        ok = f.is_http_response() && f.httpRespObj == ev.object && f.dstIP == ev.adu.srcIP;
      }
      res.awaits.push_back({ev.seq, ev.object, ok});
      continue;
    }
    last = run_one(ev.source, ev.adu);
    drain_background(ev.seq);
  }
  drain_background(std::numeric_limits<int>::max());
  res.final_state = std::move(state);
  return res;
}

}  // namespace adutest
