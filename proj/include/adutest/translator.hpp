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

// Plan -> per-injector scripts of traffic primitives -> wire events.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/planner.hpp"

namespace adutest {

struct SeqStep {
  int seq;  // 1-based position in the plan
  PlanStep step;
};

inline const std::string kClockPartition = "clock";

inline std::string partition_key(const Adu& a) {
  if (a.is_time()) return kClockPartition;
  const int lo = std::min(a.srcIP, a.dstIP), hi = std::max(a.srcIP, a.dstIP);
  return std::to_string(lo) + "-" + std::to_string(hi);
}

// Groups plan ADUs by unordered endpoint pair so a flow's two directions
// stay together; order within a partition follows the plan.
inline std::map<std::string, std::vector<SeqStep>> partition(const Plan& plan) {
  std::map<std::string, std::vector<SeqStep>> out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    out[partition_key(plan.steps[i].adu)].push_back({static_cast<int>(i) + 1, plan.steps[i]});
  }
  return out;
}

enum class Layer : int { kIp = 1, kTransport = 2, kApplication = 3 };

struct TemplateStep {
  bool reverse = false;
  std::map<std::string, int> set;
};

struct PrimitiveDef {
  std::string name;
  Layer layer;
  std::vector<TemplateStep> steps;
  std::function<bool(const Adu&)> guard;
  int specificity() const {
    int n = 0;
    for (const auto& s : steps) n += static_cast<int>(s.set.size());
    return n;
  }
};

namespace detail {

inline Adu apply_template(Adu base, const TemplateStep& t) {
  if (t.reverse) base = reply_to(std::move(base));
  for (const auto& [k, v] : t.set) base.*(find_field(k)->member) = v;
  return base;
}

inline bool same_behavior(Adu a, Adu b) {
  a.aduId = b.aduId = kDontCare;
  a.networkPort = b.networkPort = kDontCare;
  return a == b;
}

}  // namespace detail

// The fixed roster, in match priority order: higher layer, then longer, then
// more specific. waitTicks is handled on the clock partition.
inline const std::vector<PrimitiveDef>& primitive_library() {
  static const std::vector<PrimitiveDef> lib = [] {
    auto any = [](const Adu&) { return true; };
    auto get = [](const Adu& a) { return a.httpGetObj >= 0 && a.httpRespObj == kDontCare; };
    std::vector<PrimitiveDef> v{
        {"getFTP", Layer::kApplication, {{false, {{"dstPort", 21}}}},
         [get](const Adu& a) { return get(a) && a.dstPort == 21; }},
        {"getHTTP", Layer::kApplication, {{false, {}}}, get},
        {"sendPayloadSig", Layer::kApplication, {{false, {}}},
         [](const Adu& a) { return a.payloadSig >= 0 && a.httpGetObj == kDontCare; }},
        {"establishTCP", Layer::kTransport,
         {{false, {{"tcpSYN", 1}, {"tcpACK", 0}}},
          {true, {{"tcpSYN", 1}, {"tcpACK", 1}}},
          {false, {{"tcpSYN", 0}, {"tcpACK", 1}}}},
         any},
        {"failedConnect", Layer::kTransport,
         {{false, {{"tcpSYN", 1}, {"tcpACK", 0}}}, {true, {{"tcpSYN", 0}, {"tcpRST", 1}}}}, any},
        {"closeTCP", Layer::kTransport, {{false, {{"tcpFIN", 1}}}, {true, {{"tcpFIN", 1}}}}, any},
        {"sendTCPSyn", Layer::kTransport, {{false, {{"tcpSYN", 1}, {"tcpACK", 0}}}}, any},
        {"sendTCPData", Layer::kTransport, {{false, {{"tcpSYN", 0}}}},
         [](const Adu& a) { return a.proto == 6; }},
        {"sendUDP", Layer::kTransport, {{false, {{"proto", 17}}}}, any},
        {"sendIPPacket", Layer::kIp, {{false, {}}}, any},
    };
    std::stable_sort(v.begin(), v.end(), [](const PrimitiveDef& a, const PrimitiveDef& b) {
      if (a.layer != b.layer) return a.layer > b.layer;
      if (a.steps.size() != b.steps.size()) return a.steps.size() > b.steps.size();
      return a.specificity() > b.specificity();
    });
    return v;
  }();
  return lib;
}

inline const std::vector<std::string>& primitive_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& p : primitive_library()) n.push_back(p.name);
    n.push_back("waitTicks");
    return n;
  }();
  return names;
}

struct PrimitiveCall {
  std::string name;
  Json params;                       // base ADU fields; {"ticks": n} for waitTicks
  std::vector<int> barrier;          // plan positions, one per emitted ADU
  std::vector<std::string> sources;  // injection point per emitted ADU
};

struct TestScript {
  std::string injector;
  std::vector<PrimitiveCall> steps;
};

inline Json params_of(const Adu& a) {
  Json j = Json::object();
  for (const auto& f : kAduFields) {
    if (f.kind == FieldKind::kLocation) continue;
    if (a.*f.member != kDontCare) j[std::string(f.name)] = a.*f.member;
  }
  if (!(a.cTags == CTags{})) j["cTags"] = to_json(a.cTags);
  return j;
}

// Greedy longest-specific match; an ADU nothing else covers becomes
// sendIPPacket, so translation is total.
inline std::vector<PrimitiveCall> translate(const std::vector<SeqStep>& sub) {
  std::vector<PrimitiveCall> out;
  std::size_t i = 0;
  while (i < sub.size()) {
    if (sub[i].step.adu.is_time()) {
      PrimitiveCall call{"waitTicks", Json::object(), {}, {}};
      while (i < sub.size() && sub[i].step.adu.is_time()) {
        call.barrier.push_back(sub[i].seq);
        call.sources.push_back(sub[i].step.source);
        ++i;
      }
      call.params["ticks"] = static_cast<int>(call.barrier.size());
      out.push_back(std::move(call));
      continue;
    }
    const Adu& base = sub[i].step.adu;
    bool matched = false;
    for (const auto& p : primitive_library()) {
      if (i + p.steps.size() > sub.size() || !p.guard(base)) continue;
      bool ok = true;
      for (std::size_t k = 0; k < p.steps.size() && ok; ++k) {
        const Adu& got = sub[i + k].step.adu;
        ok = !got.is_time() && detail::same_behavior(detail::apply_template(base, p.steps[k]), got);
      }
      if (!ok) continue;
      PrimitiveCall call{p.name, params_of(base), {}, {}};
      for (std::size_t k = 0; k < p.steps.size(); ++k) {
        call.barrier.push_back(sub[i + k].seq);
        call.sources.push_back(sub[i + k].step.source);
      }
      out.push_back(std::move(call));
      i += p.steps.size();
      matched = true;
      break;
    }
    if (!matched) throw ContractViolation("no primitive matched");  // unreachable: fallback
  }
  return out;
}

// One script per partition, named after the partition's first injector.
inline std::vector<TestScript> build_scripts(const Plan& plan) {
  std::vector<TestScript> out;
  for (const auto& [key, sub] : partition(plan)) {
    TestScript s;
    s.injector = key == kClockPartition ? kClockPartition : sub.front().step.source;
    s.steps = translate(sub);
    out.push_back(std::move(s));
  }
  return out;
}

inline Json to_json(const TestScript& s) {
  Json steps = Json::array();
  for (const auto& c : s.steps) {
    steps.push_back({{"primitive", c.name}, {"params", c.params}, {"barrier", c.barrier}, {"sources", c.sources}});
  }
  return Json{{"injector", s.injector}, {"steps", steps}};
}

inline TestScript script_from_json(const Json& j) {
  TestScript s;
  s.injector = j.at("injector").get<std::string>();
  for (const auto& st : j.at("steps")) {
    s.steps.push_back({st.at("primitive").get<std::string>(), st.at("params"),
                       st.at("barrier").get<std::vector<int>>(),
                       st.at("sources").get<std::vector<std::string>>()});
  }
  return s;
}

struct WireEvent {
  enum class Kind { kInject, kAwaitResponse } kind = Kind::kInject;
  int seq = 0;
  std::string source;
  Adu adu;
  int object = kDontCare;  // awaited object
};

// Primitive calls to per-ADU events, merged into global barrier order. Each
// emitted ADU gets its plan position as aduId.
inline std::vector<WireEvent> expand(const std::vector<TestScript>& scripts) {
  std::vector<WireEvent> ev;
  for (const auto& s : scripts) {
    for (const auto& c : s.steps) {
      if (c.barrier.size() != c.sources.size()) throw ContractViolation("barrier/source mismatch in " + c.name);
      if (c.name == "waitTicks") {
        const int n = c.params.at("ticks").get<int>();
        if (n != static_cast<int>(c.barrier.size())) throw ContractViolation("waitTicks count mismatch");
        for (int k = 0; k < n; ++k) {
          Adu t = make_time_adu(c.barrier[k]);
          t.aduId = c.barrier[k];
          ev.push_back({WireEvent::Kind::kInject, c.barrier[k], c.sources[k], t});
        }
        continue;
      }
      auto it = std::find_if(primitive_library().begin(), primitive_library().end(),
                             [&](const PrimitiveDef& p) { return p.name == c.name; });
      if (it == primitive_library().end()) throw ConfigError("unknown primitive " + c.name);
      if (it->steps.size() != c.barrier.size()) throw ContractViolation("barrier count mismatch in " + c.name);
      const Adu base = adu_from_json(c.params);
      for (std::size_t k = 0; k < it->steps.size(); ++k) {
        Adu a = detail::apply_template(base, it->steps[k]);
        a.aduId = c.barrier[k];
        ev.push_back({WireEvent::Kind::kInject, c.barrier[k], c.sources[k], a});
      }
      if (c.name == "getHTTP" || c.name == "getFTP") {
        ev.push_back({WireEvent::Kind::kAwaitResponse, c.barrier.back(), c.sources.back(), base,
                      base.httpGetObj});
      }
    }
  }
  std::stable_sort(ev.begin(), ev.end(), [](const WireEvent& a, const WireEvent& b) {
    if (a.seq != b.seq) return a.seq < b.seq;
    return a.kind < b.kind;
  });
  return ev;
}

}  // namespace adutest
