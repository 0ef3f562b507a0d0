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

// Compares intended (model) and observed (simulated plane) paths, decides a
// verdict and localizes the first divergence.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/harness.hpp"
#include "adutest/network.hpp"
#include "adutest/planner.hpp"
#include "adutest/policy.hpp"
#include "adutest/topology.hpp"

namespace adutest {

struct ObsPoint {
  EdgeId port = -1;
  Direction direction = Direction::kEgress;
  NodeId node;
  Adu snapshot;
  std::size_t index = 0;  // position in the full (unprojected) model path
  std::size_t record = 0;  // log record seq, for evidence

  bool same_as(const ObsPoint& o) const {
    return port == o.port && direction == o.direction && behavior_signature(snapshot) == behavior_signature(o.snapshot);
  }
};

struct PathView {
  int aduId = kDontCare;
  std::vector<ObsPoint> points;

  std::string terminal(const Topology& topo) const {
    if (points.empty()) return "unobserved";
    const ObsPoint& p = points.back();
    switch (p.direction) {
      case Direction::kDeliver: return "delivered@" + p.node;
      case Direction::kIngress: return "stopped@" + p.node;
      case Direction::kEgress: return "lost@" + topo.edge(p.port).label();
    }
    return "?";
  }
};

inline ObsPoint point_of(const MonitorRecord& r, std::size_t index) {
  return ObsPoint{r.port, r.direction, r.node, r.snapshot, index, r.seq};
}

// Test-ADU path views keyed by aduId. Under MonitorAll consecutive records of
// one ADU must be port-adjacent.
inline std::map<int, PathView> reconstruct(const MonitorLog& log, const Topology& topo) {
  std::map<int, PathView> out;
  for (const auto& r : log.records) {
    if (!r.isTest) continue;
    if (r.port < 0 || static_cast<std::size_t>(r.port) >= topo.edges().size()) {
      throw CorruptLogError("record " + std::to_string(r.seq) + " names unknown port");
    }
    PathView& v = out[r.aduId];
    v.aduId = r.aduId;
    if (log.mode == MonitorMode::kMonitorAll && !v.points.empty()) {
      const ObsPoint& prev = v.points.back();
      const Edge& pe = topo.edge(prev.port);
      const Edge& ce = topo.edge(r.port);
      bool ok = false;
      switch (r.direction) {
        case Direction::kIngress: ok = prev.direction == Direction::kEgress && prev.port == r.port; break;
        case Direction::kEgress: ok = prev.direction == Direction::kIngress && pe.to == ce.from; break;
        case Direction::kDeliver: ok = prev.direction == Direction::kIngress && prev.port == r.port; break;
      }
      if (!ok) throw CorruptLogError("non-adjacent records for ADU " + std::to_string(r.aduId) + " at seq " + std::to_string(r.seq));
    }
    v.points.push_back(point_of(r, v.points.size()));
  }
  return out;
}

// The intended behavior: the plan replayed on the fault-free model with
// every port observed.
struct ModelRun {
  std::map<int, PathView> views;  // full views; index == position
  std::vector<InjectResult> results;
  std::vector<int> order;  // aduIds in plan order (clock ADUs excluded)
};

inline ModelRun model_run(const Topology& topo, const Plan& plan) {
  ModelRun m;
  NetworkState st(topo);
  MonitorLog log;
  log.mode = MonitorMode::kMonitorAll;
  ExecHooks h;
  h.observe = [&](EdgeId e, Direction d, const Adu& a) {
    MonitorRecord r = make_record(topo, e, d, a, 0, true);
    r.seq = log.records.size();
    log.records.push_back(std::move(r));
  };
  for (const auto& s : plan.steps) {
    m.results.push_back(inject(topo, st, s.adu, s.source, InjectOptions{kDefaultLoopFactor, &h}));
    if (!s.adu.is_time()) m.order.push_back(s.adu.aduId);
  }
  m.views = reconstruct(log, topo);
  return m;
}

inline PathView project(const PathView& full, const Topology& topo, MonitorMode mode) {
  PathView v;
  v.aduId = full.aduId;
  for (const auto& p : full.points) {
    if (observed(topo, mode, p.port, p.direction)) v.points.push_back(p);
  }
  return v;
}

// Number of leading points two views share.
inline std::size_t common_prefix(const PathView& a, const PathView& b) {
  std::size_t i = 0;
  while (i < a.points.size() && i < b.points.size() && a.points[i].same_as(b.points[i])) ++i;
  return i;
}

inline std::string link_name(const Topology& topo, EdgeId e) { return "link:" + topo.edge(e).label(); }

// Element i of a full path alternates node, link, node, ... starting at the
// injecting node.
inline std::string element_at(const PathView& full, const Topology& topo, std::size_t i) {
  if (full.points.empty()) return "?";
  if (i == 0) return full.points.front().node;
  if (i % 2 == 1) {
    const std::size_t r = i - 1;
    return r < full.points.size() ? link_name(topo, full.points[r].port) : "?";
  }
  const std::size_t r = i - 1;
  return r < full.points.size() ? full.points[r].node : "?";
}

struct Localization {
  std::vector<std::string> elements;  // one element, or a segment
  int aduId = kDontCare;
  std::size_t divergence = 0;  // index into the projected views
  bool segment() const { return elements.size() > 1; }
};

// Responsible elements between the last common observation and the first
// intended one that was not observed. Adjacent points pin one node or link;
// a monitoring gap yields every element in between.
inline Localization localize(const PathView& full_orig, const PathView& orig, const PathView& obs,
                             const Topology& topo) {
  Localization loc;
  loc.aduId = orig.aduId;
  const std::size_t i = common_prefix(orig, obs);
  loc.divergence = i;
  const std::size_t from = i == 0 ? 0 : orig.points[i - 1].index + 1;
  std::size_t to;
  if (i < orig.points.size()) {
    to = orig.points[i].index + 1;
  } else {
    to = from + 1;  // observed more than intended: the element right after
  }
  for (std::size_t k = from; k < to; ++k) loc.elements.push_back(element_at(full_orig, topo, k));
  if (loc.elements.empty()) loc.elements.push_back(element_at(full_orig, topo, from));
  return loc;
}

// ---- Interference ----------------------------------------------------------

enum class InterferenceKind { kNone, kResolvable, kUnresolvable };

inline std::string_view to_string(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::kNone: return "none";
    case InterferenceKind::kResolvable: return "resolvable";
    case InterferenceKind::kUnresolvable: return "unresolvable";
  }
  return "?";
}

struct Interference {
  InterferenceKind kind = InterferenceKind::kNone;
  std::vector<std::size_t> evidence;  // log record seqs
};

// NFs whose state is keyed per end host: background from a test host can
// shift their counters.
inline bool per_host_keyed(const Topology& topo, const NodeId& nf) {
  const auto& t = topo.node(nf).type;
  return t == "lips" || t == "auth";
}

// Background that matches the traceSpec is tolerated only when it stays off
// the policy path, or when it is disjoint from the test traffic in endpoint
// pair and object and cannot share per-host state with it.
inline Interference detect_interference(const MonitorLog& log, const PolicyScenario& sc, const Plan& plan,
                                        const Topology& topo) {
  std::set<int> test_src, test_obj;
  std::set<std::pair<int, int>> test_pairs;
  auto pair_of = [](const Adu& a) { return std::minmax(a.srcIP, a.dstIP); };
  for (const auto& s : plan.steps) {
    if (s.adu.is_time()) continue;
    test_src.insert(s.adu.srcIP);
    test_pairs.insert(pair_of(s.adu));
    if (s.adu.httpGetObj != kDontCare) test_obj.insert(s.adu.httpGetObj);
  }
  std::set<NodeId> path_nfs;
  bool keyed = false;
  for (const auto& e : sc.policyPath) {
    path_nfs.insert(e.nf);
    keyed = keyed || per_host_keyed(topo, e.nf);
  }

  std::map<int, std::vector<const MonitorRecord*>> flows;
  for (const auto& r : log.records) {
    if (!r.isTest) flows[r.aduId].push_back(&r);
  }
  Interference out;
  bool any_match = false, unresolved = false;
  for (const auto& [id, recs] : flows) {
    const Adu& first = recs.front()->snapshot;
    if (!satisfies(first, sc.traceSpec)) continue;
    any_match = true;
    bool touches = false;
    for (const auto* r : recs) touches = touches || path_nfs.count(r->node) > 0;
    if (!touches) continue;
    const bool disjoint = !test_pairs.count(pair_of(first)) &&
                          (first.httpGetObj == kDontCare || !test_obj.count(first.httpGetObj)) &&
                          (!test_src.count(first.srcIP) || !keyed);
    if (!disjoint) {
      unresolved = true;
      for (const auto* r : recs) out.evidence.push_back(r->seq);
    }
  }
  out.kind = !any_match ? InterferenceKind::kNone
             : unresolved ? InterferenceKind::kUnresolvable
                          : InterferenceKind::kResolvable;
  return out;
}

// ---- Verdicts --------------------------------------------------------------

enum class VerdictKind { kSuccess, kFail, kUnknown };

inline std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::kSuccess: return "Success";
    case VerdictKind::kFail: return "Fail";
    case VerdictKind::kUnknown: return "Unknown";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::kSuccess;
  std::optional<Localization> localized;
  Interference interference;
  std::string followUp;  // "MonitorAll" when a rerun is required
  std::vector<std::size_t> evidence;
};

// Policy-path NFs appear, in order, among the observed nodes of the ADU that
// realizes the scenario.
inline bool path_visible(const PolicyScenario& sc, const PathView& obs) {
  std::size_t k = 0;
  for (const auto& p : obs.points) {
    if (k < sc.policyPath.size() && p.node == sc.policyPath[k].nf && p.direction == Direction::kIngress) ++k;
  }
  return k == sc.policyPath.size();
}

inline Verdict validate(const ModelRun& orig, const std::map<int, PathView>& obs, const Interference& itf,
                        const PolicyScenario& sc, const Topology& topo, MonitorMode mode) {
  Verdict v;
  v.interference = itf;
  if (itf.kind == InterferenceKind::kUnresolvable) {
    v.kind = VerdictKind::kUnknown;
    v.followUp = "MonitorAll";
    v.evidence = itf.evidence;
    return v;
  }
  static const PathView kEmpty;
  for (int id : orig.order) {
    auto fo = orig.views.find(id);
    const PathView& full = fo == orig.views.end() ? kEmpty : fo->second;
    const PathView want = project(full, topo, mode);
    auto it = obs.find(id);
    PathView got = it == obs.end() ? PathView{id, {}} : it->second;
    bool same = want.points.size() == got.points.size() && common_prefix(want, got) == want.points.size();
    if (!same) {
      v.kind = VerdictKind::kFail;
      Localization loc = localize(full, want, got, topo);
      loc.aduId = id;
      v.localized = loc;
      for (const auto& p : got.points) v.evidence.push_back(p.record);
      if (mode == MonitorMode::kStatefulPortsOnly && loc.segment()) v.followUp = "MonitorAll";
      return v;
    }
  }
  if (!orig.order.empty() && !sc.policyPath.empty()) {
    auto it = obs.find(orig.order.back());
    if (it == obs.end() || !path_visible(sc, it->second)) {
      v.kind = VerdictKind::kFail;
      Localization loc;
      loc.aduId = orig.order.back();
      loc.elements.push_back(sc.policyPath.front().nf);
      v.localized = loc;
      return v;
    }
  }
  v.kind = VerdictKind::kSuccess;
  return v;
}

}  // namespace adutest
