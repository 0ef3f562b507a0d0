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

#include <adutest/validator.hpp>

#include <gtest/gtest.h>

#include <fstream>

namespace adutest {
namespace {

Json read(const std::string& rel) {
  std::ifstream in(std::string(ADUTEST_SCENARIO_DIR) + "/" + rel);
  return Json::parse(in);
}

Adu tcp(int src, int dst, int syn, int ack) {
  Adu a;
  a.srcIP = src;
  a.dstIP = dst;
  a.proto = 6;
  a.tcpSYN = syn;
  a.tcpACK = ack;
  a.tcpFIN = 0;
  a.tcpRST = 0;
  return a;
}

Plan plan_of(const std::vector<TraceEntry>& tr) {
  Plan p;
  for (std::size_t i = 0; i < tr.size(); ++i) p.steps.push_back({tr[i].source, instantiate(tr[i].adu, i)});
  return p;
}

Plan hit_plan() {
  Adu get = tcp(1, 20, 0, 1);
  get.httpGetObj = 1;
  return plan_of({{"H1", tcp(1, 20, 1, 0)}, {"SRV", tcp(20, 1, 1, 1)}, {"H1", tcp(1, 20, 0, 1)}, {"H1", get}, {"H1", get}});
}

PolicyScenario scenario(const std::string& dir, const std::string& name) {
  for (auto& s : scenarios_from_json(read(dir + "/policies.json"))) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no scenario " + name);
}

EdgeId edge_between(const Topology& t, const NodeId& from, const NodeId& to) {
  for (std::size_t i = 0; i < t.edges().size(); ++i) {
    if (t.edges()[i].from == from && t.edges()[i].to == to) return static_cast<EdgeId>(i);
  }
  throw std::runtime_error("no edge " + from + "->" + to);
}

MonitorLog run_log(const SimNetwork& sim, const Plan& p, MonitorMode mode, const std::vector<BackgroundAdu>& bg = {}) {
  return run_script(sim, expand(build_scripts(p)), mode, bg).log;
}

class ProxyValidation : public ::testing::Test {
 protected:
  SimNetwork sim{read("proxy_monitor/topology.json")};
  const Topology& topo = sim.topology();
  Plan plan = hit_plan();
  PolicyScenario sc = scenario("proxy_monitor", "h1-hit-allowed");
  ModelRun orig = model_run(topo, plan);
};

TEST_F(ProxyValidation, ReconstructMatchesModel) {
  auto obs = reconstruct(run_log(sim, plan, MonitorMode::kMonitorAll), topo);
  ASSERT_EQ(obs.size(), orig.views.size());
  for (const auto& [id, v] : orig.views) {
    ASSERT_TRUE(obs.count(id));
    EXPECT_EQ(common_prefix(v, obs.at(id)), v.points.size());
  }
  EXPECT_EQ(orig.order, (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(orig.views.at(5).terminal(topo), "delivered@H1");
}

TEST_F(ProxyValidation, CorruptLogsRejected) {
  MonitorLog log = run_log(sim, plan, MonitorMode::kMonitorAll);
  MonitorLog bad = log;
  bad.records[2].port = 999;
  EXPECT_THROW(reconstruct(bad, topo), CorruptLogError);
  bad = log;
  bad.records.erase(bad.records.begin() + 1);
  EXPECT_THROW(reconstruct(bad, topo), CorruptLogError);
  // The same gap is legal when only stateful ports are monitored.
  bad.mode = MonitorMode::kStatefulPortsOnly;
  EXPECT_NO_THROW(reconstruct(bad, topo));
}

TEST_F(ProxyValidation, ElementsAlternateNodeAndLink) {
  const PathView& full = orig.views.at(1);
  EXPECT_EQ(element_at(full, topo, 0), "H1");
  EXPECT_EQ(element_at(full, topo, 1), "link:" + topo.edge(edge_between(topo, "H1", "S1")).label());
  EXPECT_EQ(element_at(full, topo, 2), "S1");
  EXPECT_EQ(element_at(full, topo, 4), full.points[3].node);
}

TEST_F(ProxyValidation, LostOnLinkPinsTheLink) {
  const PathView& full = orig.views.at(5);
  const EdgeId down = edge_between(topo, "S1", "S2");
  PathView obs{5, {}};
  for (const auto& p : full.points) {
    obs.points.push_back(p);
    if (p.port == down && p.direction == Direction::kEgress) break;
  }
  ASSERT_LT(obs.points.size(), full.points.size());
  Localization loc = localize(full, full, obs, topo);
  ASSERT_EQ(loc.elements.size(), 1u);
  EXPECT_EQ(loc.elements[0], "link:" + topo.edge(down).label());
  EXPECT_EQ(loc.divergence, obs.points.size());
}

TEST_F(ProxyValidation, StoppedAtNodePinsTheNode) {
  const PathView& full = orig.views.at(4);
  PathView obs{4, {full.points[0], full.points[1]}};
  Localization loc = localize(full, full, obs, topo);
  ASSERT_EQ(loc.elements.size(), 1u);
  EXPECT_EQ(loc.elements[0], full.points[1].node);
}

TEST_F(ProxyValidation, MonitoringGapYieldsSegment) {
  const PathView& full = orig.views.at(4);
  PathView want = project(full, topo, MonitorMode::kStatefulPortsOnly);
  std::size_t k = 1;
  while (k < want.points.size() && want.points[k].index == want.points[k - 1].index + 1) ++k;
  ASSERT_LT(k, want.points.size());
  PathView obs{4, std::vector<ObsPoint>(want.points.begin(), want.points.begin() + static_cast<std::ptrdiff_t>(k))};
  Localization loc = localize(full, want, obs, topo);
  EXPECT_TRUE(loc.segment());
  EXPECT_EQ(loc.elements.size(), want.points[k].index - want.points[k - 1].index);
}

TEST_F(ProxyValidation, FaultFreeRunSucceeds) {
  for (MonitorMode m : {MonitorMode::kMonitorAll, MonitorMode::kStatefulPortsOnly}) {
    MonitorLog log = run_log(sim, plan, m);
    Interference itf = detect_interference(log, sc, plan, topo);
    EXPECT_EQ(itf.kind, InterferenceKind::kNone);
    Verdict v = validate(orig, reconstruct(log, topo), itf, sc, topo, m);
    EXPECT_EQ(v.kind, VerdictKind::kSuccess);
    EXPECT_FALSE(v.localized);
  }
}

TEST_F(ProxyValidation, MissingRuleFails) {
  SimNetwork broken = inject_fault(sim, faults_from_json(read("faults/link_down_s1_s2.json"))[0]);
  MonitorLog log = run_log(broken, plan, MonitorMode::kMonitorAll);
  Verdict v = validate(orig, reconstruct(log, topo), detect_interference(log, sc, plan, topo), sc, topo,
                       MonitorMode::kMonitorAll);
  EXPECT_EQ(v.kind, VerdictKind::kFail);
  ASSERT_TRUE(v.localized);
  EXPECT_EQ(v.localized->elements, (std::vector<std::string>{"link:" + topo.edge(edge_between(topo, "S1", "S2")).label()}));
  EXPECT_TRUE(v.followUp.empty());
}

TEST_F(ProxyValidation, SegmentUnderStatefulMonitoringAsksForRerun) {
  SimNetwork broken = inject_fault(sim, faults_from_json(read("faults/link_down_s1_s2.json"))[0]);
  const MonitorMode m = MonitorMode::kStatefulPortsOnly;
  MonitorLog log = run_log(broken, plan, m);
  Verdict v = validate(orig, reconstruct(log, topo), detect_interference(log, sc, plan, topo), sc, topo, m);
  EXPECT_EQ(v.kind, VerdictKind::kFail);
  ASSERT_TRUE(v.localized);
  EXPECT_EQ(v.followUp, v.localized->segment() ? "MonitorAll" : "");
}

// ---- interference ----------------------------------------------------------

MonitorRecord background_at(const Topology& topo, EdgeId e, Adu a, std::size_t seq) {
  a.aduId = kBackgroundIdBase + static_cast<int>(seq);
  MonitorRecord r = make_record(topo, e, Direction::kIngress, a, 0, false);
  r.seq = seq;
  return r;
}

TEST_F(ProxyValidation, InterferenceClassification) {
  const EdgeId into_p = edge_between(topo, "S1", "P");
  const EdgeId into_h2 = edge_between(topo, "S1", "H2");
  Adu other = tcp(2, 20, 0, 1);
  other.httpGetObj = 2;
  Adu same_pair = tcp(20, 1, 0, 1);
  Adu same_obj = tcp(2, 20, 0, 1);
  same_obj.httpGetObj = 1;
  Adu udp = other;
  udp.proto = 17;

  auto classify = [&](std::vector<MonitorRecord> recs) {
    MonitorLog log;
    log.records = std::move(recs);
    return detect_interference(log, sc, plan, topo);
  };
  EXPECT_EQ(classify({background_at(topo, into_p, udp, 0)}).kind, InterferenceKind::kNone);
  EXPECT_EQ(classify({background_at(topo, into_h2, same_pair, 0)}).kind, InterferenceKind::kResolvable);
  EXPECT_EQ(classify({background_at(topo, into_p, other, 0)}).kind, InterferenceKind::kResolvable);
  Interference bad = classify({background_at(topo, into_p, other, 0), background_at(topo, into_p, same_obj, 7)});
  EXPECT_EQ(bad.kind, InterferenceKind::kUnresolvable);
  EXPECT_EQ(bad.evidence, (std::vector<std::size_t>{7}));
  EXPECT_EQ(classify({background_at(topo, into_p, same_pair, 3)}).kind, InterferenceKind::kUnresolvable);

  Verdict v = validate(orig, {}, bad, sc, topo, MonitorMode::kStatefulPortsOnly);
  EXPECT_EQ(v.kind, VerdictKind::kUnknown);
  EXPECT_EQ(v.followUp, "MonitorAll");
  EXPECT_EQ(v.evidence, bad.evidence);
}

TEST(Interference, PerHostStateSharedWithTestSource) {
  Topology topo = Topology::from_json(read("ips/topology.json"));
  PolicyScenario sc = scenario("ips", "scanner-payload-blocked");
  Plan plan = plan_of({{"H1", tcp(1, 31, 1, 0)}});
  EdgeId into_lips = -1;
  for (std::size_t i = 0; i < topo.edges().size(); ++i) {
    if (topo.edges()[i].to == "LIPS") into_lips = static_cast<EdgeId>(i);
  }
  ASSERT_GE(into_lips, 0);
  MonitorLog log;
  log.records.push_back(background_at(topo, into_lips, tcp(1, 33, 1, 0), 0));
  EXPECT_EQ(detect_interference(log, sc, plan, topo).kind, InterferenceKind::kUnresolvable);
  log.records[0] = background_at(topo, into_lips, tcp(2, 33, 1, 0), 0);
  EXPECT_EQ(detect_interference(log, sc, plan, topo).kind, InterferenceKind::kResolvable);
}

}  // namespace
}  // namespace adutest
