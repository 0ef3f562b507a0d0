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

#include <adutest/nf_library.hpp>

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

namespace adutest {
namespace {

Adu tcp(int src, int dst, int syn, int ack, int sport = 100, int dport = 80) {
  Adu a;
  a.srcIP = src;
  a.dstIP = dst;
  a.proto = 6;
  a.srcPort = sport;
  a.dstPort = dport;
  a.tcpSYN = syn;
  a.tcpACK = ack;
  a.tcpFIN = 0;
  a.tcpRST = 0;
  return a;
}

Adu reversed(Adu a) {
  std::swap(a.srcIP, a.dstIP);
  std::swap(a.srcPort, a.dstPort);
  return a;
}

// Threads one model's store through successive calls.
struct Driver {
  NfPtr nf;
  StateStore store;

  ProcessResult operator()(const Adu& in, const PortName& port) {
    ProcessResult r = process(*nf, store, in, port);
    store = r.store;
    return r;
  }
  std::size_t count() const { return reachable_state_count(*nf, store); }
};

Driver firewall(Json cfg = Json::object()) { return {make_nf("FW", "firewall", cfg), {}}; }

int conn_state(const Driver& d, const Adu& outbound) {
  return d.store.get_or({"FW", std::string(Firewall::kConnTask), Firewall::unit_for(outbound, true)},
                        Firewall::kNull);
}

// ---- process contract ----------------------------------------------------

TEST(Process, MalformedInputIsAContractViolation) {
  auto fw = make_nf("FW", "firewall", Json::object());
  Adu bad = tcp(1, 9, 2, 0);
  EXPECT_THROW(process(*fw, {}, bad, "inside"), ContractViolation);
}

TEST(Process, SwitchIsStateless) {
  auto sw = make_nf("S", "switch", Json::parse(R"({"rules": [{"match": {"dstIP": 9}, "out": "a"}], "default": "b"})"));
  StateStore st;
  ProcessResult r = process(*sw, st, tcp(1, 9, 1, 0), "x");
  EXPECT_TRUE(r.store.empty());
  EXPECT_EQ(r.egress, PortName("a"));
  EXPECT_EQ(r.effect.label, EffectLabel::kForward);
  EXPECT_EQ(process(*sw, st, tcp(1, 8, 1, 0), "x").egress, PortName("b"));
}

TEST(Process, ExactlyOneEffectNamingTheNf) {
  Driver d = firewall();
  ProcessResult r = d(tcp(1, 9, 1, 0), "inside");
  EXPECT_EQ(r.effect.nf, "FW");
}

TEST(Process, DeterministicOnSerializedForm) {
  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) {
    Driver a = firewall(), b = firewall();
    for (int k = 0; k < 6; ++k) {
      Adu in = tcp(rng() % 2 ? 1 : 9, rng() % 2 ? 1 : 9, rng() % 2, rng() % 2);
      const PortName port = in.srcIP == 1 ? "inside" : "outside";
      auto ra = a(in, port);
      auto rb = b(in, port);
      ASSERT_EQ(to_json(ra.out).dump(), to_json(rb.out).dump());
      ASSERT_EQ(to_json(ra.effect).dump(), to_json(rb.effect).dump());
      ASSERT_EQ(a.store.serialize(), b.store.serialize());
    }
  }
}

TEST(Reset, RerunGivesIdenticalEffects) {
  Driver d = firewall();
  const std::vector<std::pair<Adu, PortName>> trace{{tcp(1, 9, 1, 0), "inside"},
                                                    {reversed(tcp(1, 9, 1, 1)), "outside"},
                                                    {reversed(tcp(1, 9, 0, 0)), "outside"}};
  std::vector<std::string> first, second;
  for (const auto& [a, p] : trace) first.push_back(to_json(d(a, p).effect).dump());
  d.store = reset(*d.nf, d.store);
  for (const auto& [a, p] : trace) second.push_back(to_json(d(a, p).effect).dump());
  EXPECT_EQ(first, second);
}

TEST(Reset, EmptyStaysEmpty) {
  auto fw = make_nf("FW", "firewall", Json::object());
  EXPECT_TRUE(reset(*fw, StateStore{}).empty());
}

TEST(Reset, OnlyTouchesItsOwnKeys) {
  StateStore st;
  st.set({"FW", "connTrack", "u"}, 1);
  st.set({"P", "cache", "1"}, 1);
  auto fw = make_nf("FW", "firewall", Json::object());
  StateStore after = reset(*fw, st);
  EXPECT_EQ(after.size(), 1u);
  EXPECT_EQ(after.get({"P", "cache", "1"}), 1);
}

// ---- ensembles -----------------------------------------------------------

TEST(Ensemble, FreshModelHasNoInstances) {
  EXPECT_EQ(firewall().count(), 0u);
}

TEST(Ensemble, TwoConnectionsAreTwoInstances) {
  Driver d = firewall();
  d(tcp(1, 9, 1, 0, 100, 80), "inside");
  d(tcp(1, 9, 1, 0, 101, 80), "inside");
  EXPECT_EQ(d.count(), 2u);
}

TEST(Ensemble, ProxyKeepsOneInstancePerTask) {
  auto px = make_nf("P", "proxy", Json::parse(R"({"ip": 10})"));
  Driver d{px, {}};
  d(tcp(1, 20, 1, 0), "client");
  // Handshake completion, a miss, and the server's response.
  d(reversed(tcp(1, 20, 1, 1)), "server");
  d(tcp(1, 20, 0, 1), "client");
  Adu get = tcp(1, 20, 0, 1);
  get.httpGetObj = 5;
  ProcessResult miss = d(get, "client");
  ASSERT_EQ(miss.effect.label, EffectLabel::kMiss);
  Adu resp = miss.out;
  std::swap(resp.srcIP, resp.dstIP);
  resp.httpRespObj = 5;
  resp.httpGetObj = kDontCare;
  d(resp, "server");
  std::set<std::string> tasks;
  for (const auto& [k, v] : d.store.raw()) tasks.insert(k.task);
  EXPECT_EQ(d.count(), 3u);
  EXPECT_EQ(tasks, (std::set<std::string>{"cache", "clientTCP", "serverTCP"}));
}

TEST(Ensemble, ConnectionsAreIsolated) {
  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    Driver d = firewall();
    d(tcp(1, 9, 1, 0, 100, 80), "inside");
    const int before = conn_state(d, tcp(1, 9, 1, 0, 100, 80));
    // Arbitrary traffic on a second connection.
    for (int k = 0; k < 5; ++k) {
      Adu a = tcp(1, 9, rng() % 2, rng() % 2, 101, 80);
      a.tcpRST = static_cast<int>(rng() % 2);
      if (rng() % 2) {
        d(a, "inside");
      } else {
        d(reversed(a), "outside");
      }
    }
    ASSERT_EQ(conn_state(d, tcp(1, 9, 1, 0, 100, 80)), before);
  }
}

// ---- firewall ------------------------------------------------------------

TEST(FirewallModel, OutboundSynOpensConnection) {
  Driver d = firewall();
  ProcessResult r = d(tcp(1, 9, 1, 0), "inside");
  EXPECT_EQ(r.egress, PortName("outside"));
  EXPECT_EQ(conn_state(d, tcp(1, 9, 1, 0)), Firewall::kNew);
}

TEST(FirewallModel, UnsolicitedInboundDropped) {
  Driver d = firewall();
  ProcessResult r = d(reversed(tcp(1, 9, 1, 0)), "outside");
  EXPECT_EQ(r.effect.label, EffectLabel::kDrop);
  EXPECT_EQ(r.out.dropped, 1);
  EXPECT_FALSE(r.egress);
}

TEST(FirewallModel, HandshakeThenInboundDataForwarded) {
  Driver d = firewall();
  const Adu out = tcp(1, 9, 1, 0);
  d(out, "inside");
  d(reversed(tcp(1, 9, 1, 1)), "outside");
  EXPECT_EQ(conn_state(d, out), Firewall::kEstablished);
  ProcessResult r = d(reversed(tcp(1, 9, 0, 1)), "outside");
  EXPECT_EQ(r.egress, PortName("inside"));
  EXPECT_TRUE(r.out.cTags.has("FW", "ESTABLISHED"));
}

TEST(FirewallModel, TeardownInvalidates) {
  Driver d = firewall();
  d(tcp(1, 9, 1, 0), "inside");
  Adu rst = reversed(tcp(1, 9, 0, 0));
  rst.tcpRST = 1;
  d(rst, "outside");
  EXPECT_EQ(conn_state(d, tcp(1, 9, 1, 0)), Firewall::kInvalid);
}

TEST(FirewallModel, IdleTimeoutResetsOnlyExpiredConnections) {
  Driver d = firewall(Json::parse(R"({"idleTimeout": 5})"));
  const Adu old_conn = tcp(1, 9, 1, 0, 100);
  const Adu new_conn = tcp(1, 9, 1, 0, 101);
  d(old_conn, "inside");
  d(make_time_adu(3), "");
  d(new_conn, "inside");
  Driver without = d;
  d(make_time_adu(5), "");
  EXPECT_EQ(conn_state(d, old_conn), Firewall::kNull);
  EXPECT_EQ(conn_state(d, new_conn), Firewall::kNew);
  EXPECT_EQ(conn_state(without, old_conn), Firewall::kNew);
}

TEST(FirewallProperty, InboundForwardedOnlyOnTrackedConnection) {
  std::mt19937 rng(21);
  for (int t = 0; t < 200; ++t) {
    Driver d = firewall();
    for (int k = 0; k < 8; ++k) {
      Adu a = tcp(1, 9, rng() % 2, rng() % 2, 100, 80 + static_cast<int>(rng() % 2));
      a.tcpFIN = rng() % 4 == 0 ? 1 : 0;
      if (rng() % 2) {
        d(a, "inside");
        continue;
      }
      const int before = conn_state(d, a);
      ProcessResult r = d(reversed(a), "outside");
      if (r.egress) {
        const bool teardown = a.tcpFIN == 1;
        const bool handshake = a.tcpSYN == 1 && a.tcpACK == 1 && before == Firewall::kNew;
        ASSERT_TRUE(before == Firewall::kEstablished || handshake || (teardown && before == Firewall::kNew));
      }
    }
  }
}

// ---- NAT -----------------------------------------------------------------

TEST(NatModel, FirstAduMapsAndSetsProvenance) {
  Driver d{make_nf("N", "nat", Json::parse(R"({"publicIPs": [51]})")), {}};
  ProcessResult r = d(tcp(1, 20, 1, 0), "inside");
  EXPECT_EQ(r.effect.label, EffectLabel::kMapped);
  EXPECT_EQ(r.out.srcIP, 51);
  EXPECT_EQ(r.out.cTags.provenance, 1);
  ProcessResult again = d(tcp(1, 20, 0, 1), "inside");
  EXPECT_EQ(again.out.srcIP, r.out.srcIP);
  EXPECT_EQ(again.out.srcPort, r.out.srcPort);
}

TEST(NatModel, SharedPublicIdStaysInjective) {
  Driver d{make_nf("N", "nat", Json::parse(R"({"publicIPs": [51]})")), {}};
  std::map<std::pair<int, int>, std::pair<int, int>> mapping;
  for (int host : {1, 2}) {
    for (int port : {100, 101}) {
      ProcessResult r = d(tcp(host, 20, 1, 0, port), "inside");
      mapping[{host, port}] = {r.out.srcIP, r.out.srcPort};
    }
  }
  std::set<std::pair<int, int>> images;
  for (const auto& [k, v] : mapping) images.insert(v);
  EXPECT_EQ(images.size(), mapping.size());
}

TEST(NatModel, ReplyIsTranslatedBack) {
  Driver d{make_nf("N", "nat", Json::parse(R"({"publicIPs": [51]})")), {}};
  ProcessResult out = d(tcp(2, 20, 1, 0, 100), "inside");
  Adu reply = reversed(out.out);
  reply.tcpACK = 1;
  ProcessResult back = d(reply, "outside");
  EXPECT_EQ(back.out.dstIP, 2);
  EXPECT_EQ(back.out.dstPort, 100);
}

TEST(NatModel, PoolExhaustionDrops) {
  Driver d{make_nf("N", "nat", Json::parse(R"({"publicIPs": [51], "portsPerIP": 1})")), {}};
  d(tcp(1, 20, 1, 0, 100), "inside");
  ProcessResult r = d(tcp(1, 20, 1, 0, 101), "inside");
  EXPECT_EQ(r.out.dropped, 1);
  EXPECT_EQ(r.effect.annotations.at("poolExhausted"), 1);
}

TEST(NatModel, EmptyPoolIsConfigError) {
  EXPECT_THROW(make_nf("N", "nat", Json::parse(R"({"publicIPs": []})")), ConfigError);
}

// ---- proxy ---------------------------------------------------------------

struct ProxyRig {
  Driver d{make_nf("P", "proxy", Json::parse(R"({"ip": 10})")), {}};

  void handshake(int client) {
    d(tcp(client, 20, 1, 0), "client");
    d(reversed(tcp(client, 20, 1, 1)), "server");
    d(tcp(client, 20, 0, 1), "client");
  }
  ProcessResult get(int client, int obj) {
    Adu g = tcp(client, 20, 0, 1);
    g.httpGetObj = obj;
    return d(g, "client");
  }
  ProcessResult serve(const Adu& upstream) {
    Adu resp = upstream;
    std::swap(resp.srcIP, resp.dstIP);
    resp.httpRespObj = resp.httpGetObj;
    resp.httpGetObj = kDontCare;
    return d(resp, "server");
  }
};

TEST(ProxyModel, FirstGetGoesUpstreamAndIsCached) {
  ProxyRig p;
  p.handshake(1);
  ProcessResult miss = p.get(1, 5);
  EXPECT_EQ(miss.effect.label, EffectLabel::kMiss);
  EXPECT_EQ(miss.egress, PortName("server"));
  EXPECT_EQ(miss.out.srcIP, 10);
  EXPECT_TRUE(miss.out.cTags.has("P", "MISS"));
  ProcessResult back = p.serve(miss.out);
  EXPECT_EQ(back.out.dstIP, 1);
  EXPECT_EQ(back.egress, PortName("client"));
  EXPECT_TRUE(back.out.cTags.has("P", "MISS"));
}

TEST(ProxyModel, SecondGetFromAnotherClientHits) {
  ProxyRig p;
  p.handshake(1);
  p.serve(p.get(1, 5).out);
  p.handshake(2);
  ProcessResult hit = p.get(2, 5);
  EXPECT_EQ(hit.effect.label, EffectLabel::kHit);
  EXPECT_EQ(hit.egress, PortName("client"));
  EXPECT_EQ(hit.out.httpRespObj, 5);
  EXPECT_TRUE(hit.out.cTags.has("P", "HIT"));
}

TEST(ProxyModel, EvictedObjectMissesAgain) {
  ProxyRig p;
  p.handshake(1);
  p.serve(p.get(1, 5).out);
  evict(static_cast<const Proxy&>(*p.d.nf), p.d.store, 5);
  EXPECT_EQ(p.get(1, 5).effect.label, EffectLabel::kMiss);
}

TEST(ProxyModel, GetWithoutConnectionDropped) {
  ProxyRig p;
  ProcessResult r = p.get(1, 5);
  EXPECT_EQ(r.out.dropped, 1);
}

// ---- L-IPS / H-IPS -------------------------------------------------------

Driver lips(Json cfg) { return {make_nf("L", "lips", cfg), {}}; }

TEST(LipsModel, AlarmAtThreshold) {
  Driver d = lips(Json::parse(R"({"inside": "in", "outside": "out", "threshold": 3})"));
  EXPECT_EQ(d(tcp(1, 31, 1, 0), "in").effect.label, EffectLabel::kOk);
  EXPECT_EQ(d(tcp(1, 32, 1, 0), "in").effect.label, EffectLabel::kOk);
  ProcessResult third = d(tcp(1, 33, 1, 0), "in");
  EXPECT_EQ(third.effect.label, EffectLabel::kAlarm);
  EXPECT_TRUE(third.out.cTags.has("L", "ALARM"));
  // Alarmed hosts stay alarmed.
  EXPECT_EQ(d(tcp(1, 31, 0, 1), "in").effect.label, EffectLabel::kAlarm);
}

TEST(LipsModel, RepeatedDestinationCountedOnce) {
  Driver d = lips(Json::parse(R"({"inside": "in", "outside": "out", "threshold": 2})"));
  d(tcp(1, 31, 1, 0), "in");
  ProcessResult r = d(tcp(1, 31, 1, 0), "in");
  EXPECT_EQ(r.effect.label, EffectLabel::kOk);
  EXPECT_EQ(r.effect.annotations.at("count"), 1);
}

TEST(LipsModel, InboundResetCountsAsFailure) {
  Driver d = lips(Json::parse(R"({"inside": "in", "outside": "out", "threshold": 1})"));
  Adu rst = reversed(tcp(1, 31, 0, 0));
  rst.tcpRST = 1;
  d(rst, "out");
  EXPECT_EQ(d(tcp(1, 32, 0, 1), "in").effect.label, EffectLabel::kAlarm);
}

TEST(LipsModel, SummingHostsTripsOnTheWrongHost) {
  const auto cfg = Json::parse(R"({"inside": "in", "outside": "out", "threshold": 3})");
  Json faulted = cfg;
  faulted["aggregateGroup"] = 3;
  Driver good = lips(cfg), bad = lips(faulted);
  for (int dst = 31; dst < 40; ++dst) {
    good(tcp(1, dst, 1, 0), "in");
    bad(tcp(1, dst, 1, 0), "in");
  }
  // A single scan by the second host.
  EXPECT_EQ(good(tcp(2, 31, 1, 0), "in").effect.label, EffectLabel::kOk);
  EXPECT_EQ(bad(tcp(2, 31, 1, 0), "in").effect.label, EffectLabel::kAlarm);
}

TEST(LipsModel, RequireContextGatesCounting) {
  Driver d = lips(Json::parse(
      R"({"inside": "in", "outside": "out", "threshold": 1, "requireContext": {"nf": "L0", "token": "ALARM"}})"));
  EXPECT_EQ(d(tcp(1, 31, 1, 0), "in").effect.label, EffectLabel::kOk);
  EXPECT_EQ(d(set_context(tcp(1, 32, 1, 0), "L0", "ALARM"), "in").effect.label, EffectLabel::kAlarm);
}

TEST(LipsModel, InvalidThresholdRejected) {
  EXPECT_THROW(lips(Json::parse(R"({"threshold": 0})")), ConfigError);
}

Driver hips() {
  return {make_nf("H", "hips", Json::parse(R"({"badSignatures": [7], "requireFrom": "L"})")), {}};
}

TEST(HipsModel, AlarmedBadSignatureBlocked) {
  Driver d = hips();
  Adu a = set_context(tcp(1, 31, 0, 1), "L", "ALARM");
  a.payloadSig = 7;
  ProcessResult r = d(a, "in");
  EXPECT_EQ(r.effect.label, EffectLabel::kAlarm);
  EXPECT_EQ(r.out.dropped, 1);
  EXPECT_EQ(r.effect.annotations.count("contractViolation"), 0u);
}

TEST(HipsModel, AlarmedCleanPayloadForwarded) {
  Driver d = hips();
  Adu a = set_context(tcp(1, 31, 0, 1), "L", "ALARM");
  a.payloadSig = 3;
  ProcessResult r = d(a, "in");
  EXPECT_EQ(r.effect.label, EffectLabel::kOk);
  EXPECT_EQ(r.egress, PortName("out"));
}

TEST(HipsModel, UnalarmedArrivalAnnotated) {
  Driver d = hips();
  ProcessResult r = d(tcp(1, 31, 0, 1), "in");
  EXPECT_EQ(r.effect.annotations.at("contractViolation"), 1);
  EXPECT_EQ(r.egress, PortName("out"));
}

// ---- switch / monitor / lb / auth -----------------------------------------

TEST(SwitchModel, ContextRuleSteersAlarmedTraffic) {
  auto sw = make_nf("S", "switch", Json::parse(R"({"rules": [
      {"match": {"cTags": {"perNF": {"L": ["ALARM"]}}}, "out": "heavy"},
      {"out": "light"}]})"));
  EXPECT_EQ(process(*sw, {}, set_context(tcp(1, 31, 1, 0), "L", "ALARM"), "x").egress, PortName("heavy"));
  EXPECT_EQ(process(*sw, {}, tcp(1, 31, 1, 0), "x").egress, PortName("light"));
}

TEST(SwitchModel, MissingRuleDrops) {
  auto sw = make_nf("S", "switch", Json::parse(R"({"rules": [{"match": {"dstIP": 9}, "out": "a"}]})"));
  ProcessResult r = process(*sw, {}, tcp(1, 8, 1, 0), "x");
  EXPECT_EQ(r.out.dropped, 1);
  EXPECT_EQ(r.effect.annotations.at("noRule"), 1);
}

TEST(SwitchModel, RuleWithoutOutRejected) {
  EXPECT_THROW(make_nf("S", "switch", Json::parse(R"({"rules": [{"match": {}}]})")), ConfigError);
}

TEST(MonitorModel, WatchedObjectToWatchedHostDropped) {
  auto m = make_nf("M", "monitor", Json::parse(R"({"watch": [{"object": 1, "host": 2}]})"));
  Adu resp = tcp(20, 2, 0, 1);
  resp.httpRespObj = 1;
  EXPECT_EQ(process(*m, {}, resp, "p0").out.dropped, 1);
  resp.dstIP = 1;
  EXPECT_EQ(process(*m, {}, resp, "p0").effect.label, EffectLabel::kOk);
  // Provenance wins over the rewritten destination.
  resp.dstIP = 10;
  EXPECT_EQ(process(*m, {}, set_provenance(resp, 2), "p0").out.dropped, 1);
}

TEST(MonitorModel, NonHttpPassesUntouched) {
  auto m = make_nf("M", "monitor", Json::parse(R"({"watch": [{"object": 1, "host": 2}]})"));
  Adu a = tcp(20, 2, 1, 0);
  ProcessResult r = process(*m, {}, a, "p0");
  EXPECT_EQ(r.out, a);
  EXPECT_EQ(r.egress, PortName("p0"));
}

// Independent FNV-1a over "src,sport,dst,dport,proto".
std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TEST(LbModel, BackendFollowsHashOracle) {
  const std::vector<int> backends{41, 42, 43};
  auto lb = make_nf("B", "lb", Json{{"backends", backends}});
  for (int src = 1; src <= 4; ++src) {
    for (int sport = 100; sport < 110; ++sport) {
      Adu a = tcp(src, 40, 1, 0, sport, 80);
      const std::string key = std::to_string(src) + "," + std::to_string(sport) + ",40,80,6";
      EXPECT_EQ(process(*lb, {}, a, "in").out.dstIP, backends[fnv(key) % backends.size()]);
    }
  }
}

TEST(LbModel, FlowStaysPinned) {
  Driver d{make_nf("B", "lb", Json::parse(R"({"backends": [41, 42]})")), {}};
  const int first = d(tcp(1, 40, 1, 0), "in").out.dstIP;
  EXPECT_EQ(d(tcp(1, 40, 0, 1), "in").out.dstIP, first);
}

TEST(LbModel, NoBackendsRejected) {
  EXPECT_THROW(make_nf("B", "lb", Json::parse(R"({"backends": []})")), ConfigError);
}

TEST(AuthModel, LockoutAfterLimit) {
  Driver d{make_nf("A", "auth", Json::parse(R"({"limit": 3, "correctSig": 1})")), {}};
  Adu wrong = tcp(1, 20, 0, 1);
  wrong.payloadSig = 0;
  EXPECT_TRUE(d(wrong, "client").out.cTags.has("A", "LOGIN_FAIL"));
  d(wrong, "client");
  ProcessResult third = d(wrong, "client");
  EXPECT_TRUE(third.out.cTags.has("A", "BLOCKED"));
  Adu right = wrong;
  right.payloadSig = 1;
  EXPECT_TRUE(d(right, "client").out.cTags.has("A", "BLOCKED"));
}

TEST(AuthModel, CorrectLoginResetsFailures) {
  Driver d{make_nf("A", "auth", Json::parse(R"({"limit": 2, "correctSig": 1})")), {}};
  Adu wrong = tcp(1, 20, 0, 1);
  wrong.payloadSig = 0;
  Adu right = wrong;
  right.payloadSig = 1;
  d(wrong, "client");
  ProcessResult ok = d(right, "client");
  EXPECT_EQ(ok.egress, PortName("server"));
  EXPECT_TRUE(ok.out.cTags.has("A", "AUTH_OK"));
  EXPECT_FALSE(d(wrong, "client").out.cTags.has("A", "BLOCKED"));
}

TEST(Library, UnknownTypeRejected) {
  EXPECT_THROW(make_nf("X", "teleporter", Json::object()), ConfigError);
}

}  // namespace
}  // namespace adutest
