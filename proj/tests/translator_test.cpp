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

#include <adutest/translator.hpp>

#include <gtest/gtest.h>

#include <random>

namespace adutest {
namespace {

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

std::string host(int ip) { return "H" + std::to_string(ip); }

Plan plan_of(const std::vector<Adu>& adus) {
  Plan p;
  for (std::size_t i = 0; i < adus.size(); ++i) {
    Adu a = adus[i];
    a.aduId = static_cast<int>(i) + 1;
    if (a.is_time()) a.tick = a.aduId;
    p.steps.push_back({a.is_time() ? std::string{} : host(a.srcIP), a});
  }
  return p;
}

std::vector<std::string> names(const std::vector<PrimitiveCall>& calls) {
  std::vector<std::string> n;
  for (const auto& c : calls) n.push_back(c.name);
  return n;
}

std::vector<std::string> single_script(const std::vector<Adu>& adus) {
  auto scripts = build_scripts(plan_of(adus));
  EXPECT_EQ(scripts.size(), 1u);
  return names(scripts.front().steps);
}

TEST(Partition, UnorderedEndpointPairs) {
  Plan p = plan_of({tcp(1, 20, 1, 0), tcp(2, 20, 1, 0), tcp(20, 1, 1, 1), make_time_adu(0), tcp(1, 20, 0, 1)});
  auto parts = partition(p);
  ASSERT_EQ(parts.size(), 3u);
  std::vector<int> seqs;
  for (const auto& s : parts.at("1-20")) seqs.push_back(s.seq);
  EXPECT_EQ(seqs, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(parts.at("2-20").size(), 1u);
  EXPECT_EQ(parts.at(kClockPartition).front().seq, 4);
}

TEST(Translate, PrimitiveRoster) {
  EXPECT_EQ(primitive_names().size(), 11u);
  EXPECT_EQ(primitive_names().back(), "waitTicks");
}

TEST(Translate, TransportPrimitives) {
  EXPECT_EQ(single_script({tcp(1, 20, 1, 0), tcp(20, 1, 1, 1), tcp(1, 20, 0, 1)}),
            (std::vector<std::string>{"establishTCP"}));
  Adu rst = tcp(31, 1, 0, 0);
  rst.tcpRST = 1;
  EXPECT_EQ(single_script({tcp(1, 31, 1, 0), rst}), (std::vector<std::string>{"failedConnect"}));
  EXPECT_EQ(single_script({tcp(1, 31, 1, 0)}), (std::vector<std::string>{"sendTCPSyn"}));
  Adu fin = tcp(1, 20, 0, 1);
  fin.tcpFIN = 1;
  Adu fin_back = tcp(20, 1, 0, 1);
  fin_back.tcpFIN = 1;
  EXPECT_EQ(single_script({fin, fin_back}), (std::vector<std::string>{"closeTCP"}));
  Adu udp;
  udp.srcIP = 1;
  udp.dstIP = 20;
  udp.proto = 17;
  EXPECT_EQ(single_script({udp}), (std::vector<std::string>{"sendUDP"}));
}

TEST(Translate, ApplicationPrimitives) {
  Adu get = tcp(1, 20, 0, 1);
  get.httpGetObj = 2;
  EXPECT_EQ(single_script({get}), (std::vector<std::string>{"getHTTP"}));
  get.dstPort = 21;
  EXPECT_EQ(single_script({get}), (std::vector<std::string>{"getFTP"}));
  Adu sig = tcp(1, 31, 0, 1);
  sig.payloadSig = 7;
  EXPECT_EQ(single_script({sig}), (std::vector<std::string>{"sendPayloadSig"}));
}

TEST(Translate, FallbackAndClock) {
  Adu icmp;
  icmp.srcIP = 1;
  icmp.dstIP = 9;
  icmp.proto = 1;
  EXPECT_EQ(single_script({icmp}), (std::vector<std::string>{"sendIPPacket"}));
  auto scripts = build_scripts(plan_of({make_time_adu(0), make_time_adu(0)}));
  ASSERT_EQ(scripts.size(), 1u);
  EXPECT_EQ(scripts[0].injector, kClockPartition);
  ASSERT_EQ(scripts[0].steps.size(), 1u);
  EXPECT_EQ(scripts[0].steps[0].name, "waitTicks");
  EXPECT_EQ(scripts[0].steps[0].params.at("ticks"), 2);
}

TEST(Translate, GetEventsIndependentOfObject) {
  for (int obj : {1, 2, 3}) {
    Adu get = tcp(1, 20, 0, 1);
    get.httpGetObj = obj;
    auto ev = expand(build_scripts(plan_of({get})));
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].kind, WireEvent::Kind::kInject);
    EXPECT_EQ(ev[1].kind, WireEvent::Kind::kAwaitResponse);
    EXPECT_EQ(ev[1].object, obj);
  }
}

// Random plans over a small field pool; expansion must reproduce every
// planned ADU at its position and source.
TEST(TranslateProperty, ExpansionReproducesPlan) {
  std::mt19937 rng(17);
  auto pick = [&](std::initializer_list<int> v) { return *(v.begin() + rng() % v.size()); };
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<Adu> adus;
    const int len = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < len; ++i) {
      if (rng() % 8 == 0) {
        adus.push_back(make_time_adu(0));
        continue;
      }
      Adu a;
      a.srcIP = pick({1, 2, 20});
      a.dstIP = pick({1, 2, 20, 31});
      a.proto = pick({6, 6, 6, 17, 1});
      a.tcpSYN = pick({kDontCare, 0, 1});
      a.tcpACK = pick({kDontCare, 0, 1});
      a.tcpRST = pick({kDontCare, 0, 1});
      a.tcpFIN = pick({kDontCare, 0, 1});
      a.httpGetObj = pick({kDontCare, kDontCare, 1, 2});
      a.payloadSig = pick({kDontCare, kDontCare, 7});
      a.dstPort = pick({kDontCare, 80, 21});
      adus.push_back(a);
    }
    Plan p = plan_of(adus);
    auto scripts = build_scripts(p);
    std::vector<WireEvent> injects;
    for (const auto& e : expand(scripts)) {
      if (e.kind == WireEvent::Kind::kInject) injects.push_back(e);
    }
    ASSERT_EQ(injects.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      ASSERT_EQ(injects[i].seq, static_cast<int>(i) + 1);
      ASSERT_EQ(injects[i].source, p.steps[i].source);
      ASSERT_EQ(injects[i].adu, p.steps[i].adu) << to_json(p.steps[i].adu).dump();
    }
    for (const auto& s : scripts) {
      for (const auto& c : s.steps) {
        ASSERT_NE(std::find(primitive_names().begin(), primitive_names().end(), c.name), primitive_names().end());
      }
    }
  }
}

TEST(ScriptJson, RoundTrip) {
  Adu get = tcp(1, 20, 0, 1);
  get.httpGetObj = 1;
  Plan p = plan_of({tcp(1, 20, 1, 0), tcp(20, 1, 1, 1), tcp(1, 20, 0, 1), get, make_time_adu(0)});
  for (const auto& s : build_scripts(p)) {
    Json j = to_json(s);
    EXPECT_EQ(to_json(script_from_json(j)).dump(), j.dump());
  }
}

TEST(Expand, RejectsMalformedScripts) {
  TestScript s{"H1", {{"teleport", Json::object(), {1}, {"H1"}}}};
  EXPECT_THROW(expand({s}), ConfigError);
  s.steps[0] = {"establishTCP", params_of(tcp(1, 20, 1, 0)), {1, 2}, {"H1", "SRV"}};
  EXPECT_THROW(expand({s}), ContractViolation);
  s.steps[0] = {"waitTicks", Json{{"ticks", 3}}, {1}, {""}};
  EXPECT_THROW(expand({s}), ContractViolation);
}

}  // namespace
}  // namespace adutest
