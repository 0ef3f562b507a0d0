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

// Concrete FSM-ensemble models: end hosts, switches and the stateful
// middleboxes (firewall, NAT, proxy, light/heavy IPS, monitor, load
// balancer, authentication gateway).

#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/nf.hpp"

namespace adutest {

namespace detail {

inline int cfg_int(const Json& j, std::string_view key, int def) {
  auto it = j.find(std::string(key));
  if (it == j.end()) return def;
  if (!it->is_number_integer()) throw ConfigError("config key " + std::string(key) + " must be an integer");
  return it->get<int>();
}

inline int cfg_int_required(const Json& j, std::string_view key) {
  if (!j.contains(std::string(key))) throw ConfigError("missing config key: " + std::string(key));
  return cfg_int(j, key, 0);
}

inline std::string cfg_str(const Json& j, std::string_view key, std::string def) {
  auto it = j.find(std::string(key));
  if (it == j.end()) return def;
  if (!it->is_string()) throw ConfigError("config key " + std::string(key) + " must be a string");
  return it->get<std::string>();
}

inline std::vector<int> cfg_ints(const Json& j, std::string_view key) {
  std::vector<int> out;
  auto it = j.find(std::string(key));
  if (it == j.end()) return out;
  if (!it->is_array()) throw ConfigError("config key " + std::string(key) + " must be an array");
  for (const auto& v : *it) out.push_back(v.get<int>());
  return out;
}

inline std::vector<Adu> cfg_patterns(const Json& j, std::string_view key) {
  std::vector<Adu> out;
  auto it = j.find(std::string(key));
  if (it == j.end()) return out;
  for (const auto& p : *it) out.push_back(adu_from_json(p));
  return out;
}

inline bool any_match(const Adu& a, const std::vector<Adu>& patterns) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const Adu& p) { return matches(a, p); });
}

inline std::string conn_unit(int inHost, int inPort, int outHost, int outPort, int proto) {
  return std::to_string(inHost) + ":" + std::to_string(inPort) + "-" + std::to_string(outHost) +
         ":" + std::to_string(outPort) + "/" + std::to_string(proto);
}

// Turns a request into the reply travelling the opposite way.
inline Adu reply_to(Adu a) {
  std::swap(a.srcIP, a.dstIP);
  std::swap(a.srcPort, a.dstPort);
  return a;
}

inline bool any_token(const Adu& a, std::string_view tok) {
  for (const auto& [nf, toks] : a.cTags.per_nf()) {
    if (toks.count(std::string(tok)) > 0) return true;
  }
  return false;
}

}  // namespace detail

// End host. A sink for everything except HTTP requests addressed to a host
// configured as a web server, which are answered on the arrival port; the
// request/response exchange stays one aggregated ADU.
class Host final : public NetworkFunction {
 public:
  Host(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    ip_ = detail::cfg_int_required(this->config(), "ip");
    http_server_ = this->config().value("httpServer", false);
    objects_ = detail::cfg_ints(this->config(), "objects");
    object_size_ = detail::cfg_int(this->config(), "objectSize", 1);
  }

  std::string_view type() const override { return "host"; }
  bool stateful() const override { return false; }
  int ip() const { return ip_; }
  bool http_server() const { return http_server_; }
  const std::vector<int>& objects() const { return objects_; }

  Step step(NfState&, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    bool serves = objects_.empty() ||
                  std::find(objects_.begin(), objects_.end(), in.httpGetObj) != objects_.end();
    if (http_server_ && in.is_http_request() && in.dstIP == ip_ && serves && !ingress.empty()) {
      Adu out = detail::reply_to(in);
      out.httpRespObj = in.httpGetObj;
      out.httpGetObj = kDontCare;
      return make_step(std::move(out), ingress, EffectLabel::kRespond,
                       {{"object", in.httpGetObj}, {"size", object_size_}});
    }
    return make_step(in, std::nullopt, EffectLabel::kOk, {{"delivered", 1}});
  }

 private:
  int ip_ = kDontCare;
  bool http_server_ = false;
  std::vector<int> objects_;
  int object_size_ = 1;
};

// Stateless first-match forwarding table.
class Switch final : public NetworkFunction {
 public:
  struct Rule {
    std::string name;
    Adu match;
    std::optional<PortName> in_port;
    PortName out;
  };

  Switch(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    if (c.contains("rules")) {
      int i = 0;
      for (const auto& r : c.at("rules")) {
        Rule rule;
        rule.name = detail::cfg_str(r, "name", "r" + std::to_string(i));
        rule.match = r.contains("match") ? adu_from_json(r.at("match")) : Adu{};
        if (r.contains("inPort")) rule.in_port = r.at("inPort").get<std::string>();
        if (!r.contains("out")) throw ConfigError("switch rule without out port in " + this->id());
        rule.out = r.at("out").get<std::string>();
        rules_.push_back(std::move(rule));
        ++i;
      }
    }
    if (c.contains("default")) default_ = c.at("default").get<std::string>();
  }

  std::string_view type() const override { return "switch"; }
  bool stateful() const override { return false; }
  const std::vector<Rule>& rules() const { return rules_; }

  std::vector<std::string_view> relevant_fields() const override {
    std::vector<std::string_view> out;
    for (const auto& r : rules_) {
      for (const auto& f : kAduFields) {
        if (r.match.*f.member != kDontCare) out.push_back(f.name);
      }
    }
    return out;
  }

  Step step(NfState&, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    for (const auto& r : rules_) {
      if (r.in_port && *r.in_port != ingress) continue;
      if (matches(in, r.match)) return make_step(in, r.out, EffectLabel::kForward);
    }
    if (default_) return make_step(in, *default_, EffectLabel::kForward);
    return drop(in, EffectLabel::kDrop, {{"noRule", 1}});
  }

 private:
  std::vector<Rule> rules_;
  std::optional<PortName> default_;
};

// Reflexive stateful firewall: one 4-state FSM per connection.
class Firewall final : public NetworkFunction {
 public:
  enum ConnState : int { kNull = 0, kNew = 1, kEstablished = 2, kInvalid = 3 };
  static constexpr std::string_view kConnTask = "connTrack";
  static constexpr std::string_view kSeenTask = "lastSeen";
  static constexpr std::string_view kClockTask = "clock";

  Firewall(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    inside_ = detail::cfg_str(c, "inside", "inside");
    outside_ = detail::cfg_str(c, "outside", "outside");
    allow_inbound_ = detail::cfg_patterns(c, "allowInbound");
    deny_ = detail::cfg_patterns(c, "deny");
    idle_timeout_ = detail::cfg_int(c, "idleTimeout", 0);
  }

  std::string_view type() const override { return "firewall"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "proto", "srcPort", "dstPort", "tcpSYN", "tcpACK", "tcpFIN", "tcpRST"};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kEstablished}; }

  // Connection unit as seen from the inside host.
  static std::string unit_for(const Adu& a, bool outbound) {
    return outbound ? detail::conn_unit(a.srcIP, a.srcPort, a.dstIP, a.dstPort, a.proto)
                    : detail::conn_unit(a.dstIP, a.dstPort, a.srcIP, a.srcPort, a.proto);
  }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return on_tick(st, in);
    bool outbound;
    if (ingress == inside_) {
      outbound = true;
    } else if (ingress == outside_) {
      outbound = false;
    } else {
      throw TopologyError("firewall " + id() + " received ADU on unknown port '" + ingress + "'");
    }
    if (detail::any_match(in, deny_)) return drop(in, EffectLabel::kDrop, {{"denied", 1}});

    const std::string unit = unit_for(in, outbound);
    const int state = st.get(kConnTask, unit, kNull);
    const int now = st.get(kClockTask, "", 0);
    const bool teardown = in.tcpRST == 1 || in.tcpFIN == 1;
    const PortName& egress = outbound ? outside_ : inside_;

    auto forward = [&](int next, Adu out) {
      if (next != state) st.set(kConnTask, unit, next);
      if (next != kNull && idle_timeout_ > 0) st.set(kSeenTask, unit, now);
      return make_step(std::move(out), egress, EffectLabel::kOk, {{"conn", next}});
    };

    if (outbound) {
      if (teardown) return forward(state == kNull ? kNull : kInvalid, in);
      if (in.is_syn() && (state == kNull || state == kInvalid)) return forward(kNew, in);
      if (in.is_synack() && state == kNew) return forward(kEstablished, in);
      return forward(state, in);
    }
    // Inbound: only replies on tracked connections get through.
    if (teardown) {
      if (state == kNew || state == kEstablished) return forward(kInvalid, in);
      return drop(in, EffectLabel::kDrop, {{"conn", state}});
    }
    if (state == kEstablished) return forward(kEstablished, set_context(in, id(), token::kEstablished));
    if (state == kNew && in.is_synack()) {
      return forward(kEstablished, set_context(in, id(), token::kEstablished));
    }
    if (in.is_syn() && (state == kNull || state == kInvalid) && detail::any_match(in, allow_inbound_)) {
      return forward(kNew, in);
    }
    return drop(in, EffectLabel::kDrop, {{"conn", state}, {"unsolicited", 1}});
  }

 private:
  Step on_tick(NfState& st, const Adu& in) const {
    st.set(kClockTask, "", in.tick);
    if (idle_timeout_ > 0) {
      for (const auto& [key, seen] : st.entries(kSeenTask)) {
        if (in.tick - seen >= idle_timeout_) {
          st.erase(kConnTask, key.unit);
          st.erase(kSeenTask, key.unit);
        }
      }
    }
    return make_step(in, std::nullopt, EffectLabel::kOk);
  }

  PortName inside_, outside_;
  std::vector<Adu> allow_inbound_, deny_;
  int idle_timeout_ = 0;
};

// Source NAT with first-use allocation from a public id pool.
class Nat final : public NetworkFunction {
 public:
  static constexpr std::string_view kMapIp = "mapIP";
  static constexpr std::string_view kMapPort = "mapPort";
  static constexpr std::string_view kRevIp = "revIP";
  static constexpr std::string_view kRevPort = "revPort";
  static constexpr std::string_view kNext = "alloc";

  Nat(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    inside_ = detail::cfg_str(c, "inside", "inside");
    outside_ = detail::cfg_str(c, "outside", "outside");
    pool_ = detail::cfg_ints(c, "publicIPs");
    port_base_ = detail::cfg_int(c, "portBase", 1);
    ports_per_ip_ = detail::cfg_int(c, "portsPerIP", 1000);
    if (pool_.empty()) throw ConfigError("NAT " + this->id() + " has an empty public pool");
  }

  std::string_view type() const override { return "nat"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "srcPort", "dstPort"};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kNatMapped}; }

  static std::string session(int ip, int port) {
    return std::to_string(ip) + ":" + std::to_string(port);
  }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    if (ingress == inside_) return outbound(st, in);
    if (ingress == outside_) return inbound(st, in);
    throw TopologyError("NAT " + id() + " received ADU on unknown port '" + ingress + "'");
  }

 private:
  Step outbound(NfState& st, const Adu& in) const {
    const std::string key = session(in.srcIP, in.srcPort);
    int pub_ip, pub_port;
    if (st.has(kMapIp, key)) {
      pub_ip = st.get(kMapIp, key, 0);
      pub_port = st.get(kMapPort, key, 0);
    } else {
      const int n = st.get(kNext, "", 0);
      const int size = static_cast<int>(pool_.size());
      if (n >= size * ports_per_ip_) {
        return drop(in, EffectLabel::kDrop, {{"poolExhausted", 1}});
      }
      pub_ip = pool_[n % size];
      pub_port = port_base_ + n / size;
      st.set(kNext, "", n + 1);
      st.set(kMapIp, key, pub_ip);
      st.set(kMapPort, key, pub_port);
      const std::string rev = session(pub_ip, pub_port);
      st.set(kRevIp, rev, in.srcIP);
      st.set(kRevPort, rev, in.srcPort);
    }
    Adu out = set_provenance(in, in.srcIP);
    out.srcIP = pub_ip;
    out.srcPort = pub_port;
    out = set_context(std::move(out), id(), token::kNatMapped);
    return make_step(std::move(out), outside_, EffectLabel::kMapped,
                     {{"host", in.srcIP}, {"publicIP", pub_ip}, {"publicPort", pub_port}});
  }

  Step inbound(NfState& st, const Adu& in) const {
    std::optional<std::string> rev;
    if (in.dstPort != kDontCare) {
      std::string k = session(in.dstIP, in.dstPort);
      if (st.has(kRevIp, k)) rev = k;
    } else {
      // Port-less reply: take the lowest session on that public id.
      for (const auto& [key, host] : st.entries(kRevIp)) {
        if (key.unit.rfind(std::to_string(in.dstIP) + ":", 0) == 0) {
          rev = key.unit;
          break;
        }
      }
    }
    if (!rev) return drop(in, EffectLabel::kDrop, {{"noMapping", 1}});
    Adu out = in;
    out.dstIP = st.get(kRevIp, *rev, kDontCare);
    out.dstPort = st.get(kRevPort, *rev, kDontCare);
    return make_step(std::move(out), inside_, EffectLabel::kForward);
  }

  PortName inside_, outside_;
  std::vector<int> pool_;
  int port_base_ = 1;
  int ports_per_ip_ = 1000;
};

// Transparent caching web proxy: per-connection client TCP tracking,
// per-server upstream connection, per-object cache entry.
class Proxy final : public NetworkFunction {
 public:
  enum ClientTcp : int { kNull = 0, kSynSeen = 1, kSynAckSeen = 2, kEstablished = 3 };
  static constexpr std::string_view kClientTask = "clientTCP";
  static constexpr std::string_view kServerTask = "serverTCP";
  static constexpr std::string_view kCacheTask = "cache";

  Proxy(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    ip_ = detail::cfg_int_required(c, "ip");
    client_ = detail::cfg_str(c, "client", "client");
    server_ = detail::cfg_str(c, "server", "server");
    preload_ = detail::cfg_ints(c, "preload");
  }

  std::string_view type() const override { return "proxy"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "tcpSYN", "tcpACK", "httpGetObj"};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kHit, token::kMiss}; }
  int ip() const { return ip_; }

  static std::string client_unit(int client, int server) {
    return std::to_string(client) + "-" + std::to_string(server);
  }

  bool cached(const NfState& st, int obj) const {
    const bool pre = std::find(preload_.begin(), preload_.end(), obj) != preload_.end();
    return st.get(kCacheTask, std::to_string(obj), pre ? 1 : 0) == 1;
  }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    if (ingress == client_) return from_client(st, in);
    if (ingress == server_) return from_server(st, in);
    throw TopologyError("proxy " + id() + " received ADU on unknown port '" + ingress + "'");
  }

 private:
  Step from_client(NfState& st, const Adu& in) const {
    const std::string conn = client_unit(in.srcIP, in.dstIP);
    const int cs = st.get(kClientTask, conn, kNull);
    if (in.is_http_request()) {
      if (cs != kEstablished) return drop(in, EffectLabel::kDrop, {{"noClientConn", 1}});
      const int obj = in.httpGetObj;
      if (cached(st, obj)) {
        Adu out = detail::reply_to(set_provenance(in, in.srcIP));
        out.httpRespObj = obj;
        out.httpGetObj = kDontCare;
        out = set_context(std::move(out), id(), token::kHit);
        return make_step(std::move(out), client_, EffectLabel::kHit,
                         {{"object", obj}, {"host", in.srcIP}});
      }
      const std::string srv = std::to_string(in.dstIP);
      const int had_conn = st.get(kServerTask, srv, 0);
      if (had_conn == 0) st.set(kServerTask, srv, 1);
      Adu out = set_provenance(in, in.srcIP);
      out.srcIP = ip_;
      out = set_context(std::move(out), id(), token::kMiss);
      return make_step(std::move(out), server_, EffectLabel::kMiss,
                       {{"object", obj}, {"host", in.srcIP}, {"newServerConn", had_conn == 0}});
    }
    if (in.tcpRST == 1 || in.tcpFIN == 1) {
      st.erase(kClientTask, conn);
    } else if (in.is_syn()) {
      st.set(kClientTask, conn, kSynSeen);
    } else if (in.tcpACK == 1 && in.tcpSYN != 1 && cs == kSynAckSeen) {
      st.set(kClientTask, conn, kEstablished);
    }
    return make_step(in, server_, EffectLabel::kForward);
  }

  Step from_server(NfState& st, const Adu& in) const {
    if (in.is_http_response() && in.dstIP == ip_) {
      st.set(kCacheTask, std::to_string(in.httpRespObj), 1);
      Adu out = in;
      out.dstIP = in.cTags.provenance;
      return make_step(std::move(out), client_, EffectLabel::kRespond,
                       {{"object", in.httpRespObj}, {"host", in.cTags.provenance}});
    }
    const std::string conn = client_unit(in.dstIP, in.srcIP);
    if (in.tcpRST == 1 || in.tcpFIN == 1) {
      st.erase(kClientTask, conn);
    } else if (in.is_synack() && st.get(kClientTask, conn, kNull) == kSynSeen) {
      st.set(kClientTask, conn, kSynAckSeen);
    }
    return make_step(in, client_, EffectLabel::kForward);
  }

  int ip_ = kDontCare;
  PortName client_, server_;
  std::vector<int> preload_;
};

// Removes one object from a proxy's cache.
inline void evict(const Proxy& proxy, StateStore& store, int obj) {
  NfState st(store, proxy.id());
  st.set(Proxy::kCacheTask, std::to_string(obj), 0);
}

// Light IPS: counts scan attempts (SYNs to first-time destinations, and
// resets from first-time remotes) per host and flags the host at threshold.
class LightIps final : public NetworkFunction {
 public:
  static constexpr std::string_view kCountTask = "hostCounter";
  static constexpr std::string_view kSeenTask = "seenDst";
  static constexpr std::string_view kAlarmTask = "alarm";

  LightIps(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    inside_ = detail::cfg_str(c, "inside", "inside");
    outside_ = detail::cfg_str(c, "outside", "outside");
    threshold_ = detail::cfg_int(c, "threshold", 3);
    aggregate_ = detail::cfg_int(c, "aggregateGroup", 1);
    if (c.contains("requireContext")) {
      const Json& r = c.at("requireContext");
      require_ = std::make_pair(r.at("nf").get<std::string>(), r.at("token").get<std::string>());
    }
    if (threshold_ < 1) throw ConfigError("L-IPS threshold must be >= 1");
    if (aggregate_ < 1) throw ConfigError("L-IPS aggregateGroup must be >= 1");
  }

  std::string_view type() const override { return "lips"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "tcpSYN", "tcpACK"};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kAlarm}; }
  int threshold() const { return threshold_; }

  bool alarmed(const NfState& st, int host) const {
    return st.get(kAlarmTask, std::to_string(host), 0) == 1;
  }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    bool outbound;
    if (ingress == inside_) {
      outbound = true;
    } else if (ingress == outside_) {
      outbound = false;
    } else {
      throw TopologyError("L-IPS " + id() + " received ADU on unknown port '" + ingress + "'");
    }
    const int host = outbound ? in.srcIP : in.dstIP;
    const int remote = outbound ? in.dstIP : in.srcIP;
    const bool eligible = !require_ || in.cTags.has(require_->first, require_->second);
    const bool attempt = outbound ? in.is_syn() : in.tcpRST == 1;
    int count = st.get(kCountTask, counter_unit(host), 0);
    if (attempt && eligible && !(aggregate_ == 1 && alarmed(st, host))) {
      const std::string seen = std::to_string(host) + ">" + std::to_string(remote);
      if (!st.has(kSeenTask, seen)) {
        st.set(kSeenTask, seen, 1);
        st.set(kCountTask, counter_unit(host), ++count);
      }
    }
    if (count >= threshold_ * aggregate_ && !alarmed(st, host)) {
      st.set(kAlarmTask, std::to_string(host), 1);
      // Per-host counters are dead once the host is flagged.
      if (aggregate_ == 1) forget(st, host);
    }
    const PortName& egress = outbound ? outside_ : inside_;
    if (outbound && alarmed(st, host)) {
      return make_step(set_context(in, id(), token::kAlarm), egress, EffectLabel::kAlarm,
                       {{"host", host}, {"count", count}});
    }
    return make_step(in, egress, EffectLabel::kOk, {{"host", host}, {"count", count}});
  }

 private:
  void forget(NfState& st, int host) const {
    const std::string prefix = std::to_string(host) + ">";
    for (const auto& [key, v] : st.entries(kSeenTask)) {
      if (key.unit.rfind(prefix, 0) == 0) st.erase(kSeenTask, key.unit);
    }
    st.erase(kCountTask, counter_unit(host));
  }

  std::string counter_unit(int host) const {
    if (aggregate_ == 1) return std::to_string(host);
    return "group" + std::to_string((host - 1) / aggregate_);
  }

  PortName inside_, outside_;
  int threshold_ = 3;
  int aggregate_ = 1;
  std::optional<std::pair<NodeId, std::string>> require_;
};

// Heavy IPS: signature matching on traffic the light IPS flagged.
class HeavyIps final : public NetworkFunction {
 public:
  static constexpr std::string_view kAlarmTask = "alarm";

  HeavyIps(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    in_ = detail::cfg_str(c, "in", "in");
    out_ = detail::cfg_str(c, "out", "out");
    bad_ = detail::cfg_ints(c, "badSignatures");
    std::sort(bad_.begin(), bad_.end());
    require_from_ = detail::cfg_str(c, "requireFrom", "");
  }

  std::string_view type() const override { return "hips"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "tcpSYN", "payloadSig"};
  }
  std::vector<int> field_values(std::string_view field) const override {
    if (field == "payloadSig") return {bad_.begin(), bad_.end()};
    return {};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kAlarm}; }
  const std::vector<int>& bad_signatures() const { return bad_; }

  bool alarmed(const NfState& st, int host) const {
    return st.get(kAlarmTask, std::to_string(host), 0) == 1;
  }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    std::map<std::string, int> notes{{"host", in.srcIP}};
    const bool flagged = require_from_.empty() ? detail::any_token(in, token::kAlarm)
                                               : in.cTags.has(require_from_, token::kAlarm);
    if (!flagged) notes["contractViolation"] = 1;
    const bool has_payload = in.tcpSYN != 1 && in.payloadSig != kDontCare;
    if (has_payload && std::binary_search(bad_.begin(), bad_.end(), in.payloadSig)) {
      st.set(kAlarmTask, std::to_string(in.srcIP), 1);
      notes["signature"] = in.payloadSig;
      return drop(set_context(in, id(), token::kAlarm), EffectLabel::kAlarm, std::move(notes));
    }
    return make_step(in, ingress == out_ ? in_ : out_, EffectLabel::kOk, std::move(notes));
  }

 private:
  PortName in_, out_;
  std::vector<int> bad_;
  std::string require_from_;
};

// Passive monitor that blocks watched objects headed to watched hosts. The
// destination host is the response's provenance when known.
class Monitor final : public NetworkFunction {
 public:
  struct Watch {
    int object;
    int host;
  };

  Monitor(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    if (c.contains("ports")) {
      for (const auto& p : c.at("ports")) ports_.push_back(p.get<std::string>());
    } else {
      ports_ = {"p0"};
    }
    if (ports_.empty() || ports_.size() > 2) throw ConfigError("monitor needs one or two ports");
    if (c.contains("watch")) {
      for (const auto& w : c.at("watch")) {
        watch_.push_back(Watch{w.at("object").get<int>(), w.at("host").get<int>()});
      }
    }
  }

  std::string_view type() const override { return "monitor"; }

  Step step(NfState&, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    if (in.is_http_response()) {
      const int dest = in.cTags.provenance != kDontCare ? in.cTags.provenance : in.dstIP;
      for (const auto& w : watch_) {
        if (w.object == in.httpRespObj && w.host == dest) {
          return drop(in, EffectLabel::kDrop, {{"object", w.object}, {"host", w.host}});
        }
      }
    }
    PortName egress = ports_.size() == 1 ? ports_[0] : (ingress == ports_[0] ? ports_[1] : ports_[0]);
    return make_step(in, egress, EffectLabel::kOk);
  }

 private:
  std::vector<PortName> ports_;
  std::vector<Watch> watch_;
};

// 64-bit FNV-1a over the flow key's decimal rendering.
inline std::uint64_t flow_hash(const Adu& a) {
  const std::string key = std::to_string(a.srcIP) + "," + std::to_string(a.srcPort) + "," +
                          std::to_string(a.dstIP) + "," + std::to_string(a.dstPort) + "," +
                          std::to_string(a.proto);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Load balancer pinning each flow to a hashed backend.
class LoadBalancer final : public NetworkFunction {
 public:
  static constexpr std::string_view kFlowTask = "flow";

  LoadBalancer(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    in_ = detail::cfg_str(c, "in", "in");
    out_ = detail::cfg_str(c, "out", "out");
    backends_ = detail::cfg_ints(c, "backends");
    if (backends_.empty()) throw ConfigError("load balancer " + this->id() + " has no backends");
  }

  std::string_view type() const override { return "lb"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "srcPort", "dstPort", "proto"};
  }
  std::vector<std::string_view> vocabulary() const override { return {token::kBalanced}; }
  const std::vector<int>& backends() const { return backends_; }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    if (ingress != in_) return make_step(in, in_, EffectLabel::kForward);
    const std::string flow = std::to_string(in.srcIP) + ":" + std::to_string(in.srcPort) + "-" +
                             std::to_string(in.dstIP) + ":" + std::to_string(in.dstPort) + "/" +
                             std::to_string(in.proto);
    int backend = st.get(kFlowTask, flow, kDontCare);
    if (backend == kDontCare) {
      backend = backends_[flow_hash(in) % backends_.size()];
      st.set(kFlowTask, flow, backend);
    }
    Adu out = in;
    out.dstIP = backend;
    out = set_context(std::move(out), id(), token::kBalanced);
    return make_step(std::move(out), out_, EffectLabel::kForward, {{"backend", backend}});
  }

 private:
  PortName in_, out_;
  std::vector<int> backends_;
};

// Login gateway in front of a protected server. A login attempt is an ADU
// from the client side carrying a credential in payloadSig; after `limit`
// consecutive failures the host is locked out. Rejections are answered back
// to the client.
class AuthServer final : public NetworkFunction {
 public:
  static constexpr std::string_view kFailTask = "loginFailures";
  static constexpr std::string_view kBlockTask = "blocked";

  AuthServer(NodeId id, Json config) : NetworkFunction(std::move(id), std::move(config)) {
    const Json& c = this->config();
    client_ = detail::cfg_str(c, "client", "client");
    server_ = detail::cfg_str(c, "server", "server");
    limit_ = detail::cfg_int(c, "limit", 3);
    correct_ = detail::cfg_int(c, "correctSig", 1);
    if (limit_ < 1) throw ConfigError("auth limit must be >= 1");
  }

  std::string_view type() const override { return "auth"; }
  std::vector<std::string_view> relevant_fields() const override {
    return {"srcIP", "dstIP", "payloadSig"};
  }
  std::vector<int> field_values(std::string_view field) const override {
    if (field == "payloadSig") return {0, correct_};
    return {};
  }
  std::vector<std::string_view> vocabulary() const override {
    return {token::kBlocked, token::kLoginFail, token::kAuthOk};
  }
  int limit() const { return limit_; }

  Step step(NfState& st, const Adu& in, const PortName& ingress) const override {
    if (in.is_time()) return ignore_time(in);
    if (ingress == server_) return make_step(in, client_, EffectLabel::kForward);
    if (ingress != client_) {
      throw TopologyError("auth " + id() + " received ADU on unknown port '" + ingress + "'");
    }
    const std::string host = std::to_string(in.srcIP);
    const bool blocked = st.get(kBlockTask, host, 0) == 1;
    if (in.payloadSig == kDontCare) {
      if (blocked) return drop(in, EffectLabel::kDrop, {{"blocked", 1}});
      return make_step(in, server_, EffectLabel::kForward);
    }
    if (blocked) {
      return make_step(set_context(detail::reply_to(in), id(), token::kBlocked), client_,
                       EffectLabel::kRespond, {{"blocked", 1}});
    }
    if (in.payloadSig == correct_) {
      st.erase(kFailTask, host);
      return make_step(set_context(in, id(), token::kAuthOk), server_, EffectLabel::kForward);
    }
    const int fails = st.get(kFailTask, host, 0) + 1;
    st.set(kFailTask, host, fails);
    if (fails >= limit_) {
      st.set(kBlockTask, host, 1);
      return make_step(set_context(detail::reply_to(in), id(), token::kBlocked), client_,
                       EffectLabel::kAlarm, {{"failures", fails}});
    }
    return make_step(set_context(detail::reply_to(in), id(), token::kLoginFail), client_,
                     EffectLabel::kRespond, {{"failures", fails}});
  }

 private:
  PortName client_, server_;
  int limit_ = 3;
  int correct_ = 1;
};

inline NfPtr make_nf(const NodeId& id, std::string_view type, const Json& config) {
  if (type == "host") return std::make_shared<Host>(id, config);
  if (type == "switch") return std::make_shared<Switch>(id, config);
  if (type == "firewall") return std::make_shared<Firewall>(id, config);
  if (type == "nat") return std::make_shared<Nat>(id, config);
  if (type == "proxy") return std::make_shared<Proxy>(id, config);
  if (type == "lips") return std::make_shared<LightIps>(id, config);
  if (type == "hips") return std::make_shared<HeavyIps>(id, config);
  if (type == "monitor") return std::make_shared<Monitor>(id, config);
  if (type == "lb") return std::make_shared<LoadBalancer>(id, config);
  if (type == "auth") return std::make_shared<AuthServer>(id, config);
  throw ConfigError("unknown NF type: " + std::string(type));
}

}  // namespace adutest
