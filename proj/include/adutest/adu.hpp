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

// Abstract data units: the single I/O record every model consumes and emits.
//
// An ADU stands for a whole sequence of packets (a TCP handshake step, an HTTP
// transaction, a payload burst) plus its current location and the context
// tags the network functions attached to it so far. Header values are small
// integer identities; -1 is the don't-care / unset value everywhere.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adutest/errors.hpp"
#include "json.hpp"

namespace adutest {

using Json = nlohmann::json;

inline constexpr int kDontCare = -1;

// Node identifier inside a topology (e.g. "S1", "proxy", "H2").
using NodeId = std::string;

// Context tokens the library's models attach. Policies may also name the
// parameterized forms "PROV:<host>" and "OBJ:<object>".
namespace token {
inline constexpr std::string_view kHit = "HIT";
inline constexpr std::string_view kMiss = "MISS";
inline constexpr std::string_view kAlarm = "ALARM";
inline constexpr std::string_view kNatMapped = "NAT-MAPPED";
inline constexpr std::string_view kEstablished = "ESTABLISHED";
inline constexpr std::string_view kBlocked = "BLOCKED";
inline constexpr std::string_view kLoginFail = "LOGIN_FAIL";
inline constexpr std::string_view kAuthOk = "AUTH_OK";
inline constexpr std::string_view kBalanced = "BALANCED";
}  // namespace token

struct CTags {
  using PerNf = std::map<NodeId, std::set<std::string>>;

  int provenance = kDontCare;

  // Per-NF token sets, shared between copies until one of them writes.
  const PerNf& per_nf() const {
    static const PerNf kEmpty;
    return per_nf_ ? *per_nf_ : kEmpty;
  }
  void add(const NodeId& nf, std::string_view tok) {
    auto next = per_nf_ ? std::make_shared<PerNf>(*per_nf_) : std::make_shared<PerNf>();
    (*next)[nf].insert(std::string(tok));
    per_nf_ = std::move(next);
  }

  bool has(const NodeId& nf, std::string_view tok) const {
    const auto& m = per_nf();
    auto it = m.find(nf);
    return it != m.end() && it->second.count(std::string(tok)) > 0;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& [nf, toks] : per_nf()) n += toks.size();
    return n;
  }

  friend bool operator==(const CTags& a, const CTags& b) {
    return a.provenance == b.provenance && (a.per_nf_ == b.per_nf_ || a.per_nf() == b.per_nf());
  }
  friend auto operator<=>(const CTags& a, const CTags& b) {
    if (auto c = a.provenance <=> b.provenance; c != 0) return c;
    if (a.per_nf_ == b.per_nf_) return std::strong_ordering::equal;
    const auto& x = a.per_nf();
    const auto& y = b.per_nf();
    if (std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end())) return std::strong_ordering::less;
    if (std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end())) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  std::shared_ptr<const PerNf> per_nf_;
};

struct Adu {
  int srcIP = kDontCare;
  int dstIP = kDontCare;
  int proto = kDontCare;
  int srcPort = kDontCare;
  int dstPort = kDontCare;
  int tcpSYN = kDontCare;
  int tcpACK = kDontCare;
  int tcpFIN = kDontCare;
  int tcpRST = kDontCare;
  int httpGetObj = kDontCare;
  int httpRespObj = kDontCare;
  int payloadSig = kDontCare;
  int dropped = kDontCare;
  int networkPort = kDontCare;
  int aduId = kDontCare;
  int isTimeTick = kDontCare;
  int tick = kDontCare;
  CTags cTags;

  friend bool operator==(const Adu&, const Adu&) = default;
  friend auto operator<=>(const Adu&, const Adu&) = default;

  bool is_dropped() const { return dropped == 1; }
  bool is_time() const { return isTimeTick == 1; }
  bool is_http_request() const { return httpGetObj >= 0; }
  bool is_http_response() const { return httpRespObj >= 0; }
  bool is_syn() const { return tcpSYN == 1 && tcpACK != 1; }
  bool is_synack() const { return tcpSYN == 1 && tcpACK == 1; }
};

enum class FieldKind { kHeader, kFlag, kLocation };

struct FieldInfo {
  std::string_view name;
  int Adu::*member;
  FieldKind kind;
};

// Declaration order doubles as the lexicographic order used by the planner.
inline constexpr std::array<FieldInfo, 17> kAduFields{{
    {"srcIP", &Adu::srcIP, FieldKind::kHeader},
    {"dstIP", &Adu::dstIP, FieldKind::kHeader},
    {"proto", &Adu::proto, FieldKind::kHeader},
    {"srcPort", &Adu::srcPort, FieldKind::kHeader},
    {"dstPort", &Adu::dstPort, FieldKind::kHeader},
    {"tcpSYN", &Adu::tcpSYN, FieldKind::kFlag},
    {"tcpACK", &Adu::tcpACK, FieldKind::kFlag},
    {"tcpFIN", &Adu::tcpFIN, FieldKind::kFlag},
    {"tcpRST", &Adu::tcpRST, FieldKind::kFlag},
    {"httpGetObj", &Adu::httpGetObj, FieldKind::kHeader},
    {"httpRespObj", &Adu::httpRespObj, FieldKind::kHeader},
    {"payloadSig", &Adu::payloadSig, FieldKind::kHeader},
    {"dropped", &Adu::dropped, FieldKind::kFlag},
    {"networkPort", &Adu::networkPort, FieldKind::kLocation},
    {"aduId", &Adu::aduId, FieldKind::kLocation},
    {"isTimeTick", &Adu::isTimeTick, FieldKind::kFlag},
    {"tick", &Adu::tick, FieldKind::kLocation},
}};

inline const FieldInfo* find_field(std::string_view name) {
  for (const auto& f : kAduFields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

inline bool well_formed(const Adu& a) {
  for (const auto& f : kAduFields) {
    int v = a.*f.member;
    if (v < kDontCare) return false;
    if (f.kind == FieldKind::kFlag && v > 1) return false;
  }
  return true;
}

inline void require_well_formed(const Adu& a) {
  if (!well_formed(a)) throw ContractViolation("malformed ADU");
}

// True iff every field the pattern sets equals the ADU's field. Context tags
// take part only where the pattern sets them: a set provenance must be equal
// and every token the pattern lists for an NF must be present on the ADU.
inline bool matches(const Adu& adu, const Adu& pattern) {
  for (const auto& f : kAduFields) {
    int p = pattern.*f.member;
    if (p != kDontCare && p != adu.*f.member) return false;
  }
  if (pattern.cTags.provenance != kDontCare &&
      pattern.cTags.provenance != adu.cTags.provenance) {
    return false;
  }
  for (const auto& [nf, toks] : pattern.cTags.per_nf()) {
    for (const auto& t : toks) {
      if (!adu.cTags.has(nf, t)) return false;
    }
  }
  return true;
}

// Number of fields a pattern pins; used for specificity ordering.
inline int specificity(const Adu& pattern) {
  int n = 0;
  for (const auto& f : kAduFields) n += (pattern.*f.member != kDontCare);
  if (pattern.cTags.provenance != kDontCare) ++n;
  n += static_cast<int>(pattern.cTags.token_count());
  return n;
}

// Process-wide id source for ADUs built outside a plan (time ADUs, ad-hoc
// tests). Plans number their own ADUs from 1.
inline int fresh_adu_id() {
  static std::atomic<int> next{1 << 24};
  return next.fetch_add(1);
}

inline Adu make_time_adu(int tick) {
  if (tick < 0) throw ContractViolation("time ADU tick must be >= 0");
  Adu a;
  a.isTimeTick = 1;
  a.tick = tick;
  a.aduId = fresh_adu_id();
  return a;
}

inline Adu set_context(Adu adu, const NodeId& nf, std::string_view tok) {
  adu.cTags.add(nf, tok);
  return adu;
}

// Provenance is write-once.
inline Adu set_provenance(Adu adu, int host) {
  if (adu.cTags.provenance == kDontCare) adu.cTags.provenance = host;
  return adu;
}

// ---- JSON ---------------------------------------------------------------

inline Json to_json(const CTags& t) {
  Json per = Json::object();
  for (const auto& [nf, toks] : t.per_nf()) {
    per[nf] = std::vector<std::string>(toks.begin(), toks.end());
  }
  return Json{{"provenance", t.provenance}, {"perNF", per}};
}

inline Json to_json(const Adu& a) {
  Json j = Json::object();
  for (const auto& f : kAduFields) j[std::string(f.name)] = a.*f.member;
  j["cTags"] = to_json(a.cTags);
  return j;
}

inline CTags ctags_from_json(const Json& j) {
  CTags t;
  if (j.contains("provenance")) t.provenance = j.at("provenance").get<int>();
  if (j.contains("perNF")) {
    for (const auto& [nf, toks] : j.at("perNF").items()) {
      for (const auto& tok : toks) t.add(nf, tok.get<std::string>());
    }
  }
  return t;
}

// Missing fields default to don't-care, so patterns can be written sparsely.
inline Adu adu_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("ADU JSON must be an object");
  Adu a;
  for (const auto& [key, val] : j.items()) {
    if (key == "cTags") {
      a.cTags = ctags_from_json(val);
      continue;
    }
    const FieldInfo* f = find_field(key);
    if (f == nullptr) throw ConfigError("unknown ADU field: " + key);
    if (!val.is_number_integer()) {
      throw ConfigError("ADU field " + key + " must be an integer");
    }
    a.*(f->member) = val.get<int>();
  }
  return a;
}

// Compact signature of an ADU with its identity stripped; used to compare
// what two executions did to "the same" ADU.
inline std::string behavior_signature(const Adu& a) {
  Adu copy = a;
  copy.aduId = kDontCare;
  return to_json(copy).dump();
}

// Finite ordered set of concrete values a field may take during search.
struct FieldDomain {
  std::vector<int> values;  // ascending, unique

  static FieldDomain of(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return FieldDomain{std::move(v)};
  }
  bool empty() const { return values.empty(); }
  bool contains(int v) const {
    return std::binary_search(values.begin(), values.end(), v);
  }
  friend bool operator==(const FieldDomain&, const FieldDomain&) = default;
};

}  // namespace adutest
