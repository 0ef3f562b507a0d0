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

// Test-trace search over the composed model: iterative deepening over scoped
// ADU instantiations, plus an exhaustive oracle for small instances.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/network.hpp"
#include "adutest/policy.hpp"
#include "adutest/topology.hpp"

namespace adutest {

inline constexpr int kDefaultMaxLen = 20;

struct PlanStep {
  std::string source;
  Adu adu;
};

struct Plan {
  std::vector<PlanStep> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  std::vector<TraceEntry> trace() const {
    std::vector<TraceEntry> t;
    for (const auto& s : steps) t.push_back({s.source, s.adu});
    return t;
  }

  // One {seq, source, adu} object per line.
  std::string to_jsonl() const {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      Json j{{"seq", i + 1}, {"source", steps[i].source}, {"adu", to_json(steps[i].adu)}};
      out += j.dump();
      out += '\n';
    }
    return out;
  }

  static Plan from_jsonl(const std::string& text) {
    Plan p;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
      pos = nl == std::string::npos ? text.size() : nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Json j = Json::parse(line);
      p.steps.push_back({j.at("source").get<std::string>(), adu_from_json(j.at("adu"))});
    }
    return p;
  }

  friend bool operator==(const Plan& a, const Plan& b) {
    if (a.steps.size() != b.steps.size()) return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      if (a.steps[i].source != b.steps[i].source || !(a.steps[i].adu == b.steps[i].adu)) return false;
    }
    return true;
  }
};

struct ScopedField {
  const FieldInfo* field;
  FieldDomain domain;
};

// Per-field scoping: symbolic fields carry a domain, every other injectable
// field is concrete in `base`.
struct Scopes {
  Adu base;
  std::vector<ScopedField> symbolic;  // in kAduFields order
  bool allow_time = false;
  std::optional<EdgeId> forced_source;

  std::set<std::string> symbolic_names() const {
    std::set<std::string> s;
    for (const auto& f : symbolic) s.insert(std::string(f.field->name));
    return s;
  }
  const FieldDomain* domain(std::string_view name) const {
    for (const auto& f : symbolic) {
      if (f.field->name == name) return &f.domain;
    }
    return nullptr;
  }
};

namespace detail {

inline FieldDomain restrict_to(const FieldDomain& d, const TraceSpec& spec, std::string_view field) {
  auto it = spec.find(std::string(field));
  if (it == spec.end()) return d;
  std::vector<int> keep;
  for (int v : d.values) {
    if (std::find(it->second.begin(), it->second.end(), v) != it->second.end()) keep.push_back(v);
  }
  return FieldDomain::of(keep);
}

inline std::set<std::string> relevant_for(const Assertion& a, const Topology& topo) {
  std::set<std::string> rel{"srcIP", "dstIP"};
  auto add = [&](const NetworkFunction& nf) {
    for (auto f : nf.relevant_fields()) rel.insert(std::string(f));
  };
  if (a.kind() == AssertionKind::kPolicyNegation) {
    for (const auto& e : a.compiled_path()) add(topo.nf(e.nf));
  } else {
    for (const auto& n : topo.nodes()) add(*n.nf);
  }
  return rel;
}

}  // namespace detail

// Fields no NF on the policy path reads are fixed to don't-care; addresses
// and objects are limited to declared ids; flags to {0,1}; ports to their
// traceSpec value or the placeholder.
inline Scopes scope_domains(const Assertion& a, const Topology& topo) {
  const TraceSpec& spec = a.trace_spec();
  const auto relevant = detail::relevant_for(a, topo);
  Scopes s;
  s.allow_time = a.scenario() && a.scenario()->allowTime;
  s.forced_source = a.forced_injection();

  for (const auto& f : kAduFields) {
    if (f.kind == FieldKind::kLocation) continue;
    const std::string name(f.name);
    auto fixed = spec.find(name);
    const bool single = fixed != spec.end() && fixed->second.size() == 1;
    if (name == "srcPort" || name == "dstPort") {
      if (fixed != spec.end() && !single) {
        s.symbolic.push_back({&f, FieldDomain::of(fixed->second)});
      } else {
        s.base.*(f.member) = single ? fixed->second.front() : kDontCare;
      }
      continue;
    }
    if (single) {
      s.base.*(f.member) = fixed->second.front();
      continue;
    }
    if (!relevant.count(name) && fixed == spec.end()) continue;

    FieldDomain d;
    if (name == "srcIP" || name == "dstIP") {
      d = FieldDomain::of(topo.host_ips());
    } else if (f.kind == FieldKind::kFlag) {
      d = FieldDomain::of({0, 1});
    } else if (name == "httpGetObj" || name == "httpRespObj") {
      auto objs = topo.object_ids();
      objs.push_back(kDontCare);
      d = FieldDomain::of(objs);
    } else {
      std::vector<int> vals{kDontCare};
      for (const auto& n : topo.nodes()) {
        for (int v : n.nf->field_values(name)) vals.push_back(v);
      }
      if (fixed != spec.end()) vals.insert(vals.end(), fixed->second.begin(), fixed->second.end());
      d = FieldDomain::of(vals);
    }
    s.symbolic.push_back({&f, detail::restrict_to(d, spec, name)});
  }
  return s;
}

// Candidate ADUs for one plan position in ascending lexicographic order; the
// clock ADU, when allowed, comes last. aduId and tick are filled at use.
inline std::vector<PlanStep> enumerate_candidates(const Scopes& s, const Topology& topo,
                                                  const TraceSpec* spec = nullptr) {
  std::vector<PlanStep> out;
  for (const auto& f : s.symbolic) {
    if (f.domain.empty()) return out;
  }
  std::vector<std::size_t> idx(s.symbolic.size(), 0);
  for (bool done = false; !done;) {
    Adu a = s.base;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      a.*(s.symbolic[i].field->member) = s.symbolic[i].domain.values[idx[i]];
    }
    if (!spec || satisfies(a, *spec)) {
      if (s.forced_source) {
        out.push_back({topo.port_spec(*s.forced_source), a});
      } else if (auto host = topo.host_by_ip(a.srcIP); host && topo.is_source(*host)) {
        out.push_back({*host, a});
      }
    }
    done = true;
    for (std::size_t k = idx.size(); k > 0; --k) {
      if (++idx[k - 1] < s.symbolic[k - 1].domain.values.size()) {
        done = false;
        break;
      }
      idx[k - 1] = 0;
    }
  }
  if (s.allow_time) out.push_back({std::string{}, make_time_adu(0)});
  return out;
}

// Fills the position-dependent fields of a candidate.
inline Adu instantiate(const Adu& cand, std::size_t position) {
  Adu a = cand;
  a.aduId = static_cast<int>(position) + 1;
  if (a.is_time()) a.tick = static_cast<int>(position) + 1;
  return a;
}

struct SearchStats {
  std::uint64_t executions = 0;
  std::uint64_t memo_hits = 0;
  std::uint64_t loop_aborts = 0;
  double seconds = 0;
};

struct SearchResult {
  std::optional<Plan> plan;
  SearchStats stats;
};

class Searcher {
 public:
  Searcher(const Topology& topo, const Assertion& a, const Scopes& s)
      : topo_(topo), a_(a), cands_(enumerate_candidates(s, topo, &a.trace_spec())) {
    for (const auto& c : cands_) position_dependent_ = position_dependent_ || c.adu.is_time();
  }

  SearchResult run(int max_len) {
    if (max_len < 1) throw ContractViolation("maxLen must be at least 1");
    auto t0 = std::chrono::steady_clock::now();
    SearchResult r;
    for (int len = 1; len <= max_len && !r.plan; ++len) {
      std::vector<PlanStep> prefix;
      NetworkState init(topo_);
      if (dfs(init, len, prefix)) r.plan = Plan{prefix};
    }
    stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.stats = stats_;
    return r;
  }

 private:
  struct Child {
    NetworkState state;
    std::size_t cand;
  };
  // Outcome of trying every candidate once from one state. Reused across
  // deepening rounds so each (state, candidate) pair executes once.
  struct Expansion {
    std::optional<std::size_t> violating;
    std::vector<Child> children;
  };

  const Expansion& expand(const NetworkState& state, const std::string& key, std::size_t pos) {
    if (auto it = expanded_.find(key); it != expanded_.end()) return it->second;
    Expansion ex;
    std::set<std::string> seen{state.serialize()};
    for (std::size_t i = 0; i < cands_.size(); ++i) {
      NetworkState next = state;
      const Adu adu = instantiate(cands_[i].adu, pos);
      ++stats_.executions;
      bool violated = false;
      try {
        violated = inject_checked(topo_, next, adu, cands_[i].source, a_);
      } catch (const LoopError&) {
        ++stats_.loop_aborts;
        continue;
      }
      if (violated) {
        ex.violating = i;
        break;
      }
      // A candidate reaching an already-seen state is dominated by the
      // earlier (lexicographically smaller) one or is a no-op.
      if (seen.insert(next.serialize()).second) ex.children.push_back({std::move(next), i});
    }
    return expanded_.emplace(key, std::move(ex)).first->second;
  }

  bool dfs(const NetworkState& state, int remaining, std::vector<PlanStep>& prefix) {
    std::string key = state.serialize();
    if (position_dependent_) key += "#" + std::to_string(prefix.size());
    if (auto it = failed_.find(key); it != failed_.end() && it->second >= remaining) {
      ++stats_.memo_hits;
      return false;
    }
    const std::size_t pos = prefix.size();
    const Expansion& ex = expand(state, key, pos);
    if (ex.violating) {
      prefix.push_back({cands_[*ex.violating].source, instantiate(cands_[*ex.violating].adu, pos)});
      return true;
    }
    if (remaining > 1) {
      for (const auto& ch : ex.children) {
        prefix.push_back({cands_[ch.cand].source, instantiate(cands_[ch.cand].adu, pos)});
        if (dfs(ch.state, remaining - 1, prefix)) return true;
        prefix.pop_back();
      }
    }
    auto& f = failed_[key];
    f = std::max(f, remaining);
    return false;
  }

  const Topology& topo_;
  const Assertion& a_;
  std::vector<PlanStep> cands_;
  bool position_dependent_ = false;  // clock ADUs carry their position
  std::unordered_map<std::string, int> failed_;
  std::unordered_map<std::string, Expansion> expanded_;
  SearchStats stats_;
};

inline SearchResult search(const Topology& topo, const Assertion& a, const Scopes& s,
                           int max_len = kDefaultMaxLen) {
  return Searcher(topo, a, s).run(max_len);
}

// Replays a plan on a fresh model; true when the assertion trips at some step.
inline bool plan_violates(const Topology& topo, const Assertion& a, const Plan& p) {
  NetworkState st(topo);
  for (const auto& s : p.steps) {
    try {
      if (inject_checked(topo, st, s.adu, s.source, a)) return true;
    } catch (const LoopError&) {
      return false;
    }
  }
  return false;
}

inline constexpr std::uint64_t kDefaultOracleCap = 2'000'000;

// Exhaustive length-lexicographic enumeration, each trace replayed from a
// fresh model. Refuses instances above the cap.
inline std::optional<Plan> brute_force_oracle(const Topology& topo, const Assertion& a,
                                              const Scopes& s, int max_len,
                                              std::uint64_t cap = kDefaultOracleCap) {
  const auto cands = enumerate_candidates(s, topo, &a.trace_spec());
  const std::uint64_t n = cands.size();
  std::uint64_t total = 0, pow = 1;
  for (int len = 1; len <= max_len; ++len) {
    if (n > 0 && pow > cap / n) throw ContractViolation("oracle enumeration cap exceeded");
    pow *= n;
    total += pow;
    if (total > cap) throw ContractViolation("oracle enumeration cap exceeded");
  }
  if (n == 0) return std::nullopt;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(len), 0);
    for (;;) {
      Plan p;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        p.steps.push_back({cands[idx[i]].source, instantiate(cands[idx[i]].adu, i)});
      }
      if (plan_violates(topo, a, p)) return p;
      std::size_t k = idx.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++idx[k] < n) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  }
  return std::nullopt;
}

struct ScenarioPlan {
  std::string scenario;
  std::optional<Plan> plan;
  std::string error;  // non-empty when planning failed
  SearchStats stats;
};

inline ScenarioPlan plan_one(const PolicyScenario& sc, const Topology& topo, int max_len) {
  ScenarioPlan out{sc.name, std::nullopt, {}, {}};
  try {
    Assertion a = compile_assertion(sc, topo);
    auto r = search(topo, a, scope_domains(a, topo), max_len);
    out.stats = r.stats;
    if (r.plan && !plan_violates(topo, a, *r.plan)) {
      throw ContractViolation("search returned a plan that does not replay");
    }
    out.plan = std::move(r.plan);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Each scenario plans on its own model copy; output order follows input.
inline std::vector<ScenarioPlan> plan_scenarios(const std::vector<PolicyScenario>& scs,
                                                const Topology& topo, int parallelism = 1,
                                                int max_len = kDefaultMaxLen) {
  std::vector<ScenarioPlan> out(scs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scs.size(); i = next++) out[i] = plan_one(scs[i], topo, max_len);
  };
  const int n = std::max(1, std::min<int>(parallelism, static_cast<int>(scs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace adutest
