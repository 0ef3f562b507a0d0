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

// End-to-end commands: plan, test, check, and fault-config editing. All
// written files are deterministic for a fixed configuration and seed.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adutest/errors.hpp"
#include "adutest/harness.hpp"
#include "adutest/planner.hpp"
#include "adutest/policy.hpp"
#include "adutest/topology.hpp"
#include "adutest/translator.hpp"
#include "adutest/validator.hpp"

namespace adutest {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitFail = 1, kExitUnknown = 2, kExitConfig = 3 };

struct RunConfig {
  std::string topology;
  std::string policies;
  std::string faults;
  std::string background;
  MonitorMode mode = MonitorMode::kStatefulPortsOnly;
  int max_len = kDefaultMaxLen;
  int parallelism = 1;
  std::optional<std::uint32_t> seed;
  std::string out = "out";
};

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

// Scenario names become file names.
inline std::string file_stem(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? "scenario" : s;
}

struct Loaded {
  Json topology_json;
  Topology topology;
  std::vector<PolicyScenario> scenarios;
  std::vector<Fault> faults;
  BackgroundSpec background;
};

inline Loaded load(const RunConfig& cfg) {
  Json tj = load_json(cfg.topology);
  Loaded l{tj, Topology::from_json(tj), {}, {}, {}};
  if (!cfg.policies.empty()) {
    l.scenarios = scenarios_from_json(load_json(cfg.policies));
    for (const auto& s : l.scenarios) validate_scenario(s, l.topology);
  }
  if (!cfg.faults.empty()) l.faults = faults_from_json(load_json(cfg.faults));
  if (!cfg.background.empty()) l.background = BackgroundSpec::from_json(load_json(cfg.background));
  if (cfg.seed) l.background.seed = *cfg.seed;
  return l;
}

inline std::string plan_summary_row(const ScenarioPlan& p) {
  std::string row = p.scenario + "\t";
  if (!p.error.empty()) return row + "error: " + p.error + "\t-\n";
  if (!p.plan) return row + "no plan within maxLen\t" + std::to_string(p.stats.executions) + "\n";
  return row + std::to_string(p.plan->size()) + "\t" + std::to_string(p.stats.executions) + "\n";
}

inline int cmd_plan(const RunConfig& cfg, std::ostream& log = std::cerr) {
  Loaded l = load(cfg);
  auto plans = plan_scenarios(l.scenarios, l.topology, cfg.parallelism, cfg.max_len);
  std::string summary = "scenario\tlength\tnodes\n";
  int rc = kExitOk;
  for (const auto& p : plans) {
    summary += plan_summary_row(p);
    if (p.plan) write_file(fs::path(cfg.out) / "plans" / (file_stem(p.scenario) + ".jsonl"), p.plan->to_jsonl());
    if (!p.error.empty()) {
      rc = kExitFail;
      log << "failed: " << p.scenario << ": " << p.error << "\n";
    }
    log << p.scenario << ": " << p.stats.seconds << " s\n";
  }
  write_file(fs::path(cfg.out) / "plans" / "summary.tsv", summary);
  return rc;
}

struct Attempt {
  MonitorMode mode;
  int elapsed_cycles;
  Verdict verdict;
  std::string log_jsonl;
};

struct ScenarioOutcome {
  std::string scenario;
  std::optional<Plan> plan;
  std::string error;
  std::vector<TestScript> scripts;
  std::vector<Attempt> attempts;
  std::optional<Verdict> refined;  // MonitorAll follow-up of a segment

  const Verdict* final_verdict() const {
    if (refined) return &*refined;
    return attempts.empty() ? nullptr : &attempts.back().verdict;
  }
};

inline constexpr int kMaxRerunAttempts = 3;

inline Attempt run_attempt(const Topology& model, const SimNetwork& sim, const PolicyScenario& sc,
                           const Plan& plan, const std::vector<WireEvent>& events, const ModelRun& orig,
                           const BackgroundSpec& bg, MonitorMode mode, int elapsed) {
  RunResult run = run_script(sim, events, mode, background_traffic(bg, sim.topology(), elapsed));
  Interference itf = detect_interference(run.log, sc, plan, model);
  Verdict v = validate(orig, reconstruct(run.log, sim.topology()), itf, sc, model, mode);
  return Attempt{mode, elapsed, std::move(v), run.log.to_jsonl(sim.topology())};
}

// plan -> translate -> run -> validate, with the rerun workflow: an Unknown
// is repeated under MonitorAll after 1, 2, 4 drain cycles; a segment
// localization is refined by one MonitorAll run.
inline ScenarioOutcome test_scenario(const PolicyScenario& sc, const Loaded& l, const RunConfig& cfg) {
  ScenarioOutcome o;
  o.scenario = sc.name;
  try {
    ScenarioPlan sp = plan_one(sc, l.topology, cfg.max_len);
    if (!sp.error.empty()) throw Error(sp.error);
    if (!sp.plan) return o;
    o.plan = sp.plan;
    o.scripts = build_scripts(*o.plan);
    const auto events = expand(o.scripts);
    SimNetwork sim(l.topology_json);
    for (const auto& f : l.faults) sim = inject_fault(sim, f);
    const ModelRun orig = model_run(l.topology, *o.plan);

    int elapsed = 0;
    o.attempts.push_back(run_attempt(l.topology, sim, sc, *o.plan, events, orig, l.background, cfg.mode, elapsed));
    for (int k = 0; k < kMaxRerunAttempts && o.attempts.back().verdict.kind == VerdictKind::kUnknown; ++k) {
      elapsed += 1 << k;
      o.attempts.push_back(run_attempt(l.topology, sim, sc, *o.plan, events, orig, l.background,
                                       MonitorMode::kMonitorAll, elapsed));
    }
    const Attempt& last = o.attempts.back();
    if (last.verdict.followUp == "MonitorAll" && last.verdict.kind == VerdictKind::kFail) {
      o.refined = run_attempt(l.topology, sim, sc, *o.plan, events, orig, l.background,
                              MonitorMode::kMonitorAll, last.elapsed_cycles)
                      .verdict;
    }
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

inline Json localization_json(const Localization& loc) {
  return Json{{"elements", loc.elements}, {"aduId", loc.aduId}, {"divergence", loc.divergence}};
}

inline Json verdict_json(const Verdict& v) {
  Json j{{"verdict", std::string(to_string(v.kind))},
         {"interference", std::string(to_string(v.interference.kind))},
         {"evidence", v.evidence}};
  if (v.localized) j["localized"] = localization_json(*v.localized);
  if (!v.followUp.empty()) j["followUp"] = v.followUp;
  return j;
}

// Report row: {scenario, verdict, localized, evidence, ...}.
inline Json outcome_json(const ScenarioOutcome& o) {
  Json j{{"scenario", o.scenario}};
  if (!o.error.empty()) {
    j["verdict"] = "Error";
    j["error"] = o.error;
    return j;
  }
  if (!o.plan) {
    j["verdict"] = "NoPlan";
    return j;
  }
  const Verdict* v = o.final_verdict();
  j["verdict"] = std::string(to_string(v->kind));
  j["planLength"] = o.plan->size();
  if (v->localized) j["localized"] = v->localized->elements;
  j["evidence"] = v->evidence;
  Json attempts = Json::array();
  for (const auto& a : o.attempts) {
    Json aj = verdict_json(a.verdict);
    aj["monitor"] = std::string(to_string(a.mode));
    aj["elapsedCycles"] = a.elapsed_cycles;
    attempts.push_back(aj);
  }
  j["attempts"] = attempts;
  if (o.refined) j["refinedFrom"] = o.attempts.back().verdict.localized->elements;
  return j;
}

inline int exit_code_for(const std::vector<ScenarioOutcome>& outs) {
  bool fail = false, unknown = false;
  for (const auto& o : outs) {
    if (!o.error.empty() || !o.plan) {
      fail = true;
      continue;
    }
    const auto k = o.final_verdict()->kind;
    fail = fail || k == VerdictKind::kFail;
    unknown = unknown || k == VerdictKind::kUnknown;
  }
  return fail ? kExitFail : unknown ? kExitUnknown : kExitOk;
}

inline std::vector<ScenarioOutcome> run_tests(const Loaded& l, const RunConfig& cfg) {
  std::vector<ScenarioOutcome> outs(l.scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < outs.size(); i = next++) outs[i] = test_scenario(l.scenarios[i], l, cfg);
  };
  const int n = std::max(1, std::min<int>(cfg.parallelism, static_cast<int>(outs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outs;
}

inline int cmd_test(const RunConfig& cfg, std::ostream& log = std::cerr) {
  Loaded l = load(cfg);
  const auto outs = run_tests(l, cfg);
  Json report = Json::array();
  const fs::path root(cfg.out);
  for (const auto& o : outs) {
    report.push_back(outcome_json(o));
    const fs::path dir = root / "scenarios" / file_stem(o.scenario);
    if (o.plan) {
      write_file(dir / "plan.jsonl", o.plan->to_jsonl());
      Json scripts = Json::array();
      for (const auto& s : o.scripts) scripts.push_back(to_json(s));
      write_file(dir / "scripts.json", scripts.dump(2) + "\n");
      for (std::size_t i = 0; i < o.attempts.size(); ++i) {
        write_file(dir / ("log." + std::to_string(i) + ".jsonl"), o.attempts[i].log_jsonl);
      }
    }
    log << o.scenario << ": " << report.back().at("verdict").get<std::string>() << "\n";
  }
  write_file(root / "report.json", report.dump(2) + "\n");
  return exit_code_for(outs);
}

enum class CheckKind { kLoops, kReachability };

struct CheckResult {
  std::optional<Plan> witness;
  SearchStats stats;
};

inline CheckResult run_check(const Topology& topo, const Assertion& a, int max_len) {
  auto r = search(topo, a, scope_domains(a, topo), max_len);
  return {std::move(r.plan), r.stats};
}

inline int cmd_check(const RunConfig& cfg, CheckKind kind, int k, const std::string& from, const std::string& to,
                     const Json& trace_spec = Json::object(), std::ostream& out = std::cout) {
  Loaded l = load(cfg);
  Assertion a = kind == CheckKind::kLoops ? loop_assertion(k) : reachability_assertion(l.topology, from, to);
  a = a.with_trace_spec(trace_spec_from_json(trace_spec));
  CheckResult r = run_check(l.topology, a, cfg.max_len);
  if (r.witness) {
    out << r.witness->to_jsonl();
  } else {
    out << "none within bounds\n";
  }
  return kExitOk;
}

// Validates a fault against the topology and appends it to a fault list.
inline Json add_fault(const Json& topology, const Json& faults, const Json& fault) {
  Fault f = Fault::from_json(fault);
  inject_fault(SimNetwork(topology), f);
  Json out = faults.is_null() ? Json::array() : faults;
  if (out.is_object()) out = out.value("faults", Json::array());
  out.push_back(f.to_json());
  return out;
}

}  // namespace adutest
