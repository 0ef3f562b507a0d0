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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adutest/adutest.hpp"

using namespace adutest;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg, std::string& monitor, long long& seed) {
  cmd->add_option("--topology", cfg.topology, "topology JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--monitor", monitor, "stateful | all")->check(CLI::IsMember({"stateful", "all"}));
  cmd->add_option("--max-len", cfg.max_len, "maximum plan length")->check(CLI::PositiveNumber);
  cmd->add_option("--parallelism", cfg.parallelism, "scenarios planned concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", seed, "background traffic seed");
  cmd->add_option("--out", cfg.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model-based tests for stateful data planes"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string monitor = "stateful";
  long long seed = -1;

  auto* plan = app.add_subcommand("plan", "search test plans for each policy scenario");
  add_common(plan, cfg, monitor, seed);
  plan->add_option("--policies", cfg.policies, "policy scenarios JSON")->required()->check(CLI::ExistingFile);

  auto* test = app.add_subcommand("test", "plan, run on the simulated plane and validate");
  add_common(test, cfg, monitor, seed);
  test->add_option("--policies", cfg.policies, "policy scenarios JSON")->required()->check(CLI::ExistingFile);
  test->add_option("--faults", cfg.faults, "fault list JSON")->check(CLI::ExistingFile);
  test->add_option("--background", cfg.background, "background traffic JSON")->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check", "loop or reachability check");
  add_common(check, cfg, monitor, seed);
  std::string kind;
  int k = 3;
  std::string from, to;
  check->add_option("kind", kind, "loops | reachability")->required()->check(CLI::IsMember({"loops", "reachability"}));
  check->add_option("--k", k, "loop bound K");
  check->add_option("--from", from, "injection port node:port");
  check->add_option("--to", to, "target port node:port");
  std::string spec_json = "{}";
  check->add_option("--trace-spec", spec_json, "admissible traffic class as a JSON object");

  auto* fault = app.add_subcommand("inject-fault", "validate a fault and append it to a fault list");
  std::string fault_json;
  fault->add_option("--topology", cfg.topology, "topology JSON")->required()->check(CLI::ExistingFile);
  fault->add_option("--faults", cfg.faults, "existing fault list JSON")->check(CLI::ExistingFile);
  fault->add_option("--add", fault_json, "fault object as JSON")->required();
  fault->add_option("--out", cfg.out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  cfg.mode = monitor_mode_from(monitor);
  if (seed >= 0) cfg.seed = static_cast<std::uint32_t>(seed);

  try {
    if (*plan) return cmd_plan(cfg);
    if (*test) return cmd_test(cfg);
    if (*check) {
      if (kind == "reachability" && (from.empty() || to.empty())) {
        throw ConfigError("reachability needs --from and --to");
      }
      return cmd_check(cfg, kind == "loops" ? CheckKind::kLoops : CheckKind::kReachability, k, from, to,
                       Json::parse(spec_json));
    }
    if (*fault) {
      Json faults = cfg.faults.empty() ? Json::array() : load_json(cfg.faults);
      Json out = add_fault(load_json(cfg.topology), faults, Json::parse(fault_json));
      if (cfg.out == "out" || cfg.out.empty()) {
        std::cout << out.dump(2) << "\n";
      } else {
        write_file(cfg.out, out.dump(2) + "\n");
      }
      return kExitOk;
    }
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TopologyError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PolicyError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitOk;
}
