/* Copyright 2026 The R3 Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "r3/engine.hpp"
#include "r3/experiment.hpp"
#include "r3/selftest.hpp"
#include "r3/trace.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

struct RunArgs {
  std::string config;
  std::string methods;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool trace = false;
  bool serial = false;
  bool json = false;
};

int cmd_run(const RunArgs& a) {
  r3::ExperimentConfig cfg;
  try {
    if (!a.config.empty()) cfg = r3::load_config(a.config);
    if (!a.methods.empty()) cfg.methods = r3::parse_config("method = " + a.methods).methods;
    if (a.trials) cfg.trials = *a.trials;
    if (a.seed) cfg.seed = *a.seed;
    if (a.workers) cfg.workers = *a.workers;
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.trace) cfg.trace = true;
    cfg.validate();
  } catch (const r3::ConfigError& e) {
    std::cerr << "r3: config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto report = r3::run_experiment(cfg, a.serial ? r3::Execution::Serial : r3::Execution::Parallel);
    if (a.json) {
      std::cout << report.to_json().dump(2) << '\n';
    } else {
      std::cout << report.to_table();
    }
    if (!cfg.out_dir.empty()) std::cerr << "r3: wrote " << cfg.out_dir << "/report.json\n";
  } catch (const r3::RunAborted& e) {
    std::cerr << "r3: run aborted: " << e.what() << '\n';
    if (cfg.out_dir.empty()) {
      std::cerr << "r3: partial transcript follows\n";
      for (const auto& t : e.partial_transcripts()) r3::emit_trace(t, "aborted", std::cerr);
    } else {
      std::cerr << "r3: partial transcript written under " << cfg.out_dir << "/traces/\n";
    }
    std::cerr.flush();
    return kExitAborted;
  }
  return 0;
}

int cmd_replay(const std::string& path) {
  const auto records = r3::read_trace_file(path);
  const auto sum = r3::replay_trace(records);
  std::cout << "runs " << sum.runs << ", events " << sum.events << ", triggers " << sum.triggers
            << ", remasks verified " << sum.remasks_verified << ", selects " << sum.selects << ", retains "
            << sum.retains << '\n';
  for (const auto& p : sum.problems) std::cout << "problem: " << p << '\n';
  std::cout << (sum.ok() ? "replay ok" : "replay FAILED") << '\n';
  return sum.ok() ? 0 : kExitFailure;
}

int cmd_selftest() {
  bool all = true;
  for (const auto& c : r3::run_selftest()) {
    std::cout << (c.ok ? "PASS " : "FAIL ") << c.name;
    if (!c.ok) std::cout << ": " << c.detail;
    std::cout << '\n';
    all = all && c.ok;
  }
  return all ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Windowed review/remask/refine decoding for block diffusion models"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run seeded trials and write a report");
  run_cmd->add_option("-c,--config", run.config, "key = value config file")->check(CLI::ExistingFile);
  run_cmd->add_option("-m,--method", run.methods, "r3, pass1, bon or a comma list");
  run_cmd->add_option("-n,--trials", run.trials, "number of seeded trials");
  run_cmd->add_option("-s,--seed", run.seed, "base seed; trial t uses seed + t");
  run_cmd->add_option("-w,--workers", run.workers, "OpenMP threads (0 = all)");
  run_cmd->add_option("-o,--out", run.out, "output directory");
  run_cmd->add_flag("--trace", run.trace, "write per-trial JSONL traces");
  run_cmd->add_flag("--serial", run.serial, "use the serial reference runner");
  run_cmd->add_flag("--json", run.json, "print the JSON report instead of the table");

  std::string trace_path;
  auto* replay_cmd = app.add_subcommand("replay", "check a trace file without any model");
  replay_cmd->add_option("-t,--trace", trace_path, "JSONL trace")->required()->check(CLI::ExistingFile);

  auto* self_cmd = app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(trace_path);
    if (*self_cmd) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "r3: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
