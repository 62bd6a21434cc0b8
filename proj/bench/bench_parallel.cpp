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

// Serial reference vs OpenMP: trial runner and engine batch.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "r3/engine.hpp"
#include "r3/experiment.hpp"

using namespace r3;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t trials = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 400;
  const int reps = 3;
  std::printf("threads available: %d, trials: %zu, best of %d\n", max_threads(), trials, reps);

  for (Method m : {Method::Pass1, Method::R3, Method::Bon}) {
    ExperimentConfig cfg;
    cfg.trials = trials;
    std::vector<TrialResult> s, p;
    const double ts = seconds([&] { s = run_trials(cfg, m, Execution::Serial); }, reps);
    const double tp = seconds([&] { p = run_trials(cfg, m, Execution::Parallel); }, reps);
    bool same = s.size() == p.size();
    for (std::size_t i = 0; same && i < s.size(); ++i) same = s[i].generated == p[i].generated;
    row((std::string("trials/") + std::string(to_string(m))).c_str(), ts, tp, same);
  }

  const auto task = toy::make_task(1, {});
  toy::NoisyOracleDenoiser dn(task, 0.3);
  toy::OracleProcessReward prm(task, {});
  R3Config cfg;
  const std::vector<std::vector<TokenId>> prompts(64, task.prompt());
  RunResult s, p;
  const double ts = seconds([&] { s = run_r3(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Serial, 0}); }, reps);
  const double tp = seconds([&] { p = run_r3(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Parallel, 0}); }, reps);
  row("engine/r3 batch of 64", ts, tp, s.items == p.items);
  return 0;
}
