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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>

#include "r3/baselines.hpp"
#include "r3/engine.hpp"
#include "r3/experiment.hpp"
#include "r3/parallel.hpp"

using namespace r3;

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(500);
  parallel_for(
      hits.size(), Execution::Parallel, [&](std::size_t i) { hits[i]++; }, 4);
  for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for rethrows the first error") {
  CHECK_THROWS_AS(parallel_for(
                      100, Execution::Parallel,
                      [](std::size_t i) {
                        if (i == 37) throw ContractViolation("boom");
                      },
                      4),
                  ContractViolation);
  CHECK_THROWS_AS(parallel_for(
                      10, Execution::Serial,
                      [](std::size_t i) {
                        if (i == 3) throw StructuralError("boom");
                      },
                      1),
                  StructuralError);
}

TEST_CASE("trial runner: parallel equals the serial reference") {
  for (Method m : {Method::R3, Method::Pass1, Method::Bon}) {
    ExperimentConfig cfg;
    cfg.trials = 24;
    cfg.seed = 100;
    cfg.workers = 4;
    cfg.prm.mode = toy::PrmMode::Noisy;
    const auto s = run_trials(cfg, m, Execution::Serial);
    const auto p = run_trials(cfg, m, Execution::Parallel);
    REQUIRE(s.size() == p.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].index == i);
      CHECK(p[i].index == i);
      CHECK(s[i].generated == p[i].generated);
      CHECK(s[i].transcripts == p[i].transcripts);
      CHECK(s[i].counts == p[i].counts);
    }
  }
}

TEST_CASE("engine batch: parallel items equal the serial reference") {
  const auto task = toy::make_task(21, {});
  toy::NoisyOracleDenoiser dn(task, 0.4);
  toy::OracleProcessReward prm(task, {});
  R3Config cfg;
  cfg.seed = 3;
  const std::vector<std::vector<TokenId>> prompts(16, task.prompt());
  const auto s = run_r3(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Serial, 1});
  const auto p = run_r3(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Parallel, 4});
  CHECK(s.items == p.items);
  CHECK(s.counts == p.counts);
  const auto bs = run_block_bon(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Serial, 1});
  const auto bp = run_block_bon(prompts, toy::kMaskId, dn, prm, cfg, {Execution::Parallel, 4});
  CHECK(bs.items == bp.items);
}

TEST_CASE("items in a batch are independent of their neighbours") {
  const auto task = toy::make_task(21, {});
  toy::NoisyOracleDenoiser dn(task, 0.4);
  toy::OracleProcessReward prm(task, {});
  R3Config cfg;
  const std::vector<std::vector<TokenId>> one{task.prompt()};
  const std::vector<std::vector<TokenId>> many(5, task.prompt());
  const auto a = run_r3(one, toy::kMaskId, dn, prm, cfg);
  const auto b = run_r3(many, toy::kMaskId, dn, prm, cfg);
  CHECK(a.items[0].seq == b.items[0].seq);
  CHECK(a.items[0].ledger == b.items[0].ledger);
}
