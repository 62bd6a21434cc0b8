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

#pragma once

#include <vector>

#include "r3/engine.hpp"

namespace r3 {

// Plain block-by-block generation: n_total extend steps, no PRM.
RunResult run_pass1(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn, const R3Config& cfg,
                    const EngineOptions& opts = {});

// Block-wise Best-of-N: for every block, n_samples fresh candidates are scored
// in one batched PRM call and the highest-scoring one (lowest index on ties)
// is appended. Candidate 0 uses the same stream as a plain extend step.
RunResult run_block_bon(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn,
                        ProcessReward& prm, const R3Config& cfg, const EngineOptions& opts = {});

}  // namespace r3
