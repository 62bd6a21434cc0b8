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

#include <cstddef>
#include <span>
#include <vector>

#include "r3/core.hpp"
#include "r3/rng.hpp"

namespace r3 {

struct RemaskParams {
  double alpha_b = 10.0;
  double p_min = 0.01;
  double epsilon = 1e-8;
  // Only consulted for degenerate (uniform-score) windows.
  double tau_thresh = 0.8;

  static RemaskParams from(const R3Config& cfg) { return {cfg.alpha_b, cfg.p_min, cfg.epsilon, cfg.tau_thresh}; }
};

struct BlockRemaskPlan {
  double score = 0.0;
  double quality = 0.0;
  double probability = 0.0;
  std::size_t token_count = 0;
  std::vector<std::size_t> positions;  // sorted in-block offsets
};

struct WindowRemaskPlan {
  std::vector<BlockRemaskPlan> blocks;

  std::size_t total_masks() const;
};

// exp(-alpha_b * score)
double quality_value(double score, double alpha_b);

/// Maps the PRM scores of one window onto remask probabilities in [p_min, 1].
///
/// Qualities q = exp(-alpha_b * S) are min-max normalised over the window:
///   P = p_min + (1 - p_min) * (q - min q) / (max q - min q + epsilon).
/// When max q - min q < epsilon (all scores equal) the formula collapses to
/// p_min everywhere; in that case every block gets 1.0 if the shared score is
/// below tau_thresh and p_min otherwise, so a triggered uniform window still
/// gets remasked.
std::vector<double> remask_probabilities(std::span<const double> scores, const RemaskParams& params);

// round_half_up(beta_i * probability * block_len), clamped to [0, block_len].
std::size_t remask_token_count(double probability, double beta_i, std::size_t block_len);

// Exactly `count` distinct offsets in [0, block.size()), sorted ascending.
// Uniform draws without replacement from `rng`; Prefix takes 0..count-1.
std::vector<std::size_t> select_positions(std::span<const TokenId> block, std::size_t count, PositionPolicy policy,
                                          RngStream& rng);

// Scores -> probabilities -> counts -> positions for every block of a window.
WindowRemaskPlan plan_window_remask(std::span<const double> scores, const R3Config& cfg, RngStream& rng);

// Copy of `seq` with the planned positions of blocks first_block.. set to the
// mask id. Everything else is untouched.
TokenSeq apply_window_mask(const TokenSeq& seq, const WindowRemaskPlan& plan, std::size_t first_block);

}  // namespace r3
