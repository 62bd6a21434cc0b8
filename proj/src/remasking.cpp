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

#include "r3/remasking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace r3 {

std::size_t WindowRemaskPlan::total_masks() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.token_count;
  return n;
}

double quality_value(double score, double alpha_b) { return std::exp(-alpha_b * score); }

std::vector<double> remask_probabilities(std::span<const double> scores, const RemaskParams& params) {
  if (scores.empty()) throw PreconditionViolation("remask_probabilities: empty window");
  std::vector<double> q(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw PreconditionViolation("remask_probabilities: score outside [0,1]");
    }
    q[i] = quality_value(scores[i], params.alpha_b);
  }
  const auto [lo_it, hi_it] = std::minmax_element(q.begin(), q.end());
  const double q_min = *lo_it;
  const double range = *hi_it - q_min;

  std::vector<double> p(scores.size());
  if (range < params.epsilon) {
    const double shared = *std::min_element(scores.begin(), scores.end());
    std::fill(p.begin(), p.end(), shared < params.tau_thresh ? 1.0 : params.p_min);
    return p;
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = params.p_min + (1.0 - params.p_min) * (q[i] - q_min) / (range + params.epsilon);
  }
  return p;
}

std::size_t remask_token_count(double probability, double beta_i, std::size_t block_len) {
  const double x = beta_i * probability * static_cast<double>(block_len);
  const double rounded = std::floor(x + 0.5);
  if (!(rounded > 0.0)) return 0;
  return std::min(block_len, static_cast<std::size_t>(rounded));
}

std::vector<std::size_t> select_positions(std::span<const TokenId> block, std::size_t count, PositionPolicy policy,
                                          RngStream& rng) {
  const std::size_t n = block.size();
  if (count > n) {
    throw PreconditionViolation("select_positions: count " + std::to_string(count) + " exceeds block length " +
                                std::to_string(n));
  }
  std::vector<std::size_t> offsets(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  if (policy == PositionPolicy::Uniform) {
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
      std::swap(offsets[i], offsets[j]);
    }
  }
  offsets.resize(count);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

WindowRemaskPlan plan_window_remask(std::span<const double> scores, const R3Config& cfg, RngStream& rng) {
  const auto probs = remask_probabilities(scores, RemaskParams::from(cfg));
  const std::vector<TokenId> shape(cfg.block_len, 0);
  WindowRemaskPlan plan;
  plan.blocks.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    BlockRemaskPlan b;
    b.score = scores[i];
    b.quality = quality_value(scores[i], cfg.alpha_b);
    b.probability = probs[i];
    b.token_count = remask_token_count(probs[i], cfg.beta_i, cfg.block_len);
    b.positions = select_positions(shape, b.token_count, cfg.position_policy, rng);
    plan.blocks.push_back(std::move(b));
  }
  return plan;
}

TokenSeq apply_window_mask(const TokenSeq& seq, const WindowRemaskPlan& plan, std::size_t first_block) {
  if (first_block + plan.blocks.size() > seq.n_blocks()) {
    throw StructuralError("apply_window_mask: plan extends past the last block");
  }
  TokenSeq out = seq;
  for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
    const auto& b = plan.blocks[i];
    if (b.positions.size() != b.token_count) throw StructuralError("apply_window_mask: plan count mismatch");
    const std::size_t base = seq.block_start(first_block + i);
    for (std::size_t off : b.positions) {
      if (off >= seq.block_len()) throw StructuralError("apply_window_mask: offset outside block");
      out.set_token(base + off, seq.mask_id());
    }
  }
  return out;
}

}  // namespace r3
