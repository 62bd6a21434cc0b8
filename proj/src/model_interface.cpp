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

#include "r3/model_interface.hpp"

#include <algorithm>
#include <cmath>

namespace r3 {

std::vector<double> ProcessReward::score_batch(std::span<const ScoreRequest> requests, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    RngStream rng(seed, r.stream);
    out.push_back(score(r.context, r.block, rng));
  }
  return out;
}

CallCounts& CallCounts::operator+=(const CallCounts& o) {
  batched_prm_invocations += o.batched_prm_invocations;
  block_scorings += o.block_scorings;
  denoiser_invocations += o.denoiser_invocations;
  denoiser_token_updates += o.denoiser_token_updates;
  return *this;
}

nlohmann::json CallCounts::to_json() const {
  return {{"batched_prm_invocations", batched_prm_invocations},
          {"block_scorings", block_scorings},
          {"denoiser_invocations", denoiser_invocations},
          {"denoiser_token_updates", denoiser_token_updates}};
}

CallCounts CallAccountant::snapshot() const {
  return {batched_prm_invocations_.load(), block_scorings_.load(), denoiser_invocations_.load(),
          denoiser_token_updates_.load()};
}

std::vector<double> score_blocks(ProcessReward& prm, std::span<const ScoreRequest> items, std::size_t block_len,
                                 std::uint64_t seed, CallAccountant& acct) {
  for (const auto& it : items) {
    if (it.block.size() != block_len) {
      throw PreconditionViolation("score_blocks: block of " + std::to_string(it.block.size()) +
                                  " tokens, expected " + std::to_string(block_len));
    }
  }
  std::vector<double> scores = prm.score_batch(items, seed);
  acct.record_prm_batch(items.size());
  if (scores.size() != items.size()) {
    throw ContractViolation("PRM returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(items.size()) + " blocks");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ContractViolation("PRM score " + std::to_string(s) + " outside [0,1]");
    }
  }
  return scores;
}

TokenSeq denoise_region(Denoiser& dn, const TokenSeq& seq, std::span<const std::size_t> editable,
                        const DenoiseParams& params, RngStream& rng, CallAccountant& acct) {
  const auto tokens = seq.tokens();
  std::vector<char> is_editable(tokens.size(), 0);
  for (std::size_t p : editable) {
    if (p < seq.prompt_len() || p >= tokens.size()) {
      throw PreconditionViolation("denoise_region: editable position " + std::to_string(p) +
                                  " outside the generated region");
    }
    is_editable[p] = 1;
  }
  std::size_t masked = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != seq.mask_id()) continue;
    if (!is_editable[i]) {
      throw PreconditionViolation("denoise_region: mask at non-editable position " + std::to_string(i));
    }
    ++masked;
  }

  std::vector<TokenId> out = dn.denoise(seq, editable, params, rng);
  acct.record_denoise(masked);

  if (out.size() != tokens.size()) {
    throw ContractViolation("denoiser returned " + std::to_string(out.size()) + " tokens, expected " +
                            std::to_string(tokens.size()));
  }
  TokenSeq result = seq;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_editable[i]) {
      if (out[i] != tokens[i]) {
        throw ContractViolation("denoiser changed non-editable position " + std::to_string(i));
      }
      continue;
    }
    if (out[i] == seq.mask_id()) {
      throw ContractViolation("denoiser left a mask at position " + std::to_string(i));
    }
    if (out[i] < 0) throw ContractViolation("denoiser produced a negative token id");
    result.set_token(i, out[i]);
  }
  return result;
}

}  // namespace r3
