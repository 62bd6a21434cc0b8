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

#include "r3/baselines.hpp"

#include <numeric>

namespace r3 {

namespace {

std::vector<ItemState> make_items(std::span<const std::vector<TokenId>> prompts, TokenId mask_id,
                                  const R3Config& cfg) {
  cfg.validate();
  if (prompts.empty()) throw PreconditionViolation("empty batch");
  std::vector<ItemState> items;
  for (const auto& p : prompts) {
    if (p.empty()) throw PreconditionViolation("empty prompt");
    items.push_back(make_item(p, cfg, mask_id));
  }
  return items;
}

[[noreturn]] void abort_run(const Error& e, const std::vector<ItemState>& items) {
  std::vector<Transcript> partial;
  for (const auto& it : items) partial.push_back(it.transcript);
  throw RunAborted(std::string("run aborted: ") + e.what(), std::current_exception(), std::move(partial));
}

}  // namespace

RunResult run_pass1(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn, const R3Config& cfg,
                    const EngineOptions& opts) {
  auto items = make_items(prompts, mask_id, cfg);
  CallAccountant acct;
  const Execution exec = dn.concurrent_safe() ? opts.exec : Execution::Serial;
  try {
    parallel_for(
        items.size(), exec,
        [&](std::size_t i) {
          for (std::size_t j = 0; j < cfg.n_total; ++j) extend_block(items[i], i, dn, cfg, acct);
        },
        opts.threads);
  } catch (const Error& e) {
    abort_run(e, items);
  }
  return {std::move(items), acct.snapshot()};
}

RunResult run_block_bon(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn,
                        ProcessReward& prm, const R3Config& cfg, const EngineOptions& opts) {
  auto items = make_items(prompts, mask_id, cfg);
  CallAccountant acct;
  const Execution exec = dn.concurrent_safe() ? opts.exec : Execution::Serial;
  const DenoiseParams params{cfg.temperature, cfg.steps_per_block()};

  try {
    for (std::size_t j = 0; j < cfg.n_total; ++j) {
      // candidates[i][s] holds item i's sequence with candidate block s appended.
      std::vector<std::vector<TokenSeq>> candidates(items.size());
      parallel_for(
          items.size(), exec,
          [&](std::size_t i) {
            for (std::size_t s = 0; s < cfg.n_samples; ++s) {
              TokenSeq next = items[i].seq;
              next.append_masked_block();
              std::vector<std::size_t> editable(cfg.block_len);
              std::iota(editable.begin(), editable.end(), next.block_start(j));
              RngStream rng(cfg.seed, {i, j, Phase::Extend, 0, s});
              candidates[i].push_back(denoise_region(dn, next, editable, params, rng, acct));
              items[i].transcript.push({EventKind::Propose, i, j, j,
                                        {{"sample", s},
                                         {"window_tokens", std::vector<TokenId>(candidates[i].back().block_slice(j).begin(),
                                                                                candidates[i].back().block_slice(j).end())}}});
            }
          },
          opts.threads);

      for (std::size_t i = 0; i < items.size(); ++i) {
        std::vector<ScoreRequest> requests;
        for (std::size_t s = 0; s < cfg.n_samples; ++s) {
          const TokenSeq& c = candidates[i][s];
          requests.push_back({c.context_before(j), c.block_slice(j), {i, j, Phase::ScoreCandidates, j, s}});
        }
        const auto scores = score_blocks(prm, requests, cfg.block_len, cfg.seed, acct);
        std::size_t best = 0;
        for (std::size_t s = 1; s < scores.size(); ++s) {
          if (scores[s] > scores[best]) best = s;
        }
        ItemState& st = items[i];
        st.transcript.push({EventKind::ScoreCandidates, i, j, j, {{"scores", scores}, {"metric", scores}}});
        st.transcript.push({EventKind::Select, i, j, j, {{"candidate", best}, {"metric", scores[best]}}});
        st.seq = std::move(candidates[i][best]);
        st.ledger.append_placeholder();
        st.ledger.fill(j, scores[best]);
        const auto blk = st.seq.block_slice(j);
        st.transcript.push({EventKind::Extend, i, j, j,
                            {{"tokens", std::vector<TokenId>(blk.begin(), blk.end())}, {"steps", params.steps}}});
      }
    }
  } catch (const Error& e) {
    abort_run(e, items);
  }
  return {std::move(items), acct.snapshot()};
}

}  // namespace r3
