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

#include "r3/engine.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace r3 {

namespace {

nlohmann::json as_json(std::span<const TokenId> tokens) { return std::vector<TokenId>(tokens.begin(), tokens.end()); }

std::vector<TokenId> window_of(const TokenSeq& seq, const WindowRef& w) {
  const auto all = seq.tokens();
  return {all.begin() + static_cast<std::ptrdiff_t>(seq.block_start(w.first_block)),
          all.begin() + static_cast<std::ptrdiff_t>(seq.block_start(w.last_block + 1))};
}

DenoiseParams denoise_params(const R3Config& cfg) { return {cfg.temperature, cfg.steps_per_block()}; }

void record_candidate_scores(ItemState& state, const CandidateSet& set) {
  nlohmann::json scores = nlohmann::json::array();
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& c : set.candidates) {
    scores.push_back(c.scores);
    metrics.push_back(c.metric);
  }
  state.transcript.push({EventKind::ScoreCandidates, set.item, set.window.first_block, set.window.last_block,
                         {{"scores", scores}, {"metric", metrics}}});
}

}  // namespace

WindowRef window_at(std::size_t j, std::size_t window) {
  if (window == 0) throw PreconditionViolation("window size must be >= 1");
  return {j + 1 >= window ? j + 1 - window : 0, j};
}

bool is_review_point(std::size_t j, std::size_t window, std::size_t n_total) {
  return (j + 1) % window == 0 || j + 1 == n_total;
}

std::vector<TokenId> Candidate::window_tokens(const WindowRef& w) const { return window_of(seq, w); }

double window_metric(std::span<const double> scores, Metric metric) {
  if (scores.empty()) throw PreconditionViolation("window_metric: empty window");
  switch (metric) {
    case Metric::Product:
      return std::accumulate(scores.begin(), scores.end(), 1.0, std::multiplies<>());
    case Metric::Min:
      return *std::min_element(scores.begin(), scores.end());
  }
  return 0.0;
}

ItemState make_item(std::vector<TokenId> prompt, const R3Config& cfg, TokenId mask_id) {
  return ItemState{TokenSeq(std::move(prompt), cfg.block_len, mask_id), {}, {}};
}

void extend_block(ItemState& state, std::size_t item, Denoiser& dn, const R3Config& cfg, CallAccountant& acct) {
  const std::size_t j = state.seq.n_blocks();
  if (j >= cfg.n_total) throw PreconditionViolation("extend_block: all blocks already generated");

  TokenSeq next = state.seq;
  next.append_masked_block();
  std::vector<std::size_t> editable(cfg.block_len);
  std::iota(editable.begin(), editable.end(), next.block_start(j));

  RngStream rng(cfg.seed, {item, j, Phase::Extend, 0, 0});
  state.seq = denoise_region(dn, next, editable, denoise_params(cfg), rng, acct);
  state.ledger.append_placeholder();
  state.transcript.push({EventKind::Extend, item, j, j,
                         {{"tokens", as_json(state.seq.block_slice(j))}, {"steps", cfg.steps_per_block()}}});
}

std::vector<std::vector<double>> review_window(std::span<ItemState> items, std::size_t j, ProcessReward& prm,
                                               const R3Config& cfg, CallAccountant& acct) {
  if (!is_review_point(j, cfg.window, cfg.n_total)) {
    throw PreconditionViolation("review_window: block " + std::to_string(j) + " is not a review point");
  }
  const WindowRef w = window_at(j, cfg.window);
  std::vector<ScoreRequest> requests;
  requests.reserve(items.size() * w.width());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].seq.n_blocks() != j + 1) throw PreconditionViolation("review_window: item has wrong block count");
    for (std::size_t b = w.first_block; b <= w.last_block; ++b) {
      requests.push_back({items[i].seq.context_before(b), items[i].seq.block_slice(b), {i, b, Phase::Review, j, 0}});
    }
  }
  const auto flat = score_blocks(prm, requests, cfg.block_len, cfg.seed, acct);

  std::vector<std::vector<double>> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto first = flat.begin() + static_cast<std::ptrdiff_t>(i * w.width());
    out[i].assign(first, first + static_cast<std::ptrdiff_t>(w.width()));
    for (std::size_t k = 0; k < w.width(); ++k) items[i].ledger.fill(w.first_block + k, out[i][k]);
    items[i].transcript.push({EventKind::Review, i, w.first_block, w.last_block, {{"scores", out[i]}}});
  }
  return out;
}

bool needs_refinement(std::span<const double> scores, double tau) {
  if (scores.empty()) throw PreconditionViolation("needs_refinement: empty window");
  return *std::min_element(scores.begin(), scores.end()) < tau;
}

CandidateSet propose_candidates(ItemState& state, std::size_t item, std::size_t j, std::span<const double> scores,
                                Denoiser& dn, const R3Config& cfg, CallAccountant& acct) {
  const WindowRef w = window_at(j, cfg.window);
  if (scores.size() != w.width()) throw StructuralError("propose_candidates: score count != window width");
  if (state.seq.n_blocks() != j + 1) throw PreconditionViolation("propose_candidates: window is not the tail");

  CandidateSet set{item, j, w, {}, false};
  set.candidates.reserve(cfg.n_samples);
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    RngStream mask_rng(cfg.seed, {item, j, Phase::Remask, j, s});
    WindowRemaskPlan plan = plan_window_remask(scores, cfg, mask_rng);
    TokenSeq cand = apply_window_mask(state.seq, plan, w.first_block);

    nlohmann::json probs = nlohmann::json::array();
    nlohmann::json counts = nlohmann::json::array();
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& b : plan.blocks) {
      probs.push_back(b.probability);
      counts.push_back(b.token_count);
      positions.push_back(b.positions);
    }
    state.transcript.push({EventKind::Remask, item, w.first_block, w.last_block,
                           {{"sample", s},
                            {"mask_id", state.seq.mask_id()},
                            {"probabilities", probs},
                            {"counts", counts},
                            {"positions", positions},
                            {"masked_window", window_of(cand, w)}}});

    // Block-causal refinement: block b sees the prompt, everything before the
    // window, and this candidate's already refined blocks.
    for (std::size_t k = 0; k < w.width(); ++k) {
      const std::size_t b = w.first_block + k;
      TokenSeq prefix = cand.prefix_through(b);
      std::vector<std::size_t> editable;
      editable.reserve(plan.blocks[k].positions.size());
      for (std::size_t off : plan.blocks[k].positions) editable.push_back(prefix.block_start(b) + off);
      RngStream rng(cfg.seed, {item, b, Phase::Refine, j, s});
      TokenSeq filled = denoise_region(dn, prefix, editable, denoise_params(cfg), rng, acct);
      cand.replace_blocks(b, filled.block_slice(b));
    }
    state.transcript.push(
        {EventKind::Propose, item, w.first_block, w.last_block, {{"sample", s}, {"window_tokens", window_of(cand, w)}}});
    set.candidates.push_back({std::move(cand), std::move(plan), {}, 0.0});
  }
  return set;
}

void score_candidates(std::span<CandidateSet> sets, ProcessReward& prm, const R3Config& cfg, CallAccountant& acct) {
  std::vector<ScoreRequest> requests;
  for (const auto& set : sets) {
    for (std::size_t s = 0; s < set.candidates.size(); ++s) {
      const TokenSeq& seq = set.candidates[s].seq;
      for (std::size_t b = set.window.first_block; b <= set.window.last_block; ++b) {
        requests.push_back(
            {seq.context_before(b), seq.block_slice(b), {set.item, b, Phase::ScoreCandidates, set.review_block, s}});
      }
    }
  }
  if (requests.empty()) return;
  const auto flat = score_blocks(prm, requests, cfg.block_len, cfg.seed, acct);

  std::size_t at = 0;
  for (auto& set : sets) {
    for (auto& c : set.candidates) {
      c.scores.assign(flat.begin() + static_cast<std::ptrdiff_t>(at),
                      flat.begin() + static_cast<std::ptrdiff_t>(at + set.window.width()));
      at += set.window.width();
      c.metric = window_metric(c.scores, cfg.metric);
    }
    set.scored = true;
  }
}

Selection select_best(ItemState& state, const CandidateSet& set, std::span<const double> original_scores,
                      const R3Config& cfg) {
  if (!set.scored) throw PreconditionViolation("select_best: candidates have not been scored");
  const WindowRef& w = set.window;

  Selection sel;
  std::optional<std::size_t> best;
  double best_metric = 0.0;
  for (std::size_t s = 0; s < set.candidates.size(); ++s) {
    if (!best || set.candidates[s].metric > best_metric) {
      best = s;
      best_metric = set.candidates[s].metric;
    }
  }
  if (cfg.retain_original) {
    sel.original_metric = window_metric(original_scores, cfg.metric);
  }
  // The original ranks before every candidate, so it wins ties.
  if (!best || (sel.original_metric && *sel.original_metric >= best_metric)) {
    sel.retained = true;
    sel.metric = sel.original_metric.value_or(0.0);
    nlohmann::json payload = {{"original_metric", sel.metric}};
    if (best) {
      payload["best_candidate"] = *best;
      payload["best_metric"] = best_metric;
    }
    state.transcript.push({EventKind::Retain, set.item, w.first_block, w.last_block, std::move(payload)});
    return sel;
  }

  const Candidate& win = set.candidates[*best];
  sel.candidate = best;
  sel.metric = best_metric;
  const auto tokens = win.window_tokens(w);
  state.seq.replace_blocks(w.first_block, tokens);
  for (std::size_t k = 0; k < w.width(); ++k) state.ledger.fill(w.first_block + k, win.scores[k]);

  nlohmann::json payload = {
      {"candidate", *best}, {"metric", best_metric}, {"scores", win.scores}, {"window_tokens", tokens}};
  payload["original_metric"] = sel.original_metric ? nlohmann::json(*sel.original_metric) : nlohmann::json();
  state.transcript.push({EventKind::Select, set.item, w.first_block, w.last_block, std::move(payload)});
  return sel;
}

RunResult run_r3(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn, ProcessReward& prm,
                 const R3Config& cfg, const EngineOptions& opts) {
  cfg.validate();
  if (prompts.empty()) throw PreconditionViolation("run_r3: empty batch");

  CallAccountant acct;
  std::vector<ItemState> items;
  items.reserve(prompts.size());
  for (const auto& p : prompts) {
    if (p.empty()) throw PreconditionViolation("run_r3: empty prompt");
    items.push_back(make_item(p, cfg, mask_id));
  }
  const Execution dn_exec = dn.concurrent_safe() ? opts.exec : Execution::Serial;

  try {
    for (std::size_t j = 0; j < cfg.n_total; ++j) {
      parallel_for(
          items.size(), dn_exec, [&](std::size_t i) { extend_block(items[i], i, dn, cfg, acct); }, opts.threads);
      if (!is_review_point(j, cfg.window, cfg.n_total)) continue;

      const auto scores = review_window(items, j, prm, cfg, acct);
      const WindowRef w = window_at(j, cfg.window);

      std::vector<std::size_t> triggered;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!needs_refinement(scores[i], cfg.tau_thresh)) continue;
        triggered.push_back(i);
        items[i].transcript.push({EventKind::Trigger, i, w.first_block, w.last_block,
                                  {{"min_score", *std::min_element(scores[i].begin(), scores[i].end())},
                                   {"tau", cfg.tau_thresh},
                                   {"window_tokens", window_of(items[i].seq, w)}}});
      }
      if (triggered.empty()) continue;

      std::vector<CandidateSet> sets(triggered.size());
      parallel_for(
          triggered.size(), dn_exec,
          [&](std::size_t t) {
            const std::size_t i = triggered[t];
            sets[t] = propose_candidates(items[i], i, j, scores[i], dn, cfg, acct);
          },
          opts.threads);
      score_candidates(sets, prm, cfg, acct);
      for (const auto& set : sets) {
        record_candidate_scores(items[set.item], set);
        select_best(items[set.item], set, scores[set.item], cfg);
      }
    }
  } catch (const Error& e) {
    std::vector<Transcript> partial;
    for (const auto& it : items) partial.push_back(it.transcript);
    throw RunAborted(std::string("run aborted: ") + e.what(), std::current_exception(), std::move(partial));
  }
  return {std::move(items), acct.snapshot()};
}

}  // namespace r3
