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
#include <exception>
#include <optional>
#include <span>
#include <vector>

#include "r3/core.hpp"
#include "r3/model_interface.hpp"
#include "r3/parallel.hpp"
#include "r3/remasking.hpp"

namespace r3 {

// One batch item: its sequence, its score ledger, its event log.
struct ItemState {
  TokenSeq seq;
  ScoreLedger ledger;
  Transcript transcript;

  friend bool operator==(const ItemState&, const ItemState&) = default;
};

// Inclusive block range [first_block, last_block].
struct WindowRef {
  std::size_t first_block = 0;
  std::size_t last_block = 0;

  std::size_t width() const { return last_block - first_block + 1; }
  friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

// Window ending at block j: [max(0, j - K + 1), j].
WindowRef window_at(std::size_t j, std::size_t window);
// (j + 1) % K == 0 or j == n_total - 1
bool is_review_point(std::size_t j, std::size_t window, std::size_t n_total);

struct Candidate {
  TokenSeq seq;  // full item sequence with this candidate's window
  WindowRemaskPlan plan;
  std::vector<double> scores;
  double metric = 0.0;

  std::vector<TokenId> window_tokens(const WindowRef& w) const;
};

struct CandidateSet {
  std::size_t item = 0;
  std::size_t review_block = 0;  // j at which the window was reviewed
  WindowRef window;
  std::vector<Candidate> candidates;
  bool scored = false;
};

struct Selection {
  bool retained = false;
  std::optional<std::size_t> candidate;  // winner index when !retained
  double metric = 0.0;                    // metric of the winner (or the original)
  std::optional<double> original_metric;  // set when the original competed
};

struct EngineOptions {
  Execution exec = Execution::Serial;
  int threads = 0;
};

// Thrown by run_r3 when a model contract (or anything else) fails mid-run.
// Carries the transcripts recorded so far; `cause` is the original error.
class RunAborted : public Error {
 public:
  RunAborted(const std::string& what, std::exception_ptr cause, std::vector<Transcript> partial)
      : Error(what), cause_(std::move(cause)), partial_(std::move(partial)) {}

  const std::exception_ptr& cause() const { return cause_; }
  const std::vector<Transcript>& partial_transcripts() const { return partial_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  std::exception_ptr cause_;
  std::vector<Transcript> partial_;
};

double window_metric(std::span<const double> scores, Metric metric);

ItemState make_item(std::vector<TokenId> prompt, const R3Config& cfg, TokenId mask_id);

// Appends one freshly generated block (block index = current n_blocks) and an
// Unfilled ledger placeholder.
void extend_block(ItemState& state, std::size_t item, Denoiser& dn, const R3Config& cfg, CallAccountant& acct);

// Scores every block of window_at(j) for every item in one batched PRM call.
// Fills the ledgers and returns the window scores per item.
std::vector<std::vector<double>> review_window(std::span<ItemState> items, std::size_t j, ProcessReward& prm,
                                               const R3Config& cfg, CallAccountant& acct);

// min(scores) < tau, strictly.
bool needs_refinement(std::span<const double> scores, double tau);

// Draws n_samples independent remask plans over the window and re-denoises
// each candidate block by block, left to right.
CandidateSet propose_candidates(ItemState& state, std::size_t item, std::size_t j, std::span<const double> scores,
                                Denoiser& dn, const R3Config& cfg, CallAccountant& acct);

// Scores every block of every candidate of every set in one batched PRM call.
void score_candidates(std::span<CandidateSet> sets, ProcessReward& prm, const R3Config& cfg, CallAccountant& acct);

// Picks the best candidate under cfg.metric (the original competes first when
// cfg.retain_original) and writes the winner into the sequence and ledger.
Selection select_best(ItemState& state, const CandidateSet& set, std::span<const double> original_scores,
                      const R3Config& cfg);

struct RunResult {
  std::vector<ItemState> items;
  CallCounts counts;
};

// Full windowed review/remask/refine loop over a batch of prompts.
RunResult run_r3(std::span<const std::vector<TokenId>> prompts, TokenId mask_id, Denoiser& dn, ProcessReward& prm,
                 const R3Config& cfg, const EngineOptions& opts = {});

}  // namespace r3
