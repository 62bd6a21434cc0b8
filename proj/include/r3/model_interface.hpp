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

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "r3/core.hpp"
#include "r3/rng.hpp"

namespace r3 {

struct DenoiseParams {
  double temperature = 0.8;
  std::size_t steps = 8;
};

/// Masked-infilling model. Given a sequence and the positions it may rewrite,
/// returns the full token vector with every masked editable position filled.
/// Positions outside `editable` must come back bit-identical.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual std::vector<TokenId> denoise(const TokenSeq& seq, std::span<const std::size_t> editable,
                                       const DenoiseParams& params, RngStream& rng) = 0;

  // False when the implementation must not be entered from several threads.
  virtual bool concurrent_safe() const { return true; }
};

struct ScoreRequest {
  std::span<const TokenId> context;
  std::span<const TokenId> block;
  StreamKey stream;
};

/// Process reward model: rates one block given everything before it.
class ProcessReward {
 public:
  virtual ~ProcessReward() = default;

  virtual double score(std::span<const TokenId> context, std::span<const TokenId> block, RngStream& rng) = 0;

  // Scores a whole request batch. `seed` keys the per-request streams. The
  // default scores one by one; remote adapters override this with a single
  // round trip.
  virtual std::vector<double> score_batch(std::span<const ScoreRequest> requests, std::uint64_t seed);

  virtual bool concurrent_safe() const { return true; }
};

struct CallCounts {
  std::uint64_t batched_prm_invocations = 0;
  std::uint64_t block_scorings = 0;
  std::uint64_t denoiser_invocations = 0;
  std::uint64_t denoiser_token_updates = 0;

  CallCounts& operator+=(const CallCounts& o);
  friend CallCounts operator+(CallCounts a, const CallCounts& b) { return a += b; }
  friend bool operator==(const CallCounts&, const CallCounts&) = default;

  nlohmann::json to_json() const;
};

/// Thread-safe invocation counters. A batched PRM invocation is one submitted
/// request batch; a block scoring is one (context, block) pair inside it.
class CallAccountant {
 public:
  CallAccountant() = default;
  CallAccountant(const CallAccountant&) = delete;
  CallAccountant& operator=(const CallAccountant&) = delete;

  void record_prm_batch(std::size_t pairs) {
    batched_prm_invocations_.fetch_add(1, std::memory_order_relaxed);
    block_scorings_.fetch_add(pairs, std::memory_order_relaxed);
  }
  void record_denoise(std::size_t filled) {
    denoiser_invocations_.fetch_add(1, std::memory_order_relaxed);
    denoiser_token_updates_.fetch_add(filled, std::memory_order_relaxed);
  }

  CallCounts snapshot() const;

 private:
  std::atomic<std::uint64_t> batched_prm_invocations_{0};
  std::atomic<std::uint64_t> block_scorings_{0};
  std::atomic<std::uint64_t> denoiser_invocations_{0};
  std::atomic<std::uint64_t> denoiser_token_updates_{0};
};

// One batched PRM invocation. Every returned score is checked to lie in [0,1];
// anything else is a ContractViolation. Blocks must all have `block_len` tokens.
std::vector<double> score_blocks(ProcessReward& prm, std::span<const ScoreRequest> items, std::size_t block_len,
                                 std::uint64_t seed, CallAccountant& acct);

// Runs the denoiser on `editable` and enforces the infilling contract: every
// mask must lie inside `editable` beforehand, none may remain there afterwards,
// and nothing outside `editable` may change.
TokenSeq denoise_region(Denoiser& dn, const TokenSeq& seq, std::span<const std::size_t> editable,
                        const DenoiseParams& params, RngStream& rng, CallAccountant& acct);

}  // namespace r3
