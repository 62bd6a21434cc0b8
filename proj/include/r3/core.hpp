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
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace r3 {

using TokenId = std::int32_t;

// Error taxonomy. Every failure surfaced by the engine is one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch: wrong block length, out-of-range index, misaligned plan.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation precondition.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

// A model (or adapter) broke its behavioral contract. Never repaired.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Model server unreachable after the configured retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

enum class Metric { Product, Min };
enum class PositionPolicy { Uniform, Prefix };

std::string_view to_string(Metric m);
std::string_view to_string(PositionPolicy p);
Metric parse_metric(std::string_view s);
PositionPolicy parse_position_policy(std::string_view s);

/// Prompt followed by fixed-length generation blocks.
///
/// The token vector always holds prompt_len + n_blocks * block_len entries and
/// the prompt region never contains the mask id. Generated positions may hold
/// the mask id transiently (during remasking).
class TokenSeq {
 public:
  TokenSeq(std::vector<TokenId> prompt, std::size_t block_len, TokenId mask_id);

  void append_block(std::span<const TokenId> block);
  // Appends block_len mask ids; the denoiser fills them next.
  void append_masked_block();
  std::span<const TokenId> block_slice(std::size_t b) const;

  // Overwrites blocks [first_block, first_block + tokens.size() / block_len).
  void replace_blocks(std::size_t first_block, std::span<const TokenId> tokens);

  // Writes a single generated position. Prompt positions are immutable.
  void set_token(std::size_t pos, TokenId id);

  // Copy holding the prompt and blocks [0, b].
  TokenSeq prefix_through(std::size_t b) const;

  std::span<const TokenId> tokens() const { return tokens_; }
  std::span<const TokenId> generated() const {
    return std::span<const TokenId>(tokens_).subspan(prompt_len_);
  }
  std::span<const TokenId> context_before(std::size_t b) const;

  std::size_t prompt_len() const { return prompt_len_; }
  std::size_t block_len() const { return block_len_; }
  std::size_t n_blocks() const { return n_blocks_; }
  std::size_t size() const { return tokens_.size(); }
  TokenId mask_id() const { return mask_id_; }

  std::size_t block_start(std::size_t b) const { return prompt_len_ + b * block_len_; }
  std::size_t count_masks() const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<TokenId> tokens_;
  std::size_t prompt_len_;
  std::size_t block_len_;
  std::size_t n_blocks_ = 0;
  TokenId mask_id_;
};

/// Hyperparameters of one R3 run. Defaults are the reference operating point
/// (16 blocks of 32 tokens, 128 demasking steps, temperature 0.8).
struct R3Config {
  std::size_t n_total = 16;
  std::size_t block_len = 32;
  std::size_t window = 8;
  double tau_thresh = 0.8;
  std::size_t n_samples = 5;
  double beta_i = 0.8;
  double alpha_b = 10.0;
  double p_min = 0.01;
  double epsilon = 1e-8;
  double temperature = 0.8;
  std::size_t demask_steps = 128;
  Metric metric = Metric::Product;
  bool retain_original = true;
  PositionPolicy position_policy = PositionPolicy::Uniform;
  std::uint64_t seed = 0;

  // Throws ConfigError on the first invalid field.
  void validate() const;

  // max(1, demask_steps / n_total)
  std::size_t steps_per_block() const;

  nlohmann::json to_json() const;
};

/// Per-item PRM scores, one entry per generated block. Entries start Unfilled
/// and are filled when their block is reviewed. Unfilled entries take no part
/// in any decision.
class ScoreLedger {
 public:
  void append_placeholder() { scores_.emplace_back(); }
  void fill(std::size_t b, double score);
  const std::optional<double>& at(std::size_t b) const;
  std::size_t size() const { return scores_.size(); }
  std::size_t unfilled_count() const;
  std::vector<double> window_scores(std::size_t first, std::size_t last) const;
  const std::vector<std::optional<double>>& entries() const { return scores_; }

  friend bool operator==(const ScoreLedger&, const ScoreLedger&) = default;

 private:
  std::vector<std::optional<double>> scores_;
};

enum class EventKind { Extend, Review, Trigger, Remask, Propose, ScoreCandidates, Select, Retain };

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct Event {
  EventKind kind;
  std::size_t item = 0;
  std::size_t first_block = 0;
  std::size_t last_block = 0;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const Event&, const Event&) = default;
};

class Transcript {
 public:
  void push(Event e) { events_.push_back(std::move(e)); }
  const std::vector<Event>& events() const { return events_; }
  std::size_t count(EventKind k) const;
  bool empty() const { return events_.empty(); }

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<Event> events_;
};

// Checks the ordering invariants: Extend block indices nondecreasing per item,
// and every Trigger closed by exactly one Select or Retain for the same window.
// Returns a description of the first violation, if any.
std::optional<std::string> check_transcript(const Transcript& t);

}  // namespace r3
