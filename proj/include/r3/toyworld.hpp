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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "r3/core.hpp"
#include "r3/model_interface.hpp"

// Synthetic arithmetic-chain task with oracle models. Each generated block
// states one step "op operand = value"; the task is solved when the final
// value is right. Everything is checkable in closed form.
namespace r3::toy {

// Vocabulary: digits 0-9 are their own ids.
inline constexpr TokenId kStep = 10;
inline constexpr TokenId kAdd = 11;
inline constexpr TokenId kSub = 12;
inline constexpr TokenId kMul = 13;
inline constexpr TokenId kEq = 14;
inline constexpr TokenId kPad = 15;
inline constexpr TokenId kMaskId = 16;  // max vocabulary id + 1

enum class OpKind { Add, Sub, Mul };

struct Op {
  OpKind kind = OpKind::Add;
  int operand = 0;

  friend bool operator==(const Op&, const Op&) = default;
};

int apply(const Op& op, int value);

struct TaskParams {
  std::size_t n_total = 16;
  std::size_t block_len = 32;
  std::size_t digit_width = 3;
};

/// Block layout: [STEP][op][operand digits][EQ][value digits][PAD ...].
/// The prompt is [STEP][EQ][start digits][PAD ...], one block long.
struct ChainTask {
  std::uint64_t seed = 0;
  TaskParams params;
  int start_value = 0;
  std::vector<Op> ops;
  std::vector<int> truth;

  int modulus() const;  // 10^digit_width; values live in [0, modulus)
  std::size_t prompt_len() const { return params.block_len; }
  std::vector<TokenId> prompt() const;
  std::vector<TokenId> render_block(std::size_t b, int value) const;
  std::vector<TokenId> render_truth(std::size_t b) const { return render_block(b, truth.at(b)); }

  // In-block offsets holding the value digits.
  std::size_t value_offset() const { return 3 + params.digit_width; }
  bool is_value_offset(std::size_t off) const {
    return off >= value_offset() && off < value_offset() + params.digit_width;
  }
};

// Deterministic in the seed. Throws StructuralError when the block is too
// short for the layout or when no in-range step can be found.
ChainTask make_task(std::uint64_t seed, const TaskParams& params);

std::vector<TokenId> render_step(const Op& op, int value, std::size_t digit_width, std::size_t block_len);

struct DecodedStep {
  Op op;
  int value = 0;
};

std::optional<DecodedStep> decode_step(std::span<const TokenId> block, std::size_t digit_width);
std::optional<int> decode_prompt(std::span<const TokenId> prompt, std::size_t digit_width);

/// Oracle infilling model. For each block with masked positions: if any value
/// digit is masked the block value is redrawn (the true value with probability
/// 1 - p_err, otherwise a uniformly chosen wrong value of the same width) and
/// the masked positions are filled from that rendering. Masked structural
/// tokens are always filled correctly. Unmasked tokens are never touched, so a
/// partially masked value can end up as a mix of old and new digits.
class NoisyOracleDenoiser : public Denoiser {
 public:
  NoisyOracleDenoiser(const ChainTask& task, double p_err);

  std::vector<TokenId> denoise(const TokenSeq& seq, std::span<const std::size_t> editable,
                               const DenoiseParams& params, RngStream& rng) override;

 private:
  const ChainTask& task_;
  double p_err_;
};

enum class PrmMode { Exact, Noisy };
// Truth: the expected value comes from the task. Contextual: it is recomputed
// from the value stated by the previous block in the context.
enum class PrmContext { Truth, Contextual };

struct PrmParams {
  PrmMode mode = PrmMode::Exact;
  PrmContext context = PrmContext::Truth;
  double hi = 0.95;
  double lo = 0.1;
  double sigma = 0.1;
};

class OracleProcessReward : public ProcessReward {
 public:
  OracleProcessReward(const ChainTask& task, PrmParams params);

  double score(std::span<const TokenId> context, std::span<const TokenId> block, RngStream& rng) override;

 private:
  const ChainTask& task_;
  PrmParams params_;
};

enum class Grading { FinalBlock, AllBlocks };

struct Grade {
  std::vector<bool> block_correct;
  std::size_t undecodable = 0;
  bool correct = false;

  double block_accuracy() const;
};

Grade grade(const TokenSeq& seq, const ChainTask& task, Grading rule = Grading::FinalBlock);

std::string_view to_string(PrmMode m);
std::string_view to_string(PrmContext c);
std::string_view to_string(Grading g);
PrmMode parse_prm_mode(std::string_view s);
PrmContext parse_prm_context(std::string_view s);
Grading parse_grading(std::string_view s);

}  // namespace r3::toy
