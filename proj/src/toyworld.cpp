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

#include "r3/toyworld.hpp"

#include <algorithm>
#include <map>

#include "r3/rng.hpp"

namespace r3::toy {

namespace {

constexpr int kMaxStepRetries = 64;

TokenId op_token(OpKind k) {
  switch (k) {
    case OpKind::Add:
      return kAdd;
    case OpKind::Sub:
      return kSub;
    case OpKind::Mul:
      return kMul;
  }
  return kPad;
}

std::optional<OpKind> op_from_token(TokenId t) {
  if (t == kAdd) return OpKind::Add;
  if (t == kSub) return OpKind::Sub;
  if (t == kMul) return OpKind::Mul;
  return std::nullopt;
}

int pow10(std::size_t n) {
  int m = 1;
  for (std::size_t i = 0; i < n; ++i) m *= 10;
  return m;
}

void put_digits(std::vector<TokenId>& out, std::size_t at, int value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    out[at + width - 1 - i] = static_cast<TokenId>(value % 10);
    value /= 10;
  }
}

std::optional<int> read_digits(std::span<const TokenId> in, std::size_t at, std::size_t width) {
  int v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const TokenId t = in[at + i];
    if (t < 0 || t > 9) return std::nullopt;
    v = v * 10 + t;
  }
  return v;
}

std::size_t block_of(std::size_t pos, std::size_t prompt_len, std::size_t block_len) {
  return (pos - prompt_len) / block_len;
}

}  // namespace

int apply(const Op& op, int value) {
  switch (op.kind) {
    case OpKind::Add:
      return value + op.operand;
    case OpKind::Sub:
      return value - op.operand;
    case OpKind::Mul:
      return value * op.operand;
  }
  return value;
}

int ChainTask::modulus() const { return pow10(params.digit_width); }

std::vector<TokenId> ChainTask::prompt() const {
  std::vector<TokenId> p(params.block_len, kPad);
  p[0] = kStep;
  p[1] = kEq;
  put_digits(p, 2, start_value, params.digit_width);
  return p;
}

std::vector<TokenId> ChainTask::render_block(std::size_t b, int value) const {
  return render_step(ops.at(b), value, params.digit_width, params.block_len);
}

std::vector<TokenId> render_step(const Op& op, int value, std::size_t digit_width, std::size_t block_len) {
  if (block_len < 3 + 2 * digit_width) throw StructuralError("block too short for the step layout");
  std::vector<TokenId> out(block_len, kPad);
  out[0] = kStep;
  out[1] = op_token(op.kind);
  put_digits(out, 2, op.operand, digit_width);
  out[2 + digit_width] = kEq;
  put_digits(out, 3 + digit_width, value, digit_width);
  return out;
}

std::optional<DecodedStep> decode_step(std::span<const TokenId> block, std::size_t digit_width) {
  if (block.size() < 3 + 2 * digit_width) return std::nullopt;
  if (block[0] != kStep || block[2 + digit_width] != kEq) return std::nullopt;
  const auto kind = op_from_token(block[1]);
  const auto operand = read_digits(block, 2, digit_width);
  const auto value = read_digits(block, 3 + digit_width, digit_width);
  if (!kind || !operand || !value) return std::nullopt;
  for (std::size_t i = 3 + 2 * digit_width; i < block.size(); ++i) {
    if (block[i] != kPad) return std::nullopt;
  }
  return DecodedStep{{*kind, *operand}, *value};
}

std::optional<int> decode_prompt(std::span<const TokenId> prompt, std::size_t digit_width) {
  if (prompt.size() < 2 + digit_width || prompt[0] != kStep || prompt[1] != kEq) return std::nullopt;
  return read_digits(prompt, 2, digit_width);
}

ChainTask make_task(std::uint64_t seed, const TaskParams& params) {
  if (params.digit_width == 0 || params.digit_width > 6) throw StructuralError("digit width must be in [1,6]");
  if (params.block_len < 3 + 2 * params.digit_width) {
    throw StructuralError("block_len " + std::to_string(params.block_len) + " too short for digit width " +
                          std::to_string(params.digit_width));
  }
  ChainTask task;
  task.seed = seed;
  task.params = params;
  const int m = task.modulus();
  const int small = std::min(m - 1, 99);
  RngStream rng(seed, {0, 0, Phase::Test, 0, 0x7a5c});

  task.start_value = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m)));
  int value = task.start_value;
  for (std::size_t j = 0; j < params.n_total; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxStepRetries && !placed; ++attempt) {
      Op op;
      switch (rng.uniform_below(3)) {
        case 0:
          op = {OpKind::Add, 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(small)))};
          break;
        case 1:
          op = {OpKind::Sub, 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(small)))};
          break;
        default:
          op = {OpKind::Mul, 2 + static_cast<int>(rng.uniform_below(8))};
          break;
      }
      const int next = apply(op, value);
      if (next < 0 || next >= m) continue;
      task.ops.push_back(op);
      task.truth.push_back(next);
      value = next;
      placed = true;
    }
    if (!placed) throw StructuralError("make_task: no in-range step found at block " + std::to_string(j));
  }
  return task;
}

// ---------------------------------------------------------------------------

NoisyOracleDenoiser::NoisyOracleDenoiser(const ChainTask& task, double p_err) : task_(task), p_err_(p_err) {
  if (!(p_err >= 0.0 && p_err <= 1.0)) throw ConfigError("p_err must lie in [0,1]");
}

std::vector<TokenId> NoisyOracleDenoiser::denoise(const TokenSeq& seq, std::span<const std::size_t> editable,
                                                  const DenoiseParams&, RngStream& rng) {
  std::vector<TokenId> out(seq.tokens().begin(), seq.tokens().end());
  // block -> masked in-block offsets, in ascending block order
  std::map<std::size_t, std::vector<std::size_t>> masked;
  for (std::size_t pos : editable) {
    if (pos < seq.prompt_len() || pos >= out.size() || out[pos] != seq.mask_id()) continue;
    const std::size_t b = block_of(pos, seq.prompt_len(), seq.block_len());
    masked[b].push_back(pos - seq.block_start(b));
  }
  const int m = task_.modulus();
  for (const auto& [b, offsets] : masked) {
    if (b >= task_.truth.size()) throw PreconditionViolation("oracle denoiser: block beyond the task length");
    const bool value_masked =
        std::any_of(offsets.begin(), offsets.end(), [&](std::size_t off) { return task_.is_value_offset(off); });
    int target = task_.truth[b];
    if (value_masked && rng.uniform01() < p_err_) {
      int wrong = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m - 1)));
      if (wrong >= target) ++wrong;
      target = wrong;
    }
    const auto reference = task_.render_block(b, target);
    for (std::size_t off : offsets) out[seq.block_start(b) + off] = reference[off];
  }
  return out;
}

// ---------------------------------------------------------------------------

OracleProcessReward::OracleProcessReward(const ChainTask& task, PrmParams params) : task_(task), params_(params) {
  if (!(params_.hi >= 0.0 && params_.hi <= 1.0 && params_.lo >= 0.0 && params_.lo <= 1.0)) {
    throw ConfigError("PRM hi/lo must lie in [0,1]");
  }
  if (params_.sigma < 0.0) throw ConfigError("PRM sigma must be >= 0");
}

double OracleProcessReward::score(std::span<const TokenId> context, std::span<const TokenId> block, RngStream& rng) {
  const std::size_t prompt_len = task_.prompt_len();
  const std::size_t len = task_.params.block_len;
  const std::size_t digits = task_.params.digit_width;
  if (context.size() < prompt_len || (context.size() - prompt_len) % len != 0) {
    throw PreconditionViolation("oracle PRM: context is not block aligned");
  }
  const std::size_t b = (context.size() - prompt_len) / len;
  if (b >= task_.ops.size()) throw PreconditionViolation("oracle PRM: block beyond the task length");

  std::optional<int> expected;
  if (params_.context == PrmContext::Truth) {
    expected = task_.truth[b];
  } else {
    std::optional<int> prev;
    if (b == 0) {
      prev = decode_prompt(context.first(prompt_len), digits);
    } else if (auto step = decode_step(context.subspan(prompt_len + (b - 1) * len, len), digits)) {
      prev = step->value;
    }
    if (prev) expected = apply(task_.ops[b], *prev);
  }

  const auto got = decode_step(block, digits);
  const bool ok = expected && got && got->op == task_.ops[b] && got->value == *expected;
  double s = ok ? params_.hi : params_.lo;
  if (params_.mode == PrmMode::Noisy && params_.sigma > 0.0) {
    double z;
    do {
      z = rng.normal();
    } while (z < -2.0 || z > 2.0);
    s = std::clamp(s + params_.sigma * z, 0.0, 1.0);
  }
  return s;
}

// ---------------------------------------------------------------------------

double Grade::block_accuracy() const {
  if (block_correct.empty()) return 0.0;
  return static_cast<double>(std::count(block_correct.begin(), block_correct.end(), true)) /
         static_cast<double>(block_correct.size());
}

Grade grade(const TokenSeq& seq, const ChainTask& task, Grading rule) {
  if (seq.n_blocks() != task.params.n_total) {
    throw StructuralError("grade: sequence has " + std::to_string(seq.n_blocks()) + " blocks, task has " +
                          std::to_string(task.params.n_total));
  }
  Grade g;
  for (std::size_t b = 0; b < seq.n_blocks(); ++b) {
    const auto step = decode_step(seq.block_slice(b), task.params.digit_width);
    if (!step) ++g.undecodable;
    g.block_correct.push_back(step && step->op == task.ops[b] && step->value == task.truth[b]);
  }
  if (rule == Grading::FinalBlock) {
    g.correct = g.block_correct.back();
  } else {
    g.correct = std::all_of(g.block_correct.begin(), g.block_correct.end(), [](bool c) { return c; });
  }
  return g;
}

std::string_view to_string(PrmMode m) { return m == PrmMode::Exact ? "exact" : "noisy"; }
std::string_view to_string(PrmContext c) { return c == PrmContext::Truth ? "truth" : "contextual"; }
std::string_view to_string(Grading g) { return g == Grading::FinalBlock ? "final" : "all"; }

PrmMode parse_prm_mode(std::string_view s) {
  if (s == "exact") return PrmMode::Exact;
  if (s == "noisy") return PrmMode::Noisy;
  throw ConfigError("unknown prm_mode '" + std::string(s) + "' (expected exact|noisy)");
}

PrmContext parse_prm_context(std::string_view s) {
  if (s == "truth") return PrmContext::Truth;
  if (s == "contextual") return PrmContext::Contextual;
  throw ConfigError("unknown prm_context '" + std::string(s) + "' (expected truth|contextual)");
}

Grading parse_grading(std::string_view s) {
  if (s == "final") return Grading::FinalBlock;
  if (s == "all") return Grading::AllBlocks;
  throw ConfigError("unknown grading '" + std::string(s) + "' (expected final|all)");
}

}  // namespace r3::toy
