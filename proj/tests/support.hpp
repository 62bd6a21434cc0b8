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

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "r3/model_interface.hpp"

namespace r3::testing {

class ConstantReward : public ProcessReward {
 public:
  explicit ConstantReward(double v) : v_(v) {}
  double score(std::span<const TokenId>, std::span<const TokenId>, RngStream&) override { return v_; }

 private:
  double v_;
};

// Scores through an arbitrary function of (context, block).
class FnReward : public ProcessReward {
 public:
  using Fn = std::function<double(std::span<const TokenId>, std::span<const TokenId>)>;
  explicit FnReward(Fn fn) : fn_(std::move(fn)) {}
  double score(std::span<const TokenId> c, std::span<const TokenId> b, RngStream&) override { return fn_(c, b); }

 private:
  Fn fn_;
};

// Fills every editable mask with a seeded random token in [0, vocab).
class RandomFillDenoiser : public Denoiser {
 public:
  explicit RandomFillDenoiser(TokenId vocab) : vocab_(vocab) {}
  std::vector<TokenId> denoise(const TokenSeq& seq, std::span<const std::size_t> editable, const DenoiseParams&,
                               RngStream& rng) override {
    std::vector<TokenId> out(seq.tokens().begin(), seq.tokens().end());
    for (std::size_t p : editable) {
      if (out[p] == seq.mask_id()) out[p] = static_cast<TokenId>(rng.uniform_below(static_cast<std::uint64_t>(vocab_)));
    }
    return out;
  }

 private:
  TokenId vocab_;
};

// Returns whatever the wrapped function makes of the input; used to break contracts.
class FnDenoiser : public Denoiser {
 public:
  using Fn = std::function<std::vector<TokenId>(const TokenSeq&, std::span<const std::size_t>)>;
  explicit FnDenoiser(Fn fn) : fn_(std::move(fn)) {}
  std::vector<TokenId> denoise(const TokenSeq& seq, std::span<const std::size_t> editable, const DenoiseParams&,
                               RngStream&) override {
    return fn_(seq, editable);
  }

 private:
  Fn fn_;
};

// Binomial standard error of a rate p over n draws.
inline double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace r3::testing
