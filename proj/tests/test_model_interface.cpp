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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <thread>

#include "r3/model_interface.hpp"
#include "r3/parallel.hpp"
#include "support.hpp"

using namespace r3;
using r3::testing::ConstantReward;
using r3::testing::FnDenoiser;
using r3::testing::RandomFillDenoiser;

namespace {

TokenSeq seq_with_blocks(std::size_t n, std::size_t bl, TokenId mask) {
  TokenSeq s({1, 2}, bl, mask);
  std::vector<TokenId> block(bl, 4);
  for (std::size_t i = 0; i < n; ++i) s.append_block(block);
  return s;
}

}  // namespace

TEST_CASE("one batched call with 8 pairs") {
  const TokenSeq s = seq_with_blocks(8, 4, 9);
  std::vector<ScoreRequest> req;
  for (std::size_t b = 0; b < 8; ++b) req.push_back({s.context_before(b), s.block_slice(b), {0, b, Phase::Review, 7, 0}});
  ConstantReward prm(0.6);
  CallAccountant acct;
  const auto scores = score_blocks(prm, req, 4, 0, acct);
  CHECK(scores.size() == 8);
  const auto c = acct.snapshot();
  CHECK(c.batched_prm_invocations == 1);
  CHECK(c.block_scorings == 8);
}

TEST_CASE("scores outside [0,1] are contract violations") {
  const TokenSeq s = seq_with_blocks(1, 4, 9);
  std::vector<ScoreRequest> req{{s.context_before(0), s.block_slice(0), {}}};
  CallAccountant acct;
  ConstantReward high(1.2);
  CHECK_THROWS_AS(score_blocks(high, req, 4, 0, acct), ContractViolation);
  ConstantReward low(-0.01);
  CHECK_THROWS_AS(score_blocks(low, req, 4, 0, acct), ContractViolation);
  ConstantReward nan(std::nan(""));
  CHECK_THROWS_AS(score_blocks(nan, req, 4, 0, acct), ContractViolation);
}

TEST_CASE("score_blocks checks block length") {
  const TokenSeq s = seq_with_blocks(1, 4, 9);
  std::vector<ScoreRequest> req{{s.context_before(0), s.block_slice(0).subspan(0, 3), {}}};
  CallAccountant acct;
  ConstantReward prm(0.5);
  CHECK_THROWS_AS(score_blocks(prm, req, 4, 0, acct), PreconditionViolation);
}

TEST_CASE("empty editable region is an identity call that still counts") {
  const TokenSeq s = seq_with_blocks(2, 4, 9);
  RandomFillDenoiser dn(9);
  CallAccountant acct;
  RngStream rng(1);
  const TokenSeq out = denoise_region(dn, s, {}, {}, rng, acct);
  CHECK(out == s);
  CHECK(acct.snapshot().denoiser_invocations == 1);
  CHECK(acct.snapshot().denoiser_token_updates == 0);
}

TEST_CASE("a fully masked 32-token block is filled") {
  TokenSeq s({1, 2}, 32, 16);
  s.append_masked_block();
  std::vector<std::size_t> editable(32);
  for (std::size_t i = 0; i < 32; ++i) editable[i] = s.block_start(0) + i;
  RandomFillDenoiser dn(16);
  CallAccountant acct;
  RngStream rng(2);
  const TokenSeq out = denoise_region(dn, s, editable, {}, rng, acct);
  CHECK(out.count_masks() == 0);
  CHECK(acct.snapshot().denoiser_token_updates == 32);
}

TEST_CASE("denoiser contract checks") {
  TokenSeq s({1, 2}, 4, 9);
  s.append_masked_block();
  const std::vector<std::size_t> editable{2, 3, 4, 5};
  CallAccountant acct;
  RngStream rng(3);

  SUBCASE("changing a non-editable token") {
    FnDenoiser dn([](const TokenSeq& q, std::span<const std::size_t>) {
      std::vector<TokenId> out(q.tokens().begin(), q.tokens().end());
      for (auto& t : out) t = t == q.mask_id() ? 0 : t;
      out[0] = 7;
      return out;
    });
    CHECK_THROWS_AS(denoise_region(dn, s, editable, {}, rng, acct), ContractViolation);
  }
  SUBCASE("leaving a mask") {
    FnDenoiser dn([](const TokenSeq& q, std::span<const std::size_t>) {
      return std::vector<TokenId>(q.tokens().begin(), q.tokens().end());
    });
    CHECK_THROWS_AS(denoise_region(dn, s, editable, {}, rng, acct), ContractViolation);
  }
  SUBCASE("wrong output length") {
    FnDenoiser dn([](const TokenSeq&, std::span<const std::size_t>) { return std::vector<TokenId>{0}; });
    CHECK_THROWS_AS(denoise_region(dn, s, editable, {}, rng, acct), ContractViolation);
  }
  SUBCASE("mask outside the editable region") {
    RandomFillDenoiser dn(9);
    const std::vector<std::size_t> partial{2, 3};
    CHECK_THROWS_AS(denoise_region(dn, s, partial, {}, rng, acct), PreconditionViolation);
  }
  SUBCASE("editable position in the prompt") {
    RandomFillDenoiser dn(9);
    const std::vector<std::size_t> bad{0, 2, 3, 4, 5};
    CHECK_THROWS_AS(denoise_region(dn, s, bad, {}, rng, acct), PreconditionViolation);
  }
}

TEST_CASE("property: infilling locality on random regions") {
  RngStream rng(77);
  RandomFillDenoiser dn(20);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t bl = 1 + rng.uniform_below(8);
    const std::size_t nb = 1 + rng.uniform_below(6);
    TokenSeq s({3, 3, 3}, bl, 20);
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<TokenId> x(bl);
      for (auto& t : x) t = static_cast<TokenId>(rng.uniform_below(20));
      s.append_block(x);
    }
    std::vector<std::size_t> editable;
    for (std::size_t p = s.prompt_len(); p < s.size(); ++p) {
      if (rng.uniform_below(3) == 0) {
        editable.push_back(p);
        if (rng.uniform_below(2) == 0) s.set_token(p, 20);
      }
    }
    CallAccountant acct;
    RngStream call(trial);
    const TokenSeq out = denoise_region(dn, s, editable, {}, call, acct);
    for (std::size_t p = 0; p < s.size(); ++p) {
      if (std::find(editable.begin(), editable.end(), p) == editable.end()) REQUIRE(out.tokens()[p] == s.tokens()[p]);
    }
    REQUIRE(out.count_masks() == 0);
  }
}

TEST_CASE("property: accountant is linear and safe under concurrent increments") {
  CallAccountant one;
  CallCounts expected;
  RngStream rng(5);
  for (int run = 0; run < 2; ++run) {
    CallAccountant own;
    for (int k = 0; k < 50; ++k) {
      const std::size_t pairs = rng.uniform_below(10);
      const std::size_t filled = rng.uniform_below(10);
      own.record_prm_batch(pairs);
      one.record_prm_batch(pairs);
      own.record_denoise(filled);
      one.record_denoise(filled);
    }
    expected += own.snapshot();
  }
  CHECK(one.snapshot() == expected);

  CallAccountant shared;
  parallel_for(
      1000, Execution::Parallel, [&](std::size_t) { shared.record_prm_batch(3); }, 4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int k = 0; k < 1000; ++k) shared.record_denoise(2);
    });
  }
  for (auto& t : threads) t.join();
  const auto c = shared.snapshot();
  CHECK(c.batched_prm_invocations == 1000);
  CHECK(c.block_scorings == 3000);
  CHECK(c.denoiser_invocations == 4000);
  CHECK(c.denoiser_token_updates == 8000);
}

TEST_CASE("default score_batch scores one by one with keyed streams") {
  r3::testing::FnReward prm([](std::span<const TokenId> c, std::span<const TokenId>) {
    return static_cast<double>(c.size()) / 100.0;
  });
  const TokenSeq s = seq_with_blocks(3, 4, 9);
  std::vector<ScoreRequest> req;
  for (std::size_t b = 0; b < 3; ++b) req.push_back({s.context_before(b), s.block_slice(b), {}});
  const auto out = prm.score_batch(req, 0);
  CHECK(out == std::vector<double>{0.02, 0.06, 0.10});
}
