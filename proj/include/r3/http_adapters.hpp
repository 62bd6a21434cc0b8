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

#include <string>
#include <vector>

#include "r3/model_interface.hpp"

namespace r3 {

struct HttpOptions {
  std::string endpoint;  // scheme://host:port[/base]
  int timeout_ms = 30000;
  int retries = 2;  // extra attempts after the first
};

struct DenoiseRequest {
  std::vector<TokenId> tokens;
  std::vector<std::size_t> editable;
  double temperature = 0.0;
  std::size_t steps = 1;
  std::string stream_key;
};

/// Denoiser backed by a model server.
///   POST {base}/denoise        {tokens, editable, temperature, steps, stream_key} -> {tokens}
///   POST {base}/denoise_batch  [request, ...] -> [response, ...]
/// Server contract violations are caught by denoise_region on the client side.
class HttpDenoiser : public Denoiser {
 public:
  explicit HttpDenoiser(HttpOptions opts);

  std::vector<TokenId> denoise(const TokenSeq& seq, std::span<const std::size_t> editable,
                               const DenoiseParams& params, RngStream& rng) override;
  std::vector<std::vector<TokenId>> denoise_batch(const std::vector<DenoiseRequest>& requests);

 private:
  HttpOptions opts_;
};

/// PRM backed by a model server.
///   POST {base}/score        {context, block, stream_key} -> {score}
///   POST {base}/score_batch  [request, ...] -> [response, ...]
class HttpProcessReward : public ProcessReward {
 public:
  explicit HttpProcessReward(HttpOptions opts);

  double score(std::span<const TokenId> context, std::span<const TokenId> block, RngStream& rng) override;
  std::vector<double> score_batch(std::span<const ScoreRequest> requests, std::uint64_t seed) override;

 private:
  HttpOptions opts_;
};

}  // namespace r3
