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

#include "r3/http_adapters.hpp"

#include "httplib.h"

namespace r3 {

namespace {

struct Endpoint {
  std::string host;  // scheme://host:port
  std::string base;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  if (url.empty()) throw ConfigError("HTTP endpoint is empty");
  const auto scheme = url.find("://");
  const auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  Endpoint ep{url.substr(0, path_at), path_at == std::string::npos ? "" : url.substr(path_at)};
  while (!ep.base.empty() && ep.base.back() == '/') ep.base.pop_back();
  return ep;
}

nlohmann::json post_json(const HttpOptions& opts, const std::string& path, const nlohmann::json& body) {
  const Endpoint ep = split_endpoint(opts.endpoint);
  const std::string payload = body.dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    httplib::Client cli(ep.host);
    const auto timeout = std::chrono::milliseconds(opts.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(ep.base + path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ContractViolation(path + ": unparsable response: " + e.what());
    }
  }
  throw TransportError(opts.endpoint + path + " failed after " + std::to_string(opts.retries + 1) +
                       " attempts: " + last_error);
}

nlohmann::json denoise_body(const DenoiseRequest& r) {
  return {{"tokens", r.tokens},
          {"editable", r.editable},
          {"temperature", r.temperature},
          {"steps", r.steps},
          {"stream_key", r.stream_key}};
}

std::vector<TokenId> tokens_from(const nlohmann::json& j, const std::string& where) {
  try {
    return j.at("tokens").get<std::vector<TokenId>>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(where + ": malformed response: " + e.what());
  }
}

double score_from(const nlohmann::json& j, const std::string& where) {
  try {
    return j.at("score").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(where + ": malformed response: " + e.what());
  }
}

nlohmann::json score_body(std::span<const TokenId> context, std::span<const TokenId> block, const std::string& key) {
  return {{"context", std::vector<TokenId>(context.begin(), context.end())},
          {"block", std::vector<TokenId>(block.begin(), block.end())},
          {"stream_key", key}};
}

}  // namespace

HttpDenoiser::HttpDenoiser(HttpOptions opts) : opts_(std::move(opts)) { split_endpoint(opts_.endpoint); }

std::vector<TokenId> HttpDenoiser::denoise(const TokenSeq& seq, std::span<const std::size_t> editable,
                                           const DenoiseParams& params, RngStream& rng) {
  DenoiseRequest req{{seq.tokens().begin(), seq.tokens().end()},
                     {editable.begin(), editable.end()},
                     params.temperature,
                     params.steps,
                     rng.id()};
  return tokens_from(post_json(opts_, "/denoise", denoise_body(req)), "/denoise");
}

std::vector<std::vector<TokenId>> HttpDenoiser::denoise_batch(const std::vector<DenoiseRequest>& requests) {
  nlohmann::json body = nlohmann::json::array();
  for (const auto& r : requests) body.push_back(denoise_body(r));
  const auto res = post_json(opts_, "/denoise_batch", body);
  if (!res.is_array() || res.size() != requests.size()) {
    throw ContractViolation("/denoise_batch: response not aligned with the request list");
  }
  std::vector<std::vector<TokenId>> out;
  for (const auto& r : res) out.push_back(tokens_from(r, "/denoise_batch"));
  return out;
}

HttpProcessReward::HttpProcessReward(HttpOptions opts) : opts_(std::move(opts)) { split_endpoint(opts_.endpoint); }

double HttpProcessReward::score(std::span<const TokenId> context, std::span<const TokenId> block, RngStream& rng) {
  return score_from(post_json(opts_, "/score", score_body(context, block, rng.id())), "/score");
}

std::vector<double> HttpProcessReward::score_batch(std::span<const ScoreRequest> requests, std::uint64_t seed) {
  nlohmann::json body = nlohmann::json::array();
  for (const auto& r : requests) {
    body.push_back(score_body(r.context, r.block, std::to_string(seed) + ":" + r.stream.str()));
  }
  const auto res = post_json(opts_, "/score_batch", body);
  if (!res.is_array() || res.size() != requests.size()) {
    throw ContractViolation("/score_batch: response not aligned with the request list");
  }
  std::vector<double> out;
  for (const auto& r : res) out.push_back(score_from(r, "/score_batch"));
  return out;
}

}  // namespace r3
