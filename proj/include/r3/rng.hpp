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
#include <random>
#include <string>

namespace r3 {

enum class Phase : std::uint8_t { Extend = 1, Review, Remask, Refine, ScoreCandidates, Test };

// Identifies one child stream of a run seed. Every stochastic decision in the
// engine draws from a stream named by where it happens, so results do not
// depend on batch order or on which thread ran an item.
struct StreamKey {
  std::uint64_t item = 0;
  std::uint64_t block = 0;
  Phase phase = Phase::Test;
  std::uint64_t window = 0;
  std::uint64_t sample = 0;

  // "item/block/phase/window/sample", the stream_key sent to model servers.
  std::string str() const;
};

std::uint64_t splitmix64(std::uint64_t x);

class RngStream {
 public:
  RngStream(std::uint64_t seed, const StreamKey& key);
  explicit RngStream(std::uint64_t seed) : RngStream(seed, StreamKey{}) {}

  std::uint64_t next_u64() { return engine_(); }
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);
  // Double in [0, 1) with 53 random bits.
  double uniform01();
  double normal();

  const StreamKey& key() const { return key_; }
  std::uint64_t seed() const { return seed_; }
  // "seed:item/block/phase/window/sample"
  std::string id() const { return std::to_string(seed_) + ":" + key_.str(); }

 private:
  std::mt19937_64 engine_;
  StreamKey key_;
  std::uint64_t seed_;
};

}  // namespace r3
