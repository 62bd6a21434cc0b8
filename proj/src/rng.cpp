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

#include "r3/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace r3 {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string StreamKey::str() const {
  return std::to_string(item) + "/" + std::to_string(block) + "/" + std::to_string(static_cast<int>(phase)) + "/" +
         std::to_string(window) + "/" + std::to_string(sample);
}

namespace {
std::uint64_t derive_seed(std::uint64_t seed, const StreamKey& k) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ k.item);
  h = splitmix64(h ^ k.block);
  h = splitmix64(h ^ static_cast<std::uint64_t>(k.phase));
  h = splitmix64(h ^ k.window);
  h = splitmix64(h ^ k.sample);
  return h;
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, const StreamKey& key) : engine_(derive_seed(seed, key)), key_(key), seed_(seed) {}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RngStream::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace r3
