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

#include "r3/core.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace r3 {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Product:
      return "product";
    case Metric::Min:
      return "min";
  }
  return "?";
}

std::string_view to_string(PositionPolicy p) {
  switch (p) {
    case PositionPolicy::Uniform:
      return "uniform";
    case PositionPolicy::Prefix:
      return "prefix";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "product") return Metric::Product;
  if (s == "min") return Metric::Min;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected product|min)");
}

PositionPolicy parse_position_policy(std::string_view s) {
  if (s == "uniform") return PositionPolicy::Uniform;
  if (s == "prefix") return PositionPolicy::Prefix;
  throw ConfigError("unknown position policy '" + std::string(s) + "' (expected uniform|prefix)");
}

// ---------------------------------------------------------------------------
// TokenSeq

TokenSeq::TokenSeq(std::vector<TokenId> prompt, std::size_t block_len, TokenId mask_id)
    : tokens_(std::move(prompt)), prompt_len_(tokens_.size()), block_len_(block_len), mask_id_(mask_id) {
  if (block_len_ == 0) throw StructuralError("block_len must be positive");
  if (mask_id_ < 0) throw StructuralError("mask id must be non-negative");
  for (TokenId t : tokens_) {
    if (t < 0) throw StructuralError("negative token id in prompt");
    if (t == mask_id_) throw ContractViolation("mask id in prompt region");
  }
}

void TokenSeq::append_block(std::span<const TokenId> block) {
  if (block.size() != block_len_) {
    throw StructuralError("append_block: expected " + std::to_string(block_len_) + " tokens, got " +
                          std::to_string(block.size()));
  }
  for (TokenId t : block) {
    if (t == mask_id_) throw ContractViolation("append_block: block contains the mask id");
    if (t < 0) throw StructuralError("append_block: negative token id");
  }
  tokens_.insert(tokens_.end(), block.begin(), block.end());
  ++n_blocks_;
}

void TokenSeq::append_masked_block() {
  tokens_.insert(tokens_.end(), block_len_, mask_id_);
  ++n_blocks_;
}

std::span<const TokenId> TokenSeq::block_slice(std::size_t b) const {
  if (b >= n_blocks_) {
    throw StructuralError("block index " + std::to_string(b) + " out of range (n_blocks=" +
                          std::to_string(n_blocks_) + ")");
  }
  return std::span<const TokenId>(tokens_).subspan(block_start(b), block_len_);
}

void TokenSeq::replace_blocks(std::size_t first_block, std::span<const TokenId> tokens) {
  if (tokens.size() % block_len_ != 0) throw StructuralError("replace_blocks: partial block");
  const std::size_t count = tokens.size() / block_len_;
  if (first_block + count > n_blocks_) throw StructuralError("replace_blocks: window exceeds sequence");
  for (TokenId t : tokens) {
    if (t < 0) throw StructuralError("replace_blocks: negative token id");
  }
  std::copy(tokens.begin(), tokens.end(), tokens_.begin() + static_cast<std::ptrdiff_t>(block_start(first_block)));
}

void TokenSeq::set_token(std::size_t pos, TokenId id) {
  if (pos < prompt_len_ || pos >= tokens_.size()) {
    throw StructuralError("set_token: position " + std::to_string(pos) + " outside the generated region");
  }
  if (id < 0) throw StructuralError("set_token: negative token id");
  tokens_[pos] = id;
}

TokenSeq TokenSeq::prefix_through(std::size_t b) const {
  if (b >= n_blocks_) throw StructuralError("prefix_through: block out of range");
  TokenSeq out = *this;
  out.tokens_.resize(block_start(b + 1));
  out.n_blocks_ = b + 1;
  return out;
}

std::span<const TokenId> TokenSeq::context_before(std::size_t b) const {
  if (b > n_blocks_) throw StructuralError("context_before: block out of range");
  return std::span<const TokenId>(tokens_).first(block_start(b));
}

std::size_t TokenSeq::count_masks() const {
  return static_cast<std::size_t>(std::count(tokens_.begin(), tokens_.end(), mask_id_));
}

// ---------------------------------------------------------------------------
// R3Config

void R3Config::validate() const {
  if (n_total == 0) throw ConfigError("n_total must be >= 1");
  if (block_len == 0) throw ConfigError("block_len must be >= 1");
  if (window < 1 || window > n_total) throw ConfigError("window must satisfy 1 <= window <= n_total");
  if (!(tau_thresh >= 0.0 && tau_thresh <= 1.0)) throw ConfigError("tau_thresh must lie in [0,1]");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (!(beta_i >= 0.0 && beta_i <= 1.0)) throw ConfigError("beta_i must lie in [0,1]");
  if (!(alpha_b > 0.0)) throw ConfigError("alpha_b must be > 0");
  if (!(p_min >= 0.0 && p_min < 1.0)) throw ConfigError("p_min must lie in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

std::size_t R3Config::steps_per_block() const { return std::max<std::size_t>(1, demask_steps / n_total); }

nlohmann::json R3Config::to_json() const {
  return {{"n_total", n_total},
          {"block_len", block_len},
          {"window", window},
          {"tau_thresh", tau_thresh},
          {"n_samples", n_samples},
          {"beta_i", beta_i},
          {"alpha_b", alpha_b},
          {"p_min", p_min},
          {"epsilon", epsilon},
          {"temperature", temperature},
          {"demask_steps", demask_steps},
          {"metric", to_string(metric)},
          {"retain_original", retain_original},
          {"position_policy", to_string(position_policy)},
          {"seed", seed}};
}

// ---------------------------------------------------------------------------
// ScoreLedger

void ScoreLedger::fill(std::size_t b, double score) {
  if (b >= scores_.size()) throw StructuralError("ledger: block " + std::to_string(b) + " has no placeholder");
  scores_[b] = score;
}

const std::optional<double>& ScoreLedger::at(std::size_t b) const {
  if (b >= scores_.size()) throw StructuralError("ledger: block out of range");
  return scores_[b];
}

std::size_t ScoreLedger::unfilled_count() const {
  return static_cast<std::size_t>(
      std::count_if(scores_.begin(), scores_.end(), [](const auto& s) { return !s.has_value(); }));
}

std::vector<double> ScoreLedger::window_scores(std::size_t first, std::size_t last) const {
  std::vector<double> out;
  out.reserve(last - first + 1);
  for (std::size_t b = first; b <= last; ++b) {
    const auto& s = at(b);
    if (!s) throw PreconditionViolation("ledger: block " + std::to_string(b) + " not yet reviewed");
    out.push_back(*s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transcript

namespace {
constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::Extend, "Extend"},   {EventKind::Review, "Review"},
    {EventKind::Trigger, "Trigger"}, {EventKind::Remask, "Remask"},
    {EventKind::Propose, "Propose"}, {EventKind::ScoreCandidates, "ScoreCandidates"},
    {EventKind::Select, "Select"},   {EventKind::Retain, "Retain"},
};
}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kEventNames) {
    if (kind == k) return name;
  }
  return "?";
}

EventKind parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kEventNames) {
    if (name == s) return kind;
  }
  throw StructuralError("unknown event kind '" + std::string(s) + "'");
}

std::size_t Transcript::count(EventKind k) const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [k](const Event& e) { return e.kind == k; }));
}

std::optional<std::string> check_transcript(const Transcript& t) {
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
  std::map<std::size_t, std::size_t> last_extend;
  std::set<Key> open;
  std::set<Key> closed;
  for (std::size_t i = 0; i < t.events().size(); ++i) {
    const Event& e = t.events()[i];
    const Key key{e.item, e.first_block, e.last_block};
    const std::string where = " at event " + std::to_string(i);
    switch (e.kind) {
      case EventKind::Extend: {
        auto it = last_extend.find(e.item);
        if (it != last_extend.end() && e.first_block < it->second) {
          return "Extend block index decreased" + where;
        }
        last_extend[e.item] = e.first_block;
        break;
      }
      case EventKind::Trigger:
        if (open.count(key)) return "Trigger while the same window is already open" + where;
        open.insert(key);
        closed.erase(key);
        break;
      case EventKind::Select:
      case EventKind::Retain:
        if (open.count(key)) {
          open.erase(key);
          closed.insert(key);
        } else if (closed.count(key)) {
          return "second Select/Retain for one Trigger" + where;
        } else if (e.kind == EventKind::Retain) {
          return "Retain without a preceding Trigger" + where;
        }
        break;
      default:
        break;
    }
  }
  if (!open.empty()) return std::string("Trigger without a closing Select/Retain");
  return std::nullopt;
}

}  // namespace r3
