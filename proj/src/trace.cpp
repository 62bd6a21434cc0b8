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

#include "r3/trace.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace r3 {

std::string trace_line(const std::string& run_id, const Event& e) {
  nlohmann::json j = {{"run_id", run_id},
                      {"item", e.item},
                      {"event", to_string(e.kind)},
                      {"block_range", {e.first_block, e.last_block}},
                      {"payload", e.payload}};
  return j.dump();
}

void emit_trace(const Transcript& t, const std::string& run_id, std::ostream& out) {
  for (const auto& e : t.events()) out << trace_line(run_id, e) << '\n';
}

void write_trace_file(const std::vector<Transcript>& items, const std::string& run_id, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open trace file '" + path + "' for writing");
  for (const auto& t : items) emit_trace(t, run_id, out);
  if (!out.flush()) throw Error("failed writing trace file '" + path + "'");
}

std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceRecord r;
      r.run_id = j.at("run_id").get<std::string>();
      r.event.item = j.at("item").get<std::size_t>();
      r.event.kind = parse_event_kind(j.at("event").get<std::string>());
      const auto& range = j.at("block_range");
      r.event.first_block = range.at(0).get<std::size_t>();
      r.event.last_block = range.at(1).get<std::size_t>();
      r.event.payload = j.at("payload");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw StructuralError("trace line " + std::to_string(lineno) + ": " + e.what());
    } catch (const StructuralError& e) {
      throw StructuralError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TraceRecord> read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

namespace {

struct ItemReplay {
  std::vector<TokenId> generated;  // rebuilt generated region
  std::size_t block_len = 0;
  std::vector<TokenId> snapshot;  // window tokens at the open Trigger
  bool open = false;
};

std::vector<TokenId> slice(const std::vector<TokenId>& v, std::size_t first, std::size_t count) {
  if (first + count > v.size()) return {};
  return {v.begin() + static_cast<std::ptrdiff_t>(first), v.begin() + static_cast<std::ptrdiff_t>(first + count)};
}

}  // namespace

ReplaySummary replay_trace(const std::vector<TraceRecord>& records) {
  ReplaySummary sum;
  std::map<std::pair<std::string, std::size_t>, ItemReplay> items;
  std::set<std::string> runs;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const Event& e = r.event;
    ++sum.events;
    runs.insert(r.run_id);
    ItemReplay& st = items[{r.run_id, e.item}];
    const std::string where = r.run_id + " item " + std::to_string(e.item) + " event " + std::to_string(i) + ": ";

    try {
      switch (e.kind) {
        case EventKind::Extend: {
          auto tokens = e.payload.at("tokens").get<std::vector<TokenId>>();
          if (st.block_len == 0) st.block_len = tokens.size();
          if (tokens.size() != st.block_len) {
            sum.problems.push_back(where + "Extend block has the wrong length");
            break;
          }
          const std::size_t start = e.first_block * st.block_len;
          // BoN records the winner as an Extend after its Select; both agree.
          if (start + st.block_len > st.generated.size()) st.generated.resize(start + st.block_len);
          std::copy(tokens.begin(), tokens.end(), st.generated.begin() + static_cast<std::ptrdiff_t>(start));
          break;
        }
        case EventKind::Trigger: {
          ++sum.triggers;
          st.snapshot = e.payload.at("window_tokens").get<std::vector<TokenId>>();
          st.open = true;
          const std::size_t width = e.last_block - e.first_block + 1;
          if (slice(st.generated, e.first_block * st.block_len, width * st.block_len) != st.snapshot) {
            sum.problems.push_back(where + "Trigger snapshot disagrees with the rebuilt sequence");
          }
          break;
        }
        case EventKind::Remask: {
          if (!st.open) {
            sum.problems.push_back(where + "Remask outside a refinement cycle");
            break;
          }
          const auto mask_id = e.payload.at("mask_id").get<TokenId>();
          const auto positions = e.payload.at("positions").get<std::vector<std::vector<std::size_t>>>();
          std::vector<TokenId> expected = st.snapshot;
          for (std::size_t k = 0; k < positions.size(); ++k) {
            for (std::size_t off : positions[k]) {
              const std::size_t at = k * st.block_len + off;
              if (off >= st.block_len || at >= expected.size()) {
                sum.problems.push_back(where + "Remask position out of range");
                continue;
              }
              expected[at] = mask_id;
            }
          }
          if (expected != e.payload.at("masked_window").get<std::vector<TokenId>>()) {
            sum.problems.push_back(where + "masked window does not replay");
          } else {
            ++sum.remasks_verified;
          }
          break;
        }
        case EventKind::Select: {
          ++sum.selects;
          st.open = false;
          if (e.payload.contains("window_tokens")) {
            const auto tokens = e.payload.at("window_tokens").get<std::vector<TokenId>>();
            const std::size_t start = e.first_block * st.block_len;
            if (start + tokens.size() > st.generated.size()) {
              sum.problems.push_back(where + "Select window beyond the rebuilt sequence");
              break;
            }
            std::copy(tokens.begin(), tokens.end(), st.generated.begin() + static_cast<std::ptrdiff_t>(start));
          }
          break;
        }
        case EventKind::Retain:
          ++sum.retains;
          st.open = false;
          break;
        default:
          break;
      }
    } catch (const nlohmann::json::exception& ex) {
      sum.problems.push_back(where + "malformed payload: " + ex.what());
    }
  }
  for (const auto& [key, st] : items) {
    if (st.open) sum.problems.push_back(key.first + " item " + std::to_string(key.second) + ": unclosed Trigger");
  }
  sum.runs = runs.size();
  return sum;
}

}  // namespace r3
