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

#include <iosfwd>
#include <string>
#include <vector>

#include "r3/core.hpp"

namespace r3 {

// One line of a trace file:
//   {"run_id": ..., "item": ..., "event": ..., "block_range": [first, last], "payload": {...}}
struct TraceRecord {
  std::string run_id;
  Event event;
};

std::string trace_line(const std::string& run_id, const Event& e);
void emit_trace(const Transcript& t, const std::string& run_id, std::ostream& out);
// Throws Error when the file cannot be written.
void write_trace_file(const std::vector<Transcript>& items, const std::string& run_id, const std::string& path);

// Throws StructuralError on a malformed line (with its 1-based line number).
std::vector<TraceRecord> parse_trace(std::istream& in);
std::vector<TraceRecord> read_trace_file(const std::string& path);

struct ReplaySummary {
  std::size_t runs = 0;
  std::size_t events = 0;
  std::size_t triggers = 0;
  std::size_t remasks_verified = 0;
  std::size_t selects = 0;
  std::size_t retains = 0;
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
};

/// Re-executes a trace without any model. For every (run_id, item) the
/// generated tokens are rebuilt from Extend and Select events; each Trigger's
/// window snapshot must match the rebuilt sequence, and each Remask's masked
/// window must equal that snapshot with its recorded positions masked.
ReplaySummary replay_trace(const std::vector<TraceRecord>& records);

}  // namespace r3
