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
#include <string_view>
#include <vector>

#include "r3/core.hpp"
#include "r3/http_adapters.hpp"
#include "r3/model_interface.hpp"
#include "r3/parallel.hpp"
#include "r3/toyworld.hpp"

namespace r3 {

enum class Method { R3, Pass1, Bon };
enum class Backend { Toy, Http };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct ExperimentConfig {
  std::vector<Method> methods{Method::R3};  // more than one = paired-seed comparison
  std::size_t trials = 100;
  std::uint64_t seed = 0;  // trial t runs with seed + t
  int workers = 0;         // 0 = all OpenMP threads
  R3Config r3;

  // toy world
  double p_err = 0.3;
  std::size_t digit_width = 3;
  toy::PrmParams prm;
  toy::Grading grading = toy::Grading::FinalBlock;

  Backend backend = Backend::Toy;
  HttpOptions denoiser_http;
  HttpOptions prm_http;

  std::string out_dir;
  bool trace = false;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Flat "key = value" text, one per line, '#' starts a comment. Unknown keys
/// and malformed values are ConfigErrors naming the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

struct TrialResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Method method = Method::R3;
  bool failed = false;
  std::string failure;
  bool correct = false;
  std::vector<bool> block_correct;
  std::size_t undecodable = 0;
  CallCounts counts;
  std::vector<Transcript> transcripts;
  std::vector<TokenId> generated;
};

std::string run_id(Method m, std::size_t trial, std::uint64_t seed);

// One seeded trial on the configured backend. Transport failures mark the
// trial failed; any other abort propagates as RunAborted. With out_dir set the
// partial transcript is flushed to traces/<run_id>.partial.jsonl first.
TrialResult run_trial(const ExperimentConfig& cfg, Method method, std::size_t trial);

// Serial is the reference; Parallel spreads trials over OpenMP threads and
// must return the same vector (sorted by trial index).
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, Method method, Execution exec);

struct MethodSummary {
  Method method = Method::R3;
  std::size_t trials = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double accuracy = 0.0;
  double accuracy_stderr = 0.0;
  std::vector<double> per_block_accuracy;
  double mean_block_accuracy = 0.0;
  std::size_t undecodable_blocks = 0;
  CallCounts totals;

  nlohmann::json to_json() const;
};

MethodSummary summarize(Method method, const std::vector<TrialResult>& results);

struct PairedComparison {
  Method a = Method::R3;
  Method b = Method::Pass1;
  std::size_t pairs = 0;
  double mean_diff = 0.0;  // accuracy(b) - accuracy(a) over paired seeds
  double ci_low = 0.0;     // 95% normal interval
  double ci_high = 0.0;
};

PairedComparison compare_paired(const std::vector<TrialResult>& a, const std::vector<TrialResult>& b);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MethodSummary> methods;
  std::vector<PairedComparison> paired;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;

  // Deterministic for a fixed config; wall time lives under "timing" only.
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Runs every configured method over the same seeds, writes report.json,
/// report.txt and (with trace) traces/<run_id>.jsonl under out_dir when set.
ExperimentReport run_experiment(const ExperimentConfig& cfg, Execution exec = Execution::Parallel);

}  // namespace r3
