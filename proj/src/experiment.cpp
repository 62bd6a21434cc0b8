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

#include "r3/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "r3/baselines.hpp"
#include "r3/engine.hpp"
#include "r3/trace.hpp"

namespace r3 {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::R3:
      return "r3";
    case Method::Pass1:
      return "pass1";
    case Method::Bon:
      return "bon";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "r3") return Method::R3;
  if (s == "pass1") return Method::Pass1;
  if (s == "bon") return Method::Bon;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected r3|pass1|bon)");
}

// ---------------------------------------------------------------------------
// config

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("not a number: '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("not a boolean: '" + std::string(v) + "'");
}

std::vector<Method> parse_methods(std::string_view v) {
  std::vector<Method> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_method(trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("method list is empty");
  return out;
}

void apply_key(ExperimentConfig& c, std::string_view key, std::string_view v) {
  auto& r = c.r3;
  if (key == "method") c.methods = parse_methods(v);
  else if (key == "trials") c.trials = parse_number<std::size_t>(v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(v);
  else if (key == "workers") c.workers = parse_number<int>(v);
  else if (key == "n_total") r.n_total = parse_number<std::size_t>(v);
  else if (key == "block_len") r.block_len = parse_number<std::size_t>(v);
  else if (key == "window") r.window = parse_number<std::size_t>(v);
  else if (key == "tau_thresh") r.tau_thresh = parse_number<double>(v);
  else if (key == "n_samples") r.n_samples = parse_number<std::size_t>(v);
  else if (key == "beta_i") r.beta_i = parse_number<double>(v);
  else if (key == "alpha_b") r.alpha_b = parse_number<double>(v);
  else if (key == "p_min") r.p_min = parse_number<double>(v);
  else if (key == "epsilon") r.epsilon = parse_number<double>(v);
  else if (key == "temperature") r.temperature = parse_number<double>(v);
  else if (key == "demask_steps") r.demask_steps = parse_number<std::size_t>(v);
  else if (key == "metric") r.metric = parse_metric(v);
  else if (key == "retain_original") r.retain_original = parse_bool(v);
  else if (key == "position_policy") r.position_policy = parse_position_policy(v);
  else if (key == "p_err") c.p_err = parse_number<double>(v);
  else if (key == "digit_width") c.digit_width = parse_number<std::size_t>(v);
  else if (key == "prm_mode") c.prm.mode = toy::parse_prm_mode(v);
  else if (key == "prm_context") c.prm.context = toy::parse_prm_context(v);
  else if (key == "prm_hi") c.prm.hi = parse_number<double>(v);
  else if (key == "prm_lo") c.prm.lo = parse_number<double>(v);
  else if (key == "prm_sigma") c.prm.sigma = parse_number<double>(v);
  else if (key == "grading") c.grading = toy::parse_grading(v);
  else if (key == "backend") {
    if (v == "toy") c.backend = Backend::Toy;
    else if (v == "http") c.backend = Backend::Http;
    else throw ConfigError("unknown backend '" + std::string(v) + "' (expected toy|http)");
  }
  else if (key == "denoiser_endpoint") c.denoiser_http.endpoint = std::string(v);
  else if (key == "prm_endpoint") c.prm_http.endpoint = std::string(v);
  else if (key == "http_timeout_ms") c.denoiser_http.timeout_ms = c.prm_http.timeout_ms = parse_number<int>(v);
  else if (key == "http_retries") c.denoiser_http.retries = c.prm_http.retries = parse_number<int>(v);
  else if (key == "out_dir") c.out_dir = std::string(v);
  else if (key == "trace") c.trace = parse_bool(v);
  else throw ConfigError("unknown key '" + std::string(key) + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  r3.validate();
  if (methods.empty()) throw ConfigError("no method selected");
  if (trials == 0) throw ConfigError("trials must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (!(p_err >= 0.0 && p_err <= 1.0)) throw ConfigError("p_err must lie in [0,1]");
  if (digit_width == 0 || digit_width > 6) throw ConfigError("digit_width must lie in [1,6]");
  if (r3.block_len < 3 + 2 * digit_width) throw ConfigError("block_len too short for digit_width");
  if (!(prm.hi >= 0.0 && prm.hi <= 1.0 && prm.lo >= 0.0 && prm.lo <= 1.0)) throw ConfigError("prm_hi/prm_lo in [0,1]");
  if (prm.sigma < 0.0) throw ConfigError("prm_sigma must be >= 0");
  if (backend == Backend::Http) {
    if (denoiser_http.endpoint.empty() || prm_http.endpoint.empty()) {
      throw ConfigError("backend=http needs denoiser_endpoint and prm_endpoint");
    }
    if (denoiser_http.retries < 0 || denoiser_http.timeout_ms <= 0) throw ConfigError("bad HTTP retry/timeout");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (auto x : methods) m.push_back(to_string(x));
  nlohmann::json j = {{"methods", m},
                      {"trials", trials},
                      {"seed", seed},
                      {"r3", r3.to_json()},
                      {"p_err", p_err},
                      {"digit_width", digit_width},
                      {"prm_mode", toy::to_string(prm.mode)},
                      {"prm_context", toy::to_string(prm.context)},
                      {"prm_hi", prm.hi},
                      {"prm_lo", prm.lo},
                      {"prm_sigma", prm.sigma},
                      {"grading", toy::to_string(grading)},
                      {"backend", backend == Backend::Toy ? "toy" : "http"}};
  if (backend == Backend::Http) {
    j["denoiser_endpoint"] = denoiser_http.endpoint;
    j["prm_endpoint"] = prm_http.endpoint;
  }
  return j;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// trials

std::string run_id(Method m, std::size_t trial, std::uint64_t seed) {
  return std::string(to_string(m)) + "-t" + std::to_string(trial) + "-s" + std::to_string(seed);
}

TrialResult run_trial(const ExperimentConfig& cfg, Method method, std::size_t trial) {
  TrialResult out;
  out.index = trial;
  out.seed = cfg.seed + trial;
  out.method = method;

  const toy::ChainTask task = toy::make_task(out.seed, {cfg.r3.n_total, cfg.r3.block_len, cfg.digit_width});
  R3Config r3cfg = cfg.r3;
  r3cfg.seed = out.seed;

  std::unique_ptr<Denoiser> dn;
  std::unique_ptr<ProcessReward> prm;
  if (cfg.backend == Backend::Toy) {
    dn = std::make_unique<toy::NoisyOracleDenoiser>(task, cfg.p_err);
    prm = std::make_unique<toy::OracleProcessReward>(task, cfg.prm);
  } else {
    dn = std::make_unique<HttpDenoiser>(cfg.denoiser_http);
    prm = std::make_unique<HttpProcessReward>(cfg.prm_http);
  }

  const std::vector<std::vector<TokenId>> prompts{task.prompt()};
  RunResult res;
  try {
    switch (method) {
      case Method::R3:
        res = run_r3(prompts, toy::kMaskId, *dn, *prm, r3cfg);
        break;
      case Method::Pass1:
        res = run_pass1(prompts, toy::kMaskId, *dn, r3cfg);
        break;
      case Method::Bon:
        res = run_block_bon(prompts, toy::kMaskId, *dn, *prm, r3cfg);
        break;
    }
  } catch (const RunAborted& aborted) {
    if (!cfg.out_dir.empty()) {
      std::filesystem::create_directories(std::filesystem::path(cfg.out_dir) / "traces");
      write_trace_file(aborted.partial_transcripts(), run_id(method, trial, out.seed),
                       (std::filesystem::path(cfg.out_dir) / "traces" /
                        (run_id(method, trial, out.seed) + ".partial.jsonl"))
                           .string());
    }
    try {
      aborted.rethrow_cause();
    } catch (const TransportError& e) {
      out.failed = true;
      out.failure = e.what();
      return out;
    } catch (...) {
    }
    throw;
  }

  const auto& item = res.items.front();
  const toy::Grade g = toy::grade(item.seq, task, cfg.grading);
  out.correct = g.correct;
  out.block_correct = g.block_correct;
  out.undecodable = g.undecodable;
  out.counts = res.counts;
  out.generated.assign(item.seq.generated().begin(), item.seq.generated().end());
  out.transcripts.push_back(item.transcript);
  return out;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, Method method, Execution exec) {
  std::vector<TrialResult> results(cfg.trials);
  parallel_for(
      cfg.trials, exec, [&](std::size_t t) { results[t] = run_trial(cfg, method, t); }, cfg.workers);
  return results;
}

// ---------------------------------------------------------------------------
// aggregation

nlohmann::json MethodSummary::to_json() const {
  const double n = completed > 0 ? static_cast<double>(completed) : 1.0;
  return {{"method", to_string(method)},
          {"trials", trials},
          {"completed", completed},
          {"failed", failed},
          {"accuracy", accuracy},
          {"accuracy_stderr", accuracy_stderr},
          {"per_block_accuracy", per_block_accuracy},
          {"mean_block_accuracy", mean_block_accuracy},
          {"undecodable_blocks", undecodable_blocks},
          {"counters_total", totals.to_json()},
          {"counters_mean",
           {{"batched_prm_invocations", static_cast<double>(totals.batched_prm_invocations) / n},
            {"block_scorings", static_cast<double>(totals.block_scorings) / n},
            {"denoiser_invocations", static_cast<double>(totals.denoiser_invocations) / n},
            {"denoiser_token_updates", static_cast<double>(totals.denoiser_token_updates) / n}}}};
}

MethodSummary summarize(Method method, const std::vector<TrialResult>& results) {
  MethodSummary s;
  s.method = method;
  s.trials = results.size();
  std::size_t correct = 0;
  std::size_t block_total = 0;
  std::size_t block_right = 0;
  for (const auto& r : results) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    ++s.completed;
    correct += r.correct ? 1 : 0;
    s.totals += r.counts;
    s.undecodable_blocks += r.undecodable;
    if (s.per_block_accuracy.size() < r.block_correct.size()) s.per_block_accuracy.resize(r.block_correct.size());
    for (std::size_t b = 0; b < r.block_correct.size(); ++b) {
      s.per_block_accuracy[b] += r.block_correct[b] ? 1.0 : 0.0;
      block_right += r.block_correct[b] ? 1 : 0;
      ++block_total;
    }
  }
  if (s.completed > 0) {
    const double n = static_cast<double>(s.completed);
    s.accuracy = static_cast<double>(correct) / n;
    s.accuracy_stderr = std::sqrt(s.accuracy * (1.0 - s.accuracy) / n);
    for (auto& a : s.per_block_accuracy) a /= n;
  }
  if (block_total > 0) s.mean_block_accuracy = static_cast<double>(block_right) / static_cast<double>(block_total);
  return s;
}

PairedComparison compare_paired(const std::vector<TrialResult>& a, const std::vector<TrialResult>& b) {
  PairedComparison p;
  if (!a.empty()) p.a = a.front().method;
  if (!b.empty()) p.b = b.front().method;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i].failed || b[i].failed || a[i].seed != b[i].seed) continue;
    diffs.push_back((b[i].correct ? 1.0 : 0.0) - (a[i].correct ? 1.0 : 0.0));
  }
  p.pairs = diffs.size();
  if (diffs.empty()) return p;
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var = diffs.size() > 1 ? var / static_cast<double>(diffs.size() - 1) : 0.0;
  const double half = 1.96 * std::sqrt(var / static_cast<double>(diffs.size()));
  p.mean_diff = mean;
  p.ci_low = mean - half;
  p.ci_high = mean + half;
  return p;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& s : methods) m.push_back(s.to_json());
  nlohmann::json p = nlohmann::json::array();
  for (const auto& c : paired) {
    p.push_back({{"baseline", to_string(c.a)},
                 {"method", to_string(c.b)},
                 {"pairs", c.pairs},
                 {"accuracy_diff", c.mean_diff},
                 {"ci95", {c.ci_low, c.ci_high}}});
  }
  return {{"config", config.to_json()},
          {"methods", m},
          {"paired", p},
          {"warnings", warnings},
          {"timing", {{"wall_time_s", wall_time_s}}}};
}

std::string ExperimentReport::to_table() const {
  std::ostringstream os;
  os << std::fixed;
  os << std::left << std::setw(7) << "method" << std::right << std::setw(8) << "trials" << std::setw(8) << "failed"
     << std::setw(10) << "accuracy" << std::setw(9) << "stderr" << std::setw(11) << "block_acc" << std::setw(12)
     << "prm_batches" << std::setw(12) << "prm_blocks" << std::setw(12) << "dn_calls" << '\n';
  for (const auto& s : methods) {
    const double n = s.completed > 0 ? static_cast<double>(s.completed) : 1.0;
    os << std::left << std::setw(7) << to_string(s.method) << std::right << std::setw(8) << s.trials << std::setw(8)
       << s.failed << std::setprecision(4) << std::setw(10) << s.accuracy << std::setw(9) << s.accuracy_stderr
       << std::setw(11) << s.mean_block_accuracy << std::setprecision(2) << std::setw(12)
       << static_cast<double>(s.totals.batched_prm_invocations) / n << std::setw(12)
       << static_cast<double>(s.totals.block_scorings) / n << std::setw(12)
       << static_cast<double>(s.totals.denoiser_invocations) / n << '\n';
  }
  for (const auto& c : paired) {
    os << std::setprecision(4) << "paired " << to_string(c.b) << " - " << to_string(c.a) << ": " << c.mean_diff
       << " [" << c.ci_low << ", " << c.ci_high << "] over " << c.pairs << " seeds\n";
  }
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  os << std::setprecision(3) << "wall time: " << wall_time_s << " s\n";
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, Execution exec) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = cfg;
  std::vector<std::vector<TrialResult>> all;
  for (Method m : cfg.methods) {
    all.push_back(run_trials(cfg, m, exec));
    report.methods.push_back(summarize(m, all.back()));
    for (const auto& r : all.back()) {
      if (r.failed) {
        report.warnings.push_back(run_id(m, r.index, r.seed) + " excluded: " + r.failure);
      }
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t k = i + 1; k < all.size(); ++k) report.paired.push_back(compare_paired(all[i], all[k]));
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    {
      std::ofstream js(dir / "report.json", std::ios::binary | std::ios::trunc);
      if (!js) throw Error("cannot write " + (dir / "report.json").string());
      js << report.to_json().dump(2) << '\n';
    }
    {
      std::ofstream txt(dir / "report.txt", std::ios::binary | std::ios::trunc);
      if (!txt) throw Error("cannot write " + (dir / "report.txt").string());
      txt << report.to_table();
    }
    if (cfg.trace) {
      fs::create_directories(dir / "traces");
      for (const auto& results : all) {
        for (const auto& r : results) {
          if (r.failed) continue;
          const std::string id = run_id(r.method, r.index, r.seed);
          write_trace_file(r.transcripts, id, (dir / "traces" / (id + ".jsonl")).string());
        }
      }
    }
  }
  return report;
}

}  // namespace r3
