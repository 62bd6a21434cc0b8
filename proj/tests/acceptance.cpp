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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 = all passed).

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "r3/baselines.hpp"
#include "r3/engine.hpp"
#include "r3/experiment.hpp"
#include "r3/remasking.hpp"
#include "r3/trace.hpp"

using namespace r3;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

// Tolerances and budgets.
constexpr double kFormulaTol = 1e-6;
constexpr double kStdErrs = 3.0;
constexpr double kMinMargin = 0.10;
constexpr double kSeedDiffRate = 0.99;
constexpr std::size_t kRandomCases = 1000;
constexpr std::size_t kAccuracyTrials = 1000;
constexpr std::size_t kTrendTrials = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt <= budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("criterion %d %s: %s (%.2fs of %.0fs)%s%s\n", id, name.c_str(), ok ? "PASS" : "FAIL", dt, budget_s,
              o.detail.empty() ? "" : " -- ", o.detail.c_str());
  std::fflush(stdout);
}

class ConstantReward : public ProcessReward {
 public:
  explicit ConstantReward(double v) : v_(v) {}
  double score(std::span<const TokenId>, std::span<const TokenId>, RngStream&) override { return v_; }

 private:
  double v_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

double se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

std::vector<double> random_window(RngStream& r, std::size_t n) {
  std::vector<double> s(n);
  for (auto& x : s) x = r.uniform01();
  return s;
}

bool degenerate(const std::vector<double>& s, double alpha, double eps) {
  const double hi = quality_value(*std::min_element(s.begin(), s.end()), alpha);
  const double lo = quality_value(*std::max_element(s.begin(), s.end()), alpha);
  return hi - lo < eps;
}

Outcome call_counts() {
  const auto task = toy::make_task(0, {});
  toy::NoisyOracleDenoiser dn(task, 0.3);
  toy::OracleProcessReward prm(task, {});
  ConstantReward never(1.0), always(0.0);
  R3Config cfg;  // N_total=16, K=8, N_S=5
  const std::vector<std::vector<TokenId>> prompts{task.prompt()};
  const auto a = run_r3(prompts, toy::kMaskId, dn, never, cfg).counts;
  const auto b = run_r3(prompts, toy::kMaskId, dn, always, cfg).counts;
  const auto c = run_block_bon(prompts, toy::kMaskId, dn, prm, cfg).counts;
  std::ostringstream os;
  os << "never-trigger batched=" << a.batched_prm_invocations << " always-trigger batched="
     << b.batched_prm_invocations << " bon block_scorings=" << c.block_scorings;
  return {a.batched_prm_invocations == 2 && b.batched_prm_invocations == 4 && c.block_scorings == 80, os.str()};
}

Outcome formula_oracle() {
  const std::vector<double> s{0.1, 0.5, 0.9};
  const RemaskParams params{10.0, 0.01, 1e-8, 0.8};
  const auto p = remask_probabilities(s, params);

  std::vector<Big> q;
  for (double x : s) q.push_back(boost::multiprecision::exp(-Big(10) * Big(x)));
  const Big lo = *std::min_element(q.begin(), q.end());
  const Big hi = *std::max_element(q.begin(), q.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const Big want = Big("0.01") + Big("0.99") * (q[i] - lo) / (hi - lo + Big("1e-8"));
    worst = std::max(worst, std::abs(p[i] - want.convert_to<double>()));
  }

  RngStream r(0xB0B);
  std::size_t extremes_bad = 0, tested = 0;
  while (tested < kRandomCases) {
    const auto w = random_window(r, 2 + r.uniform_below(7));
    if (degenerate(w, 10.0, 1e-8)) continue;
    ++tested;
    const auto pw = remask_probabilities(w, params);
    const auto imax = std::max_element(w.begin(), w.end()) - w.begin();
    if (pw[static_cast<std::size_t>(imax)] != 0.01) ++extremes_bad;
  }
  return {worst <= kFormulaTol && extremes_bad == 0,
          fmt("P={%.7f, %.7f, %.7f}, max |err| vs 50-digit oracle %.2e, extremes violations %.0f/%.0f", p[0], p[1],
              p[2], worst, static_cast<double>(extremes_bad), static_cast<double>(tested))};
}

Outcome anti_monotone() {
  RngStream r(0xA11);
  std::size_t violations = 0, tested = 0;
  const double alphas[] = {1.0, 5.0, 10.0};
  while (tested < kRandomCases) {
    const double alpha = alphas[r.uniform_below(3)];
    const auto w = random_window(r, 1 + r.uniform_below(8));
    if (w.size() > 1 && degenerate(w, alpha, 1e-8)) continue;
    if (w.size() == 1) continue;
    ++tested;
    const auto p = remask_probabilities(w, {alpha, 0.01, 1e-8, 0.8});
    for (std::size_t a = 0; a < w.size(); ++a) {
      if (p[a] < 0.01 || p[a] > 1.0) ++violations;
      for (std::size_t b = 0; b < w.size(); ++b) {
        if (w[a] < w[b] && p[a] < p[b]) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%.0f windows, %.0f violations", static_cast<double>(tested),
                               static_cast<double>(violations))};
}

Outcome mask_accounting() {
  RngStream r(0xACC);
  std::size_t count_bad = 0, locality_bad = 0;
  for (std::size_t t = 0; t < kRandomCases; ++t) {
    R3Config cfg;
    cfg.n_total = 1 + r.uniform_below(10);
    cfg.window = 1 + r.uniform_below(cfg.n_total);
    cfg.n_samples = 1;
    cfg.beta_i = r.uniform01();
    cfg.seed = r.next_u64();
    const auto task = toy::make_task(cfg.seed, {cfg.n_total, cfg.block_len, 3});
    toy::NoisyOracleDenoiser dn(task, 0.3);
    ItemState st = make_item(task.prompt(), cfg, toy::kMaskId);
    CallAccountant acct;
    for (std::size_t j = 0; j < cfg.n_total; ++j) extend_block(st, 0, dn, cfg, acct);
    const std::size_t j = cfg.n_total - 1;
    const WindowRef w = window_at(j, cfg.window);
    const auto scores = random_window(r, w.width());

    const auto probs = remask_probabilities(scores, RemaskParams::from(cfg));
    const auto set = propose_candidates(st, 0, j, scores, dn, cfg, acct);
    const auto& plan = set.candidates[0].plan;
    const TokenSeq masked = apply_window_mask(st.seq, plan, w.first_block);
    for (std::size_t k = 0; k < w.width(); ++k) {
      const auto want = static_cast<std::size_t>(std::floor(cfg.beta_i * probs[k] * 32.0 + 0.5));
      const auto blk = masked.block_slice(w.first_block + k);
      const auto got = static_cast<std::size_t>(std::count(blk.begin(), blk.end(), toy::kMaskId));
      if (got != want || plan.blocks[k].token_count != want) ++count_bad;
    }
    const TokenSeq& cand = set.candidates[0].seq;
    for (std::size_t p = 0; p < st.seq.size(); ++p) {
      const bool inside = p >= st.seq.block_start(w.first_block) && p < st.seq.block_start(w.last_block + 1);
      if (!inside && cand.tokens()[p] != st.seq.tokens()[p]) ++locality_bad;
    }
  }
  return {count_bad == 0 && locality_bad == 0,
          fmt("%.0f plans, count mismatches %.0f, out-of-window edits %.0f", static_cast<double>(kRandomCases),
              static_cast<double>(count_bad), static_cast<double>(locality_bad))};
}

Outcome directional() {
  ExperimentConfig cfg;  // p_err 0.3, exact PRM, 16x32, K=8, N_S=5, tau=0.8, beta=0.8
  cfg.methods = {Method::Pass1, Method::R3, Method::Bon};
  cfg.trials = kAccuracyTrials;
  const auto rep = run_experiment(cfg);
  const double p1 = rep.methods[0].accuracy, r3 = rep.methods[1].accuracy, bon = rep.methods[2].accuracy;
  const double bon_block = rep.methods[2].mean_block_accuracy;
  const double want_p1 = 0.7, want_block = 1.0 - std::pow(0.3, 5);
  const bool margin = r3 - p1 >= kMinMargin;
  const bool order = bon >= r3 && r3 >= p1;
  const bool p1_ok = std::abs(p1 - want_p1) <= kStdErrs * se(want_p1, cfg.trials);
  const bool bon_ok = std::abs(bon_block - want_block) <= kStdErrs * se(want_block, 16 * cfg.trials);
  return {margin && order && p1_ok && bon_ok,
          fmt("acc pass1=%.3f r3=%.3f bon=%.3f, r3-pass1=%.3f", p1, r3, bon, r3 - p1) +
              fmt(", pass1 %.3f vs %.3f within 3se: ", p1, want_p1) + (p1_ok ? "yes" : "no") +
              fmt(", bon per-block %.5f vs %.5f within 3se: ", bon_block, want_block) + (bon_ok ? "yes" : "no")};
}

Outcome window_trend() {
  std::vector<std::vector<TrialResult>> runs;
  std::vector<double> acc;
  for (std::size_t k : {4, 5, 8}) {
    ExperimentConfig cfg;
    cfg.trials = kTrendTrials;
    cfg.r3.window = k;
    cfg.prm.context = toy::PrmContext::Contextual;
    runs.push_back(run_trials(cfg, Method::R3, Execution::Parallel));
    acc.push_back(summarize(Method::R3, runs.back()).accuracy);
  }
  const auto d45 = compare_paired(runs[0], runs[1]);
  const auto d58 = compare_paired(runs[1], runs[2]);
  const bool trend = acc[0] <= acc[1] && acc[1] <= acc[2];
  std::string detail = fmt("contextual PRM, acc K=4 %.3f K=5 %.3f K=8 %.3f", acc[0], acc[1], acc[2]) +
                       fmt("; paired K5-K4 %+.3f [%+.3f, %+.3f], K8-K5 %+.3f [%+.3f, %+.3f]", d45.mean_diff,
                           d45.ci_low, d45.ci_high, d58.mean_diff, d58.ci_low, d58.ci_high);
  if (!trend) detail += "; DEVIATION: accuracy is not nondecreasing in K, reported with 95% CIs";
  return {true, detail};
}

Outcome determinism() {
  ExperimentConfig cfg;
  cfg.trials = 50;
  const auto a = run_trials(cfg, Method::R3, Execution::Parallel);
  const auto b = run_trials(cfg, Method::R3, Execution::Serial);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::ostringstream ta, tb;
    for (const auto& t : a[i].transcripts) emit_trace(t, "x", ta);
    for (const auto& t : b[i].transcripts) emit_trace(t, "x", tb);
    if (ta.str() != tb.str() || a[i].generated != b[i].generated) ++mismatched;
  }
  // Same task, different run seed: transcripts must differ.
  const auto task = toy::make_task(0, {});
  toy::NoisyOracleDenoiser dn(task, 0.3);
  toy::OracleProcessReward prm(task, {});
  const std::vector<std::vector<TokenId>> prompts{task.prompt()};
  std::size_t differ = 0;
  const std::size_t pairs = 300;
  for (std::size_t s = 0; s < pairs; ++s) {
    R3Config c1, c2;
    c1.seed = 2 * s;
    c2.seed = 2 * s + 1;
    std::ostringstream t1, t2;
    emit_trace(run_r3(prompts, toy::kMaskId, dn, prm, c1).items[0].transcript, "x", t1);
    emit_trace(run_r3(prompts, toy::kMaskId, dn, prm, c2).items[0].transcript, "x", t2);
    differ += t1.str() != t2.str() ? 1 : 0;
  }
  const double rate = static_cast<double>(differ) / static_cast<double>(pairs);
  return {mismatched == 0 && rate >= kSeedDiffRate,
          fmt("identical-seed mismatches %.0f/50, differing-seed transcripts differ in %.4f of %.0f pairs",
              static_cast<double>(mismatched), rate, static_cast<double>(pairs))};
}

Outcome pass1_equivalence() {
  std::size_t bad = 0;
  const std::size_t n = 200;
  ConstantReward never(1.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto task = toy::make_task(s, {});
    toy::NoisyOracleDenoiser dn(task, 0.3);
    R3Config cfg;
    cfg.seed = s;
    const std::vector<std::vector<TokenId>> prompts{task.prompt()};
    const auto a = run_r3(prompts, toy::kMaskId, dn, never, cfg);
    const auto b = run_pass1(prompts, toy::kMaskId, dn, cfg);
    if (!(a.items[0].seq == b.items[0].seq)) ++bad;
  }
  return {bad == 0, fmt("%.0f seeds, %.0f token mismatches", static_cast<double>(n), static_cast<double>(bad))};
}

Outcome metric_equivalence() {
  RngStream r(0x10C);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < kRandomCases; ++t) {
    const std::size_t n = 1 + r.uniform_below(8), w = 1 + r.uniform_below(8);
    std::size_t arg_p = 0, arg_l = 0;
    double best_p = -1.0, best_l = -INFINITY;
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<double> sc(w);
      for (auto& x : sc) x = 1e-6 + (1.0 - 1e-6) * r.uniform01();
      const double p = window_metric(sc, Metric::Product);
      double l = 0.0;
      for (double x : sc) l += std::log(x);
      if (p > best_p) best_p = p, arg_p = s;
      if (l > best_l) best_l = l, arg_l = s;
    }
    if (arg_p != arg_l) ++bad;
  }
  return {bad == 0, fmt("%.0f candidate sets, %.0f disagreements", static_cast<double>(kRandomCases),
                        static_cast<double>(bad))};
}

}  // namespace

int main() {
  report(1, "call-count reproduction", 1, call_counts);
  report(2, "remask formula oracle", 1, formula_oracle);
  report(3, "anti-monotonicity and range", 5, anti_monotone);
  report(4, "mask accounting and window locality", 5, mask_accounting);
  report(5, "directional accuracy", 120, directional);
  report(6, "window-size trend", 300, window_trend);
  report(7, "determinism", 10, determinism);
  report(8, "pass1 equivalence", 5, pass1_equivalence);
  report(9, "metric equivalence", 1, metric_equivalence);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
