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

#include "r3/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "r3/baselines.hpp"
#include "r3/engine.hpp"
#include "r3/experiment.hpp"
#include "r3/remasking.hpp"
#include "r3/trace.hpp"

namespace r3 {

namespace {

class ConstantReward : public ProcessReward {
 public:
  explicit ConstantReward(double v) : v_(v) {}
  double score(std::span<const TokenId>, std::span<const TokenId>, RngStream&) override { return v_; }
  bool concurrent_safe() const override { return true; }

 private:
  double v_;
};

SelfCheck check(const std::string& name, const std::function<std::string()>& body) {
  SelfCheck c{name, false, {}};
  try {
    c.detail = body();
    c.ok = c.detail.empty();
  } catch (const std::exception& e) {
    c.detail = std::string("threw: ") + e.what();
  }
  return c;
}

std::string expect_near(double got, double want, double tol, const std::string& what) {
  if (std::abs(got - want) <= tol) return {};
  std::ostringstream os;
  os << what << ": got " << got << ", want " << want;
  return os.str();
}

}  // namespace

std::vector<SelfCheck> run_selftest() {
  std::vector<SelfCheck> out;
  const R3Config base;

  out.push_back(check("remask probabilities", [&] {
    const RemaskParams p = RemaskParams::from(base);
    const std::vector<double> s{0.2, 0.9};
    const auto pr = remask_probabilities(s, p);
    std::string err = expect_near(pr[0], 1.0, 1e-6, "low score");
    if (err.empty()) err = expect_near(pr[1], base.p_min, 1e-12, "high score");
    if (err.empty()) err = expect_near(quality_value(0.2, base.alpha_b), std::exp(-2.0), 1e-12, "quality");
    return err;
  }));

  const toy::ChainTask task = toy::make_task(11, {base.n_total, base.block_len, 3});
  const std::vector<std::vector<TokenId>> prompts{task.prompt()};

  out.push_back(check("review call counts", [&] {
    toy::NoisyOracleDenoiser dn(task, 0.3);
    ConstantReward never(1.0);
    ConstantReward always(0.0);
    const auto a = run_r3(prompts, toy::kMaskId, dn, never, base);
    const auto b = run_r3(prompts, toy::kMaskId, dn, always, base);
    if (a.counts.batched_prm_invocations != 2) return std::string("never-trigger run did not make 2 PRM calls");
    if (b.counts.batched_prm_invocations != 4) return std::string("always-trigger run did not make 4 PRM calls");
    return std::string();
  }));

  out.push_back(check("pass1 equals bon with one sample", [&] {
    toy::NoisyOracleDenoiser dn(task, 0.3);
    toy::OracleProcessReward prm(task, {});
    R3Config one = base;
    one.n_samples = 1;
    const auto p = run_pass1(prompts, toy::kMaskId, dn, one);
    const auto b = run_block_bon(prompts, toy::kMaskId, dn, prm, one);
    return p.items[0].seq == b.items[0].seq ? std::string() : std::string("sequences differ");
  }));

  out.push_back(check("serial and parallel trials agree", [&] {
    ExperimentConfig cfg;
    cfg.trials = 8;
    cfg.seed = 5;
    const auto s = run_trials(cfg, Method::R3, Execution::Serial);
    const auto p = run_trials(cfg, Method::R3, Execution::Parallel);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].generated != p[i].generated || !(s[i].counts == p[i].counts)) {
        return "trial " + std::to_string(i) + " differs";
      }
    }
    return std::string();
  }));

  out.push_back(check("trace replays", [&] {
    toy::NoisyOracleDenoiser dn(task, 0.5);
    toy::OracleProcessReward prm(task, {});
    const auto r = run_r3(prompts, toy::kMaskId, dn, prm, base);
    std::stringstream ss;
    emit_trace(r.items[0].transcript, "selftest", ss);
    const auto sum = replay_trace(parse_trace(ss));
    if (!sum.ok()) return sum.problems.front();
    if (auto bad = check_transcript(r.items[0].transcript)) return *bad;
    return std::string();
  }));

  return out;
}

}  // namespace r3
