// Copyright 2026 The mamba Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mamba/bandit.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "mamba/config.hpp"
#include "mamba/errors.hpp"
#include "support.hpp"

namespace mamba {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// --------------------------------------------------------------------------
// Schedule arithmetic

TEST(Schedule, TwentySevenArms) {
  const auto s = mamba_schedule(27, 3, 81.0);
  ASSERT_EQ(s.size(), 3u);
  const std::size_t arms[] = {27, 9, 3};
  const double budget[] = {1.0, 3.0, 9.0};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s[i].round, i);
    EXPECT_EQ(s[i].arms, arms[i]);
    EXPECT_EQ(s[i].budget, budget[i]);
    EXPECT_EQ(s[i].arms * s[i].budget, 27.0);
  }
  EXPECT_EQ(s[1].budget, 3.0 * s[0].budget);
  EXPECT_EQ(s[2].budget, 3.0 * s[1].budget);
}

TEST(Schedule, FloorOfLogWithRemainder) {
  const auto s = mamba_schedule(10, 3, 60.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].arms, 10u);
  EXPECT_EQ(s[0].budget, 3.0);
  EXPECT_EQ(s[1].arms, 3u);
  EXPECT_EQ(s[1].budget, 10.0);
}

TEST(Schedule, SmallestLegalInstance) {
  const auto s = mamba_schedule(3, 3, 30.0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].arms, 3u);
  EXPECT_EQ(s[0].budget, 10.0);
  EXPECT_EQ(survivors_after(3, 3), 1u);
}

TEST(Schedule, RejectsDegenerateInputs) {
  EXPECT_THROW(mamba_schedule(1, 3, 10.0), InvalidArgument);
  EXPECT_THROW(mamba_schedule(9, 1, 10.0), InvalidArgument);
  EXPECT_THROW(mamba_schedule(9, 3, 0.0), InvalidArgument);
  try {
    mamba_schedule(2, 3, 10.0);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("0 rounds"), std::string::npos);
  }
}

TEST(Schedule, FloorLogIsExact) {
  EXPECT_EQ(floor_log(243, 3), 5u);
  EXPECT_EQ(floor_log(242, 3), 4u);
  EXPECT_EQ(floor_log(1000, 10), 3u);
  EXPECT_EQ(floor_log(999, 10), 2u);
  EXPECT_EQ(floor_log(2, 3), 0u);
  EXPECT_EQ(floor_log(std::size_t{1} << 40, 2), 40u);
}

TEST(Schedule, ConservesBudgetPerRound) {
  for (std::size_t eta : {2u, 3u, 4u, 5u}) {
    for (std::size_t m = eta; m <= 200; ++m) {
      const double t = 1000.0 + static_cast<double>(m);
      const auto s = mamba_schedule(m, eta, t);
      const double per_round = t / static_cast<double>(s.size());
      double total = 0.0;
      std::size_t arms = m;
      for (const auto& r : s) {
        EXPECT_EQ(r.arms, arms);
        const double agg = static_cast<double>(r.arms) * r.budget;
        EXPECT_LE(std::abs(agg - per_round), std::nextafter(per_round, 2 * per_round) - per_round);
        total += agg;
        arms = std::max<std::size_t>(1, arms / eta);
      }
      std::size_t power = 1;
      for (std::size_t k = 0; k < s.size(); ++k) power *= eta;
      if (power == m) EXPECT_NEAR(total, t, 1e-9 * t);
    }
  }
}

// --------------------------------------------------------------------------
// Pruning

TEST(Prune, KeepsTopThird) {
  const std::vector<ArmReward> r{{0, -1.0}, {1, -2.0}, {2, -3.0}};
  EXPECT_EQ(prune(r, 3), (std::vector<std::size_t>{0}));
}

TEST(Prune, TiesGoToLowerArmId) {
  const std::vector<ArmReward> r{{7, -1.0}, {3, -1.0}, {5, -1.0}, {1, -1.0}};
  EXPECT_EQ(prune(r, 2), (std::vector<std::size_t>{1, 3}));
}

TEST(Prune, NeverEliminatesEveryone) {
  const std::vector<ArmReward> r{{0, -5.0}, {1, -2.0}};
  EXPECT_EQ(prune(r, 3), (std::vector<std::size_t>{1}));
}

TEST(Prune, DivergedArmsRankLast) {
  const std::vector<ArmReward> r{{0, kNegInf}, {1, -1e9}, {2, kNegInf}};
  EXPECT_EQ(prune(r, 3), (std::vector<std::size_t>{1}));
}

// --------------------------------------------------------------------------
// Successive halving with injected rewards

// Deterministic pseudo-random reward table indexed by (arm, round).
double table_reward(std::size_t arm, std::size_t round) {
  const std::uint64_t h = derive_seed(arm * 131 + 7, round);
  return static_cast<double>(h % 100000) / 1000.0 - 50.0;
}

TEST(Halving, MonotonePruningAndBestSurvivesEveryRound) {
  std::vector<std::size_t> ids(27);
  for (std::size_t i = 0; i < 27; ++i) ids[i] = i;
  const auto result = successive_halving(
      ids, 3, 81.0, [](std::size_t a, std::size_t r, double) { return table_reward(a, r); });
  std::set<std::size_t> previous(ids.begin(), ids.end());
  for (const auto& round : result.rounds) {
    std::set<std::size_t> arms;
    for (const auto& a : round.arms) arms.insert(a.arm_id);
    EXPECT_EQ(arms, previous);
    for (auto s : round.survivors) EXPECT_TRUE(arms.count(s));
    EXPECT_TRUE(std::count(round.survivors.begin(), round.survivors.end(), result.best_arm));
    previous = std::set<std::size_t>(round.survivors.begin(), round.survivors.end());
  }
  EXPECT_EQ(result.rounds.back().survivors.size(), 1u);
}

TEST(Halving, InvariantUnderIncreasingTransform) {
  std::vector<std::size_t> ids(30);
  for (std::size_t i = 0; i < 30; ++i) ids[i] = i + 100;
  auto base = [](std::size_t a, std::size_t r, double) { return table_reward(a, r); };
  auto squashed = [](std::size_t a, std::size_t r, double) {
    return std::atan(0.1 * table_reward(a, r)) * 5.0 + 2.0;
  };
  const auto x = successive_halving(ids, 3, 90.0, base);
  const auto y = successive_halving(ids, 3, 90.0, squashed);
  EXPECT_EQ(x.best_arm, y.best_arm);
  ASSERT_EQ(x.rounds.size(), y.rounds.size());
  for (std::size_t i = 0; i < x.rounds.size(); ++i) {
    EXPECT_EQ(x.rounds[i].survivors, y.rounds[i].survivors);
    EXPECT_EQ(x.rounds[i].pruned, y.rounds[i].pruned);
  }
}

TEST(Halving, AllDivergedIsExplicitFailure) {
  const std::vector<std::size_t> ids{0, 1, 2};
  EXPECT_THROW(successive_halving(ids, 3, 3.0, [](std::size_t, std::size_t, double) { return kNegInf; }),
               AllDiverged);
}

TEST(Halving, RejectsDuplicateIds) {
  const std::vector<std::size_t> ids{0, 1, 1};
  EXPECT_THROW(successive_halving(ids, 3, 3.0, [](std::size_t, std::size_t, double) { return 0.0; }),
               InvalidArgument);
}

TEST(Halving, ParallelEvaluationMatchesSerial) {
  std::vector<std::size_t> ids(9);
  for (std::size_t i = 0; i < 9; ++i) ids[i] = i;
  auto f = [](std::size_t a, std::size_t r, double) { return table_reward(a, r); };
  const auto serial = successive_halving(ids, 3, 18.0, f, 1);
  const auto parallel = successive_halving(ids, 3, 18.0, f, 4);
  EXPECT_EQ(serial.best_arm, parallel.best_arm);
  for (std::size_t i = 0; i < serial.rounds.size(); ++i) {
    EXPECT_EQ(serial.rounds[i].survivors, parallel.rounds[i].survivors);
  }
}

SyntheticReward gaussian_rewards(double sigma) {
  return [sigma](std::size_t arm, double cumulative, RandomStream& rng) {
    return -static_cast<double>(arm) + sigma / std::sqrt(cumulative) * rng.normal();
  };
}

TEST(Synthetic, IdentifiesBestArm) {
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    if (mamba_run_synthetic(9, 3, 1.0, gaussian_rewards(0.05), trial).best_arm == 0) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(Synthetic, FailureRateWithinTheoreticalBound) {
  const double sigma = 1.0, total = 24.0;
  const double h2 = 2.0;  // unit gaps: max_s s / (s - 1)^2 at s = 2
  const double bound = best_arm_failure_bound(3, 9, total, sigma * sigma, h2);
  int failures = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    if (mamba_run_synthetic(9, 3, total, gaussian_rewards(sigma), 1000 + trial).best_arm != 0) {
      ++failures;
    }
  }
  EXPECT_LE(static_cast<double>(failures) / trials, bound) << failures << " failures";
}

// --------------------------------------------------------------------------
// Arms and MAMBA on a real model

TEST(Arms, EnumerationOrder) {
  SamplerConfig base;
  base.kind = SamplerKind::kSghmc;
  const std::vector<double> steps{-3.0, -4.0};
  const std::vector<double> taus{1.0, 0.1};
  const std::vector<int> lfs{5, 10};
  const auto arms = enumerate_arms(base, steps, taus, lfs, 42);
  ASSERT_EQ(arms.size(), 8u);
  EXPECT_EQ(arms[0].config.leapfrog, 5);
  EXPECT_EQ(arms[1].config.leapfrog, 10);
  EXPECT_EQ(arms[2].config.batch_fraction, 0.1);
  EXPECT_EQ(arms[4].log10_step, -4.0);
  EXPECT_DOUBLE_EQ(arms[4].config.step_size, 1e-4);
  for (std::size_t i = 0; i < arms.size(); ++i) {
    EXPECT_EQ(arms[i].arm_id, i);
    EXPECT_EQ(arms[i].config.seed, derive_seed(42, i));
  }
  base.kind = SamplerKind::kSgld;
  EXPECT_EQ(enumerate_arms(base, steps, taus, lfs, 42).size(), 4u);
}

class MambaOnGaussian : public ::testing::Test {
 protected:
  void SetUp() override {
    model = build_gaussian_conjugate_model(500, 2, 1.0, 1.0, 3);
    map = find_map(*model, Vector::Zero(2));
    const std::vector<double> steps{-3.0, -3.5, -4.0};
    const std::vector<double> taus{1.0, 0.1, 0.02};
    arms = enumerate_arms(SamplerConfig{}, steps, taus, {}, 7);
    options.total_budget = Budget::iterations(3000);
    options.stein.thin = 5;
  }
  ModelPtr model;
  MapResult map;
  std::vector<Arm> arms;
  MambaOptions options;
};

TEST_F(MambaOnGaussian, DeterministicRoundRecords) {
  const auto a = mamba_run(*model, arms, &map, map.theta_map, options);
  const auto b = mamba_run(*model, arms, &map, map.theta_map, options);
  EXPECT_EQ(a.best_arm, b.best_arm);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    ASSERT_EQ(a.rounds[i].arms.size(), b.rounds[i].arms.size());
    for (std::size_t k = 0; k < a.rounds[i].arms.size(); ++k) {
      EXPECT_EQ(a.rounds[i].arms[k].reward, b.rounds[i].arms[k].reward);
    }
  }
}

TEST_F(MambaOnGaussian, WorkersDoNotChangeIterationModeResults) {
  const auto a = mamba_run(*model, arms, &map, map.theta_map, options);
  options.workers = 3;
  const auto b = mamba_run(*model, arms, &map, map.theta_map, options);
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    for (std::size_t k = 0; k < a.rounds[i].arms.size(); ++k) {
      EXPECT_EQ(a.rounds[i].arms[k].reward, b.rounds[i].arms[k].reward);
    }
  }
}

TEST_F(MambaOnGaussian, SurvivorsResumeTheirChains) {
  const auto result = mamba_run(*model, arms, &map, map.theta_map, options);
  const auto schedule = mamba_schedule(arms.size(), options.eta, 3000.0);
  double cumulative = 0.0;
  for (const auto& r : schedule) cumulative += r.budget;
  std::size_t pos = 0;
  while (arms[pos].arm_id != result.best_arm) ++pos;
  const Chain fresh = run_chain(*model, arms[pos].config, nullptr, map.theta_map,
                                Budget::iterations(std::floor(cumulative)));
  const Chain& kept = result.runs[pos].chain;
  ASSERT_EQ(kept.size(), fresh.size());
  EXPECT_EQ(kept.thetas(), fresh.thetas());
  EXPECT_EQ(result.best_reward,
            chain_reward(kept, *model, Metric::kKsd, options.stein, 0));
}

TEST_F(MambaOnGaussian, DivergedArmLoses) {
  std::vector<Arm> three(arms.begin(), arms.begin() + 3);
  three[0].config.step_size = 1.0;  // far past the stability limit
  three[0].config.batch_fraction = 1.0;
  const auto result = mamba_run(*model, three, &map, map.theta_map, options);
  EXPECT_NE(result.best_arm, 0u);
  EXPECT_EQ(result.rounds[0].arms[0].reward, kNegInf);
}

TEST_F(MambaOnGaussian, AllDivergedFails) {
  std::vector<Arm> bad(arms.begin(), arms.begin() + 3);
  for (auto& a : bad) {
    a.config.step_size = 2.0;
    a.config.batch_fraction = 1.0;
  }
  EXPECT_THROW(mamba_run(*model, bad, &map, map.theta_map, options), AllDiverged);
}

TEST_F(MambaOnGaussian, FssdMetricRuns) {
  options.metric = Metric::kFssd;
  options.stein.fssd.opt_steps = 3;
  const auto result = mamba_run(*model, arms, &map, map.theta_map, options);
  EXPECT_TRUE(std::isfinite(result.best_reward));
  EXPECT_LE(result.best_reward, 0.0);
}

TEST(ChainReward, NegatedKsdAndSentinels) {
  const auto model = build_gaussian_conjugate_model(100, 2, 1.0, 1.0, 1);
  SamplerConfig cfg;
  cfg.step_size = 1e-3;
  const auto chain = run_chain(*model, cfg, nullptr, Vector::Zero(2), Budget::iterations(100));
  SteinSettings st;
  EXPECT_EQ(chain_reward(chain, *model, Metric::kKsd, st, 0),
            -ksd_reward(chain, *model, st.thin, st.burn_in, st.grad_mode, st.kernel));
  EXPECT_EQ(chain_reward(Chain{}, *model, Metric::kKsd, st, 0), kNegInf);
  Chain diverged = chain;
  diverged.diverged = true;
  EXPECT_EQ(chain_reward(diverged, *model, Metric::kKsd, st, 0), kNegInf);
}

// --------------------------------------------------------------------------
// Baseline tuners

TEST(Grid, SinglePointIsReturned) {
  const auto model = build_gaussian_conjugate_model(200, 2, 1.0, 1.0, 1);
  const auto map = find_map(*model, Vector::Zero(2));
  const std::vector<double> steps{-4.0};
  const std::vector<double> taus{0.1};
  const auto arms = enumerate_arms(SamplerConfig{}, steps, taus, {}, 0);
  GridOptions opt;
  opt.iterations = 300;
  const auto result = grid_search_tune(*model, arms, map, opt);
  EXPECT_EQ(result.best_arm, 0u);
  EXPECT_DOUBLE_EQ(result.best_config.step_size, 1e-4);
}

TEST(Grid, DefaultStepGridHasFourteenPoints) {
  const RunConfig defaults;
  const auto& steps = defaults.tuner.log10_step_sizes;
  ASSERT_EQ(steps.size(), 14u);
  for (std::size_t i = 0; i < steps.size(); ++i) EXPECT_EQ(steps[i], -1.0 - 0.5 * i);
}

TEST(Grid, ReproducibleMetricsAndBestIsMinimum) {
  const auto model = build_synthetic_logistic_model(500, 3, 10.0, 2);
  const auto map = find_map(*model, Vector::Zero(3));
  const std::vector<double> steps{-3.0, -4.0, -5.0};
  const std::vector<double> taus{0.1};
  const auto arms = enumerate_arms(SamplerConfig{}, steps, taus, {}, 1);
  GridOptions opt;
  opt.iterations = 400;
  const auto a = grid_search_tune(*model, arms, map, opt);
  const auto b = grid_search_tune(*model, arms, map, opt);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].metric, b.points[i].metric);
    best = std::min(best, a.points[i].metric);
  }
  EXPECT_EQ(a.points[a.best_arm].metric, best);
  opt.objective = GridObjective::kLogLoss;
  const auto c = grid_search_tune(*model, arms, map, opt);
  for (const auto& p : c.points) EXPECT_GT(p.metric, 0.0);
}

TEST(Grid, LogLossNeedsLogisticModel) {
  const auto model = build_gaussian_conjugate_model(50, 1, 1.0, 1.0, 1);
  const auto map = find_map(*model, Vector::Zero(1));
  const std::vector<double> steps{-3.0};
  const std::vector<double> taus{0.1};
  GridOptions opt;
  opt.objective = GridObjective::kLogLoss;
  EXPECT_THROW(grid_search_tune(*model, enumerate_arms(SamplerConfig{}, steps, taus, {}, 0), map, opt),
               InvalidArgument);
}

TEST(Heuristic, InverseDatasetSize) {
  EXPECT_EQ(heuristic_tune(1000000).step_size, 1e-6);
  EXPECT_EQ(heuristic_tune(1).step_size, 1.0);
  for (std::size_t n : {1u, 17u, 1000u, 1000000u}) EXPECT_EQ(heuristic_tune(n).batch_fraction, 0.1);
  SamplerConfig base;
  base.kind = SamplerKind::kSgnht;
  base.thermostat = 0.3;
  const auto c = heuristic_tune(10, base);
  EXPECT_EQ(c.kind, SamplerKind::kSgnht);
  EXPECT_EQ(c.thermostat, 0.3);
}

}  // namespace
}  // namespace mamba
