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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mamba/model.hpp"
#include "mamba/samplers.hpp"
#include "mamba/stein.hpp"

namespace mamba {

// ---------------------------------------------------------------------------
// Successive-halving schedule

struct ScheduleRound {
  std::size_t round = 0;
  std::size_t arms = 0;  // |S_i|
  double budget = 0.0;   // r_i, per arm
};

/// floor(log_eta(m)) in exact integer arithmetic.
std::size_t floor_log(std::size_t m, std::size_t eta);

/// Survivor count after one prune: max(1, floor(arms / eta)).
std::size_t survivors_after(std::size_t arms, std::size_t eta);

/// Rounds i = 0 .. floor(log_eta M) - 1 with r_i = T / (|S_i| floor(log_eta M)).
std::vector<ScheduleRound> mamba_schedule(std::size_t num_arms, std::size_t eta,
                                          double total_budget);

// ---------------------------------------------------------------------------
// Pruning

struct ArmReward {
  std::size_t arm_id = 0;
  double reward = 0.0;  // -inf for diverged arms
};

/// Arms sorted by decreasing reward, ties to the lower arm id.
std::vector<ArmReward> rank_rewards(std::span<const ArmReward> rewards);

/// The max(1, floor(len / eta)) best arms, in rank order.
std::vector<std::size_t> prune(std::span<const ArmReward> rewards, std::size_t eta);

struct ArmRoundRecord {
  std::size_t arm_id = 0;
  double budget = 0.0;
  double reward = 0.0;
  bool pruned = false;
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<ArmRoundRecord> arms;  // in arm id order
  std::vector<std::size_t> pruned;
  std::vector<std::size_t> survivors;  // in rank order
};

/// Evaluates arm `arm_id` after granting it `budget` more units in round
/// `round`; returns its reward. Must be safe to call concurrently for
/// distinct arms.
using ArmEvaluator =
    std::function<double(std::size_t arm_id, std::size_t round, double budget)>;

struct HalvingResult {
  std::size_t best_arm = 0;
  double best_reward = 0.0;
  std::vector<RoundRecord> rounds;
};

/// Halving loop shared by chain-backed and synthetic-reward runs. Arms in
/// a round are evaluated on up to `workers` threads; the prune is serial.
/// Throws AllDiverged when every arm of a round reports -inf.
HalvingResult successive_halving(std::span<const std::size_t> arm_ids, std::size_t eta,
                                 double total_budget, const ArmEvaluator& evaluate,
                                 int workers = 1);

// ---------------------------------------------------------------------------
// MAMBA over SGMCMC chains

enum class Metric { kKsd, kFssd };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

struct SteinSettings {
  KernelSpec kernel = KernelSpec::imq();
  std::size_t thin = 10;
  double burn_in = 0.1;
  GradMode grad_mode = GradMode::kFullbatch;
  FssdConfig fssd{};
  double fssd_bandwidth = 0.0;  // <= 0: median heuristic
};

struct Arm {
  std::size_t arm_id = 0;
  double log10_step = 0.0;
  SamplerConfig config;
};

/// Cartesian grid of arms: step sizes outermost, then batch fractions, then
/// leapfrog counts. Each arm gets its own seed derived from `base_seed`.
std::vector<Arm> enumerate_arms(const SamplerConfig& base, std::span<const double> log10_steps,
                                std::span<const double> batch_fractions,
                                std::span<const int> leapfrogs, std::uint64_t base_seed);

/// Reward of one chain under the chosen metric: -KSD or -FSSD, -inf when the
/// chain diverged or recorded nothing.
double chain_reward(const Chain& chain, const TargetModel& model, Metric metric,
                    const SteinSettings& stein, std::uint64_t fssd_seed);

struct MambaOptions {
  Metric metric = Metric::kKsd;
  Budget total_budget = Budget::iterations(1000);
  std::size_t eta = 3;
  SteinSettings stein{};
  std::size_t record_every = 1;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct MambaResult {
  std::size_t best_arm = 0;
  SamplerConfig best_config;
  double best_reward = 0.0;
  std::vector<RoundRecord> rounds;
  std::vector<ChainRun> runs;  // indexed by position in the arm list
};

/// Runs every arm from `init`; surviving arms resume their chains each round
/// and are scored on their cumulative chain.
MambaResult mamba_run(const TargetModel& model, std::span<const Arm> arms, const MapResult* map,
                      const Vector& init, const MambaOptions& options);

/// Synthetic-reward mode: reward(arm, cumulative budget, rng) replaces
/// chain + Stein discrepancy.
using SyntheticReward =
    std::function<double(std::size_t arm_id, double cumulative_budget, RandomStream& rng)>;

HalvingResult mamba_run_synthetic(std::size_t num_arms, std::size_t eta, double total_budget,
                                  const SyntheticReward& reward, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Baselines

enum class GridObjective { kKsd, kLogLoss };

struct GridPoint {
  std::size_t arm_id = 0;
  SamplerConfig config;
  double metric = 0.0;  // lower is better; +inf when diverged
  bool diverged = false;
};

struct GridResult {
  std::size_t best_arm = 0;
  SamplerConfig best_config;
  std::vector<GridPoint> points;
};

struct GridOptions {
  std::size_t iterations = 5000;
  double noise_scale = 0.2;
  GridObjective objective = GridObjective::kKsd;
  SteinSettings stein{};
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Runs each configuration from theta_MAP + N(0, noise_scale^2 I) for a fixed
/// iteration count and keeps the one with the smallest metric.
GridResult grid_search_tune(const TargetModel& model, std::span<const Arm> arms,
                            const MapResult& map, const GridOptions& options);

/// h = 1/N with a 10% batch.
SamplerConfig heuristic_tune(std::size_t num_data, const SamplerConfig& base = SamplerConfig{});

// ---------------------------------------------------------------------------
// Best-arm guarantees

struct BanditDiagnostics {
  std::vector<double> gaps;  // alpha_s = nu_1 - nu_s, rank order
  bool h2_defined = false;   // false when the top two rewards tie
  double h2 = 0.0;           // max_{s >= 2} s / alpha_s^2, ranks 1-based
  double sigma2_ksd = 0.0;
  double budget_bound_T = 0.0;  // budget giving success probability >= 1 - delta
};

/// `ranked_rewards` sorted in decreasing order.
BanditDiagnostics diagnostics(std::span<const double> ranked_rewards, double sigma2_ksd,
                              std::size_t eta, std::size_t num_arms, double delta);

/// (2 eta - 1) log_eta(M) exp(-eta T / (4 sigma2 H2 (log_eta(M) + 1))).
double best_arm_failure_bound(std::size_t eta, std::size_t num_arms, double total_budget,
                              double sigma2, double h2);

/// Plug-in Var over samples of the Stein-kernel row mean, maximised over the
/// given sample sets.
double estimate_sigma2_ksd(std::span<const SteinSampleSet> sets, const KernelSpec& spec);

}  // namespace mamba
