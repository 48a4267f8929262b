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

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>

#include <omp.h>

#include "mamba/errors.hpp"

namespace mamba {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Runs body(k) for k in [0, count) on up to `workers` threads and rethrows
// the first exception in index order.
template <typename Body>
void parallel_over(std::size_t count, int workers, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers)) if (workers > 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::size_t floor_log(std::size_t m, std::size_t eta) {
  if (eta < 2) throw InvalidArgument("eta must be >= 2");
  std::size_t rounds = 0;
  for (std::size_t p = eta; p <= m; p *= eta) {
    ++rounds;
    if (p > m / eta) break;
  }
  return rounds;
}

std::size_t survivors_after(std::size_t arms, std::size_t eta) {
  return std::max<std::size_t>(1, arms / eta);
}

std::vector<ScheduleRound> mamba_schedule(std::size_t num_arms, std::size_t eta,
                                          double total_budget) {
  if (num_arms < 2) throw InvalidArgument("MAMBA needs at least two arms");
  if (eta < 2) throw InvalidArgument("eta must be >= 2");
  if (!(total_budget > 0.0) || !std::isfinite(total_budget)) {
    throw InvalidArgument("total budget must be positive and finite");
  }
  const std::size_t rounds = floor_log(num_arms, eta);
  if (rounds == 0) {
    throw InvalidArgument("M = " + std::to_string(num_arms) + " < eta = " +
                          std::to_string(eta) +
                          " gives floor(log_eta M) = 0 rounds; need M >= eta for a prune");
  }
  std::vector<ScheduleRound> out;
  std::size_t arms = num_arms;
  for (std::size_t i = 0; i < rounds; ++i) {
    out.push_back({i, arms, total_budget / (static_cast<double>(arms) * static_cast<double>(rounds))});
    arms = survivors_after(arms, eta);
  }
  return out;
}

std::vector<ArmReward> rank_rewards(std::span<const ArmReward> rewards) {
  std::vector<ArmReward> ranked(rewards.begin(), rewards.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const ArmReward& a, const ArmReward& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    return a.arm_id < b.arm_id;
  });
  return ranked;
}

std::vector<std::size_t> prune(std::span<const ArmReward> rewards, std::size_t eta) {
  if (rewards.empty()) throw InvalidArgument("prune: no arms");
  if (eta < 2) throw InvalidArgument("eta must be >= 2");
  for (const auto& r : rewards) {
    if (std::isnan(r.reward)) throw InvalidArgument("prune: NaN reward");
  }
  const auto ranked = rank_rewards(rewards);
  const std::size_t keep = survivors_after(ranked.size(), eta);
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) out.push_back(ranked[k].arm_id);
  return out;
}

HalvingResult successive_halving(std::span<const std::size_t> arm_ids, std::size_t eta,
                                 double total_budget, const ArmEvaluator& evaluate,
                                 int workers) {
  {
    std::vector<std::size_t> sorted(arm_ids.begin(), arm_ids.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidArgument("arm ids must be unique");
    }
  }
  const auto schedule = mamba_schedule(arm_ids.size(), eta, total_budget);

  HalvingResult result;
  std::vector<std::size_t> current(arm_ids.begin(), arm_ids.end());
  std::sort(current.begin(), current.end());

  for (const auto& step : schedule) {
    std::vector<ArmReward> rewards(current.size());
    parallel_over(current.size(), workers, [&](std::size_t k) {
      rewards[k] = {current[k], evaluate(current[k], step.round, step.budget)};
    });
    if (std::all_of(rewards.begin(), rewards.end(),
                    [](const ArmReward& r) { return r.reward == kNegInf; })) {
      throw AllDiverged("every arm diverged in round " + std::to_string(step.round));
    }

    RoundRecord record;
    record.round = step.round;
    record.survivors = prune(rewards, eta);
    for (const auto& r : rewards) {
      const bool kept = std::find(record.survivors.begin(), record.survivors.end(), r.arm_id) !=
                        record.survivors.end();
      record.arms.push_back({r.arm_id, step.budget, r.reward, !kept});
      if (!kept) record.pruned.push_back(r.arm_id);
    }
    result.best_arm = record.survivors.front();
    result.best_reward = std::find_if(rewards.begin(), rewards.end(), [&](const ArmReward& r) {
                           return r.arm_id == result.best_arm;
                         })->reward;

    current = record.survivors;
    std::sort(current.begin(), current.end());
    result.rounds.push_back(std::move(record));
  }
  return result;
}

std::string to_string(Metric metric) { return metric == Metric::kKsd ? "ksd" : "fssd"; }

Metric parse_metric(const std::string& name) {
  if (name == "ksd") return Metric::kKsd;
  if (name == "fssd") return Metric::kFssd;
  throw InvalidArgument("unknown metric '" + name + "' (expected ksd or fssd)");
}

std::vector<Arm> enumerate_arms(const SamplerConfig& base, std::span<const double> log10_steps,
                                std::span<const double> batch_fractions,
                                std::span<const int> leapfrogs, std::uint64_t base_seed) {
  if (log10_steps.empty() || batch_fractions.empty()) {
    throw InvalidArgument("step-size and batch-fraction grids must be non-empty");
  }
  static constexpr int kSingle[] = {1};
  const bool hmc = base.kind == SamplerKind::kSghmc;
  std::span<const int> lf = hmc && !leapfrogs.empty() ? leapfrogs : std::span<const int>(kSingle);

  std::vector<Arm> arms;
  for (double lh : log10_steps) {
    for (double tau : batch_fractions) {
      for (int l : lf) {
        Arm arm{arms.size(), lh, base};
        arm.config.step_size = std::pow(10.0, lh);
        arm.config.batch_fraction = tau;
        arm.config.leapfrog = hmc ? l : base.leapfrog;
        arm.config.seed = derive_seed(base_seed, arm.arm_id);
        arm.config.validate();
        arms.push_back(std::move(arm));
      }
    }
  }
  return arms;
}

double chain_reward(const Chain& chain, const TargetModel& model, Metric metric,
                    const SteinSettings& stein, std::uint64_t fssd_seed) {
  if (chain.diverged || chain.empty()) return kNegInf;
  double discrepancy = 0.0;
  try {
    if (metric == Metric::kKsd) {
      discrepancy =
          ksd_reward(chain, model, stein.thin, stein.burn_in, stein.grad_mode, stein.kernel);
    } else {
      RandomStream rng(fssd_seed);
      discrepancy = fssd_reward(chain, model, stein.thin, stein.burn_in, stein.grad_mode,
                                stein.fssd, stein.fssd_bandwidth, rng);
    }
  } catch (const NumericalFailure&) {
    return kNegInf;
  }
  return std::isfinite(discrepancy) ? -discrepancy : kNegInf;
}

MambaResult mamba_run(const TargetModel& model, std::span<const Arm> arms, const MapResult* map,
                      const Vector& init, const MambaOptions& options) {
  if (arms.size() < 2) throw InvalidArgument("MAMBA needs at least two arms");
  MambaResult result;
  std::map<std::size_t, std::size_t> slot;
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < arms.size(); ++k) {
    slot[arms[k].arm_id] = k;
    ids.push_back(arms[k].arm_id);
    if (arms[k].config.use_cv && map == nullptr) {
      throw InvalidArgument("control-variate arms require a MAP estimate");
    }
    result.runs.push_back(start_chain(model, arms[k].config, init));
  }
  std::vector<double> granted(arms.size(), 0.0);

  const bool by_time = options.total_budget.mode == BudgetMode::kWallClockSeconds;
  auto evaluate = [&](std::size_t arm_id, std::size_t round, double budget) {
    const std::size_t k = slot.at(arm_id);
    ChainRun& run = result.runs[k];
    const double before = granted[k];
    granted[k] += budget;
    if (by_time) {
      advance_chain(model, arms[k].config, map, run, Budget::seconds(budget),
                    options.record_every);
    } else {
      // Whole iterations only; fractional budgets carry over to later rounds.
      const double todo = std::floor(granted[k]) - std::floor(before);
      if (todo >= 1.0) {
        advance_chain(model, arms[k].config, map, run, Budget::iterations(todo),
                      options.record_every);
      }
    }
    return chain_reward(run.chain, model, options.metric, options.stein,
                        derive_seed(options.seed, arm_id * 1024 + round));
  };

  auto halving = successive_halving(ids, options.eta, options.total_budget.amount, evaluate,
                                    options.workers);
  result.best_arm = halving.best_arm;
  result.best_reward = halving.best_reward;
  result.best_config = arms[slot.at(halving.best_arm)].config;
  result.rounds = std::move(halving.rounds);
  return result;
}

HalvingResult mamba_run_synthetic(std::size_t num_arms, std::size_t eta, double total_budget,
                                  const SyntheticReward& reward, std::uint64_t seed) {
  std::vector<std::size_t> ids(num_arms);
  std::vector<double> cumulative(num_arms, 0.0);
  std::vector<RandomStream> streams;
  for (std::size_t k = 0; k < num_arms; ++k) {
    ids[k] = k;
    streams.emplace_back(derive_seed(seed, k));
  }
  auto evaluate = [&](std::size_t arm_id, std::size_t, double budget) {
    cumulative[arm_id] += budget;
    return reward(arm_id, cumulative[arm_id], streams[arm_id]);
  };
  return successive_halving(ids, eta, total_budget, evaluate, 1);
}

GridResult grid_search_tune(const TargetModel& model, std::span<const Arm> arms,
                            const MapResult& map, const GridOptions& options) {
  if (arms.empty()) throw InvalidArgument("grid search needs at least one grid point");
  if (options.iterations < 1) throw InvalidArgument("grid search needs iterations >= 1");
  const auto* logistic = dynamic_cast<const LogisticModel*>(&model);
  if (options.objective == GridObjective::kLogLoss && logistic == nullptr) {
    throw InvalidArgument("log-loss objective requires the logistic model");
  }

  GridResult result;
  result.points.resize(arms.size());
  parallel_over(arms.size(), options.workers, [&](std::size_t k) {
    const Arm& arm = arms[k];
    RandomStream init_rng(derive_seed(options.seed, arm.arm_id));
    Vector init = map.theta_map;
    for (Eigen::Index i = 0; i < init.size(); ++i) init[i] += options.noise_scale * init_rng.normal();

    const Chain chain = run_chain(model, arm.config, &map, init,
                                  Budget::iterations(static_cast<double>(options.iterations)));
    GridPoint point{arm.arm_id, arm.config, std::numeric_limits<double>::infinity(), true};
    if (!chain.diverged && !chain.empty()) {
      point.diverged = false;
      if (options.objective == GridObjective::kKsd) {
        point.metric = -chain_reward(chain, model, Metric::kKsd, options.stein, 0);
      } else {
        const Chain thinned = thin_chain(chain, options.stein.thin, options.stein.burn_in);
        point.metric = logistic->log_loss(thinned.thetas(), logistic->covariates(),
                                          logistic->labels());
      }
      if (!std::isfinite(point.metric)) point.diverged = true;
    }
    result.points[k] = std::move(point);
  });

  const GridPoint* best = nullptr;
  for (const auto& p : result.points) {
    if (p.diverged) continue;
    if (best == nullptr || p.metric < best->metric ||
        (p.metric == best->metric && p.arm_id < best->arm_id)) {
      best = &p;
    }
  }
  if (best == nullptr) throw AllDiverged("every grid point diverged");
  result.best_arm = best->arm_id;
  result.best_config = best->config;
  return result;
}

SamplerConfig heuristic_tune(std::size_t num_data, const SamplerConfig& base) {
  if (num_data < 1) throw InvalidArgument("heuristic_tune: N must be >= 1");
  SamplerConfig config = base;
  config.step_size = 1.0 / static_cast<double>(num_data);
  config.batch_fraction = 0.1;
  return config;
}

}  // namespace mamba
