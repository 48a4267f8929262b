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
#include <string>
#include <vector>

#include "mamba/model.hpp"
#include "mamba/random.hpp"

namespace mamba {

enum class SamplerKind { kSgld, kSghmc, kSgnht };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

/// One SGMCMC hyperparameter configuration.
struct SamplerConfig {
  SamplerKind kind = SamplerKind::kSgld;
  double step_size = 1e-4;
  double batch_fraction = 0.1;
  int leapfrog = 1;             // SGHMC trajectory length
  double friction = 0.01;       // SGHMC alpha
  double noise_estimate = 0.0;  // SGHMC beta-hat
  double thermostat = 0.01;     // SGNHT a
  bool use_cv = false;
  bool resample_momentum = true;  // SGHMC: redraw v ~ N(0, hI) per trajectory
  std::uint64_t seed = 0;

  void validate() const;
  std::string label() const;  // e.g. "sgld-cv"
};

/// Dynamical state of one chain.
struct ChainState {
  Vector theta;
  Vector momentum;          // SGHMC / SGNHT
  double thermostat = 0.0;  // SGNHT alpha_n
  std::uint64_t iteration = 0;
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e10;

/// Marks the state diverged when theta is non-finite or ||theta|| > 1e10.
bool check_divergence(ChainState& state);

/// grad(theta) -> out; the gradient of U, not of log pi.
using GradientFn = std::function<void(const Vector& theta, Vector& out)>;

/// theta' = theta - (h/2) grad + sqrt(h) xi.
void sgld_step(ChainState& state, const Vector& grad, double step_size, NoiseSource& noise);

struct SghmcParams {
  double step_size = 1e-4;
  int leapfrog = 1;
  double friction = 0.01;
  double noise_estimate = 0.0;
  bool resample_momentum = true;
};

/// L repetitions of {theta += v; v += -h grad U(theta) - alpha v + N(0, 2(alpha - beta) h)}.
/// `last_grad` receives the gradient evaluated at the returned theta.
void sghmc_trajectory(ChainState& state, const GradientFn& grad_fn, const SghmcParams& params,
                      NoiseSource& noise, Vector& last_grad);

/// v' = v - h grad - alpha v + sqrt(2ah) xi;  theta' = theta + v';
/// alpha' = alpha + v'.v'/D - h.
void sgnht_step(ChainState& state, const Vector& grad, double step_size, double thermostat_a,
                NoiseSource& noise);

struct Sample {
  std::uint64_t iteration = 0;
  double wall_time_sec = 0.0;
  Vector theta;
  Vector grad;  // stochastic gradient of U at theta
};

struct Chain {
  std::vector<Sample> samples;
  bool diverged = false;
  std::uint64_t total_iterations = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t dim() const {
    return samples.empty() ? 0 : static_cast<std::size_t>(samples.front().theta.size());
  }
  RowMatrix thetas() const;
  RowMatrix grads() const;
};

enum class BudgetMode { kWallClockSeconds, kIterations };

struct Budget {
  BudgetMode mode = BudgetMode::kIterations;
  double amount = 1.0;

  static Budget iterations(double n) { return {BudgetMode::kIterations, n}; }
  static Budget seconds(double s) { return {BudgetMode::kWallClockSeconds, s}; }
};

/// Everything needed to continue a chain exactly where it stopped.
struct ChainRun {
  ChainState state;
  RandomStream rng;
  IndexSampler batches;
  Vector grad;  // cached stochastic gradient at state.theta
  bool grad_valid = false;
  double elapsed_sec = 0.0;
  Chain chain;
};

ChainRun start_chain(const TargetModel& model, const SamplerConfig& config, const Vector& init);

/// Runs the configured dynamics until `budget` is exhausted, recording every
/// `record_every`-th state. Stops early on divergence.
void advance_chain(const TargetModel& model, const SamplerConfig& config, const MapResult* map,
                   ChainRun& run, const Budget& budget, std::size_t record_every = 1);

Chain run_chain(const TargetModel& model, const SamplerConfig& config, const MapResult* map,
                const Vector& init, const Budget& budget, std::size_t record_every = 1);

/// Drops floor(burn_in_fraction * len) leading samples, then keeps every
/// `thin`-th of the rest, always including the last sample.
Chain thin_chain(const Chain& chain, std::size_t thin, double burn_in_fraction);

}  // namespace mamba
