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

#include "mamba/samplers.hpp"

#include <chrono>
#include <cmath>

#include "mamba/errors.hpp"

namespace mamba {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kSgld:
      return "sgld";
    case SamplerKind::kSghmc:
      return "sghmc";
    case SamplerKind::kSgnht:
      return "sgnht";
  }
  return "unknown";
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "sgld") return SamplerKind::kSgld;
  if (name == "sghmc") return SamplerKind::kSghmc;
  if (name == "sgnht") return SamplerKind::kSgnht;
  throw InvalidArgument("unknown sampler kind '" + name + "' (expected sgld, sghmc or sgnht)");
}

void SamplerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw InvalidArgument("sampler step size must be positive");
  }
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw InvalidArgument("batch fraction must lie in (0, 1]");
  }
  if (kind == SamplerKind::kSghmc) {
    if (leapfrog < 1) throw InvalidArgument("SGHMC leapfrog count must be >= 1");
    if (!(friction > 0.0)) throw InvalidArgument("SGHMC friction must be positive");
    if (!(noise_estimate >= 0.0)) throw InvalidArgument("SGHMC noise estimate must be >= 0");
    if (!(friction >= noise_estimate)) {
      throw InvalidArgument("SGHMC requires friction >= noise estimate");
    }
  }
  if (kind == SamplerKind::kSgnht && !(thermostat > 0.0)) {
    throw InvalidArgument("SGNHT thermostat a must be positive");
  }
}

std::string SamplerConfig::label() const {
  return to_string(kind) + (use_cv ? "-cv" : "");
}

bool check_divergence(ChainState& state) {
  if (!state.theta.allFinite() || state.theta.norm() > kDivergenceNorm ||
      !state.momentum.allFinite() || !std::isfinite(state.thermostat)) {
    state.diverged = true;
  }
  return state.diverged;
}

void sgld_step(ChainState& state, const Vector& grad, double step_size, NoiseSource& noise) {
  Vector xi(state.theta.size());
  noise.standard_normal({xi.data(), static_cast<std::size_t>(xi.size())});
  state.theta += -0.5 * step_size * grad + std::sqrt(step_size) * xi;
  state.iteration += 1;
  check_divergence(state);
}

void sghmc_trajectory(ChainState& state, const GradientFn& grad_fn, const SghmcParams& params,
                      NoiseSource& noise, Vector& last_grad) {
  if (params.leapfrog < 1) throw InvalidArgument("SGHMC leapfrog count must be >= 1");
  if (params.friction < params.noise_estimate) {
    throw InvalidArgument("SGHMC requires friction >= noise estimate");
  }
  const auto d = static_cast<std::size_t>(state.theta.size());
  const double h = params.step_size;
  Vector z(state.theta.size());
  if (params.resample_momentum) {
    noise.standard_normal({z.data(), d});
    state.momentum = std::sqrt(h) * z;
  }
  const double noise_scale = std::sqrt(2.0 * (params.friction - params.noise_estimate) * h);
  for (int l = 0; l < params.leapfrog; ++l) {
    state.theta += state.momentum;
    grad_fn(state.theta, last_grad);
    noise.standard_normal({z.data(), d});
    state.momentum += -h * last_grad - params.friction * state.momentum + noise_scale * z;
    if (check_divergence(state)) break;
  }
  state.iteration += 1;
}

void sgnht_step(ChainState& state, const Vector& grad, double step_size, double thermostat_a,
                NoiseSource& noise) {
  Vector xi(state.theta.size());
  noise.standard_normal({xi.data(), static_cast<std::size_t>(xi.size())});
  state.momentum += -step_size * grad - state.thermostat * state.momentum +
                    std::sqrt(2.0 * thermostat_a * step_size) * xi;
  state.theta += state.momentum;
  state.thermostat +=
      state.momentum.squaredNorm() / static_cast<double>(state.theta.size()) - step_size;
  state.iteration += 1;
  check_divergence(state);
}

RowMatrix Chain::thetas() const {
  RowMatrix out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = samples[i].theta.transpose();
  }
  return out;
}

RowMatrix Chain::grads() const {
  RowMatrix out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = samples[i].grad.transpose();
  }
  return out;
}

ChainRun start_chain(const TargetModel& model, const SamplerConfig& config, const Vector& init) {
  config.validate();
  if (init.size() != static_cast<Eigen::Index>(model.dim())) {
    throw InvalidArgument("chain init dimension does not match the model");
  }
  if (!init.allFinite()) throw InvalidArgument("chain init must be finite");
  ChainRun run{ChainState{}, RandomStream(config.seed), IndexSampler(model.num_data()),
               Vector::Zero(init.size()), false, 0.0, Chain{}};
  run.state.theta = init;
  run.state.momentum = Vector::Zero(init.size());
  run.state.thermostat = config.kind == SamplerKind::kSgnht ? config.thermostat : 0.0;
  return run;
}

void advance_chain(const TargetModel& model, const SamplerConfig& config, const MapResult* map,
                   ChainRun& run, const Budget& budget, std::size_t record_every) {
  config.validate();
  if (record_every < 1) throw InvalidArgument("record_every must be >= 1");
  if (!(budget.amount > 0.0)) throw InvalidArgument("budget amount must be positive");
  if (config.use_cv && map == nullptr) {
    throw InvalidArgument("control-variate sampler requires a MAP estimate");
  }
  if (run.state.diverged) {
    run.chain.diverged = true;
    return;
  }

  const std::size_t n = batch_size_for(config.batch_fraction, model.num_data());
  const MapResult* cv = config.use_cv ? map : nullptr;
  auto estimate = [&](const Vector& theta, Vector& out) {
    estimate_gradient(model, theta, n, cv, run.batches, run.rng, out);
  };
  auto ensure_grad = [&] {
    if (!run.grad_valid) {
      estimate(run.state.theta, run.grad);
      run.grad_valid = true;
    }
  };

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const double offset = run.elapsed_sec;
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const bool by_time = budget.mode == BudgetMode::kWallClockSeconds;
  const auto max_iters = by_time ? 0 : static_cast<std::uint64_t>(std::floor(budget.amount));
  const SghmcParams hmc{config.step_size, config.leapfrog, config.friction,
                        config.noise_estimate, config.resample_momentum};

  for (std::uint64_t done = 0;; ++done) {
    if (by_time ? elapsed() >= budget.amount : done >= max_iters) break;

    switch (config.kind) {
      case SamplerKind::kSgld:
        ensure_grad();
        sgld_step(run.state, run.grad, config.step_size, run.rng);
        run.grad_valid = false;
        break;
      case SamplerKind::kSgnht:
        ensure_grad();
        sgnht_step(run.state, run.grad, config.step_size, config.thermostat, run.rng);
        run.grad_valid = false;
        break;
      case SamplerKind::kSghmc:
        sghmc_trajectory(run.state, estimate, hmc, run.rng, run.grad);
        run.grad_valid = true;
        break;
    }
    run.chain.total_iterations += 1;

    if (run.state.diverged) {
      run.chain.diverged = true;
      break;
    }
    if (run.state.iteration % record_every == 0) {
      ensure_grad();
      run.chain.samples.push_back(
          Sample{run.state.iteration, offset + elapsed(), run.state.theta, run.grad});
    }
  }
  run.elapsed_sec = offset + elapsed();
}

Chain run_chain(const TargetModel& model, const SamplerConfig& config, const MapResult* map,
                const Vector& init, const Budget& budget, std::size_t record_every) {
  ChainRun run = start_chain(model, config, init);
  advance_chain(model, config, map, run, budget, record_every);
  return std::move(run.chain);
}

Chain thin_chain(const Chain& chain, std::size_t thin, double burn_in_fraction) {
  if (chain.empty()) throw InvalidArgument("thin_chain: chain is empty");
  if (thin < 1) throw InvalidArgument("thin_chain: thin must be >= 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw InvalidArgument("thin_chain: burn-in fraction must lie in [0, 1)");
  }
  const std::size_t len = chain.size();
  const auto skip = static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(len)));

  Chain out;
  out.diverged = chain.diverged;
  out.total_iterations = chain.total_iterations;
  for (std::size_t i = skip; i < len; i += thin) out.samples.push_back(chain.samples[i]);
  if ((len - 1 - skip) % thin != 0) out.samples.push_back(chain.samples.back());
  return out;
}

}  // namespace mamba
