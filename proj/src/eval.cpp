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

#include "mamba/eval.hpp"

#include <cmath>
#include <limits>

#include "mamba/errors.hpp"

namespace mamba {

void ReferenceMoments::validate() const {
  if (mean.size() != std.size()) throw InvalidArgument("reference mean/std lengths differ");
  if (std.size() < 1) throw InvalidArgument("reference moments are empty");
  if (!(std.array() > 0.0).all()) {
    throw InvalidArgument("reference standard deviations must be strictly positive");
  }
}

std::optional<ReferenceMoments> reference_from_model(const TargetModel& model) {
  auto moments = model.exact_posterior_moments();
  if (!moments) return std::nullopt;
  return ReferenceMoments{moments->mean, moments->std, ReferenceMoments::Source::kAnalytic};
}

Vector sample_std(const RowMatrix& samples) {
  if (samples.rows() < 2) throw InvalidArgument("need at least two samples for a std estimate");
  const Vector mean = samples.colwise().mean().transpose();
  Vector out(samples.cols());
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    out[c] = std::sqrt((samples.col(c).array() - mean[c]).square().sum() /
                       static_cast<double>(samples.rows() - 1));
  }
  return out;
}

double relative_std_error(const RowMatrix& samples, const ReferenceMoments& ref) {
  ref.validate();
  if (samples.cols() != ref.std.size()) {
    throw InvalidArgument("sample dimension " + std::to_string(samples.cols()) +
                          " does not match reference dimension " +
                          std::to_string(ref.std.size()));
  }
  return (sample_std(samples) - ref.std).norm() / ref.std.norm();
}

double relative_std_error(const Chain& chain, const ReferenceMoments& ref,
                          double burn_in_fraction) {
  if (chain.empty()) throw InvalidArgument("relative_std_error: chain is empty");
  const Chain kept = thin_chain(chain, 1, burn_in_fraction);
  return relative_std_error(kept.thetas(), ref);
}

RewardCurve reward_curve(const TargetModel& model, const SamplerConfig& config,
                         const MapResult* map, const Vector& init, BudgetMode mode,
                         const std::vector<double>& checkpoints, Metric metric,
                         const SteinSettings& stein, std::size_t repeats,
                         std::size_t record_every) {
  if (repeats < 1) throw InvalidArgument("reward_curve: repeats must be >= 1");
  if (checkpoints.empty()) throw InvalidArgument("reward_curve: no checkpoints");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > 0.0) || (i > 0 && !(checkpoints[i] > checkpoints[i - 1]))) {
      throw InvalidArgument("reward_curve: checkpoints must be positive and strictly increasing");
    }
  }

  // values[c][r] = discrepancy at checkpoint c for repeat r (NaN when diverged)
  std::vector<std::vector<double>> values(checkpoints.size(),
                                          std::vector<double>(repeats, std::nan("")));
  for (std::size_t r = 0; r < repeats; ++r) {
    SamplerConfig cfg = config;
    cfg.seed = derive_seed(config.seed, r);
    ChainRun run = start_chain(model, cfg, init);
    double reached = 0.0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const double delta = mode == BudgetMode::kIterations
                               ? std::floor(checkpoints[c]) - std::floor(reached)
                               : checkpoints[c] - reached;
      reached = checkpoints[c];
      if (delta > 0.0) advance_chain(model, cfg, map, run, Budget{mode, delta}, record_every);
      const double reward = chain_reward(run.chain, model, metric, stein,
                                         derive_seed(cfg.seed, 1000 + c));
      if (std::isfinite(reward)) values[c][r] = -reward;
    }
  }

  RewardCurve curve;
  curve.metric = metric;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    CurvePoint point;
    point.checkpoint = checkpoints[c];
    double sum = 0.0;
    for (double v : values[c]) {
      if (!std::isnan(v)) {
        sum += v;
        ++point.available;
      }
    }
    if (point.available > 0) {
      point.mean = sum / static_cast<double>(point.available);
      double ss = 0.0;
      for (double v : values[c]) {
        if (!std::isnan(v)) ss += (v - point.mean) * (v - point.mean);
      }
      const double sd =
          point.available > 1 ? std::sqrt(ss / static_cast<double>(point.available - 1)) : 0.0;
      point.lower = point.mean - 2.0 * sd;
      point.upper = point.mean + 2.0 * sd;
    }
    curve.points.push_back(point);
  }
  return curve;
}

std::string to_string(TunerKind kind) {
  switch (kind) {
    case TunerKind::kMambaKsd:
      return "mamba-ksd";
    case TunerKind::kMambaFssd:
      return "mamba-fssd";
    case TunerKind::kGrid:
      return "grid";
    case TunerKind::kHeuristic:
      return "heuristic";
  }
  return "unknown";
}

TunerKind parse_tuner_kind(const std::string& name) {
  if (name == "mamba-ksd") return TunerKind::kMambaKsd;
  if (name == "mamba-fssd") return TunerKind::kMambaFssd;
  if (name == "grid") return TunerKind::kGrid;
  if (name == "heuristic") return TunerKind::kHeuristic;
  throw InvalidArgument("unknown tuner '" + name +
                        "' (expected mamba-ksd, mamba-fssd, grid or heuristic)");
}

namespace {

SamplerConfig tune_one(const TargetModel& model, const MapResult& map,
                       const CompareOptions& options, const SamplerConfig& base,
                       TunerKind tuner) {
  switch (tuner) {
    case TunerKind::kMambaKsd:
    case TunerKind::kMambaFssd: {
      const auto arms = enumerate_arms(base, options.log10_steps, options.batch_fractions,
                                       options.leapfrogs, options.seed);
      MambaOptions mo;
      mo.metric = tuner == TunerKind::kMambaKsd ? Metric::kKsd : Metric::kFssd;
      mo.total_budget = options.mamba_budget;
      mo.eta = options.eta;
      mo.stein = options.stein;
      mo.seed = options.seed;
      mo.workers = options.workers;
      return mamba_run(model, arms, &map, map.theta_map, mo).best_config;
    }
    case TunerKind::kGrid: {
      static constexpr double kTenPercent[] = {0.1};
      const auto arms = enumerate_arms(base, options.log10_steps, kTenPercent, options.leapfrogs,
                                       options.seed);
      GridOptions go = options.grid;
      go.stein = options.stein;
      go.seed = options.seed;
      go.workers = options.workers;
      return grid_search_tune(model, arms, map, go).best_config;
    }
    case TunerKind::kHeuristic: {
      SamplerConfig cfg = heuristic_tune(model.num_data(), base);
      if (cfg.kind == SamplerKind::kSghmc && !options.leapfrogs.empty()) {
        cfg.leapfrog = options.leapfrogs.back();
      }
      cfg.seed = derive_seed(options.seed, 0);
      return cfg;
    }
  }
  throw InvalidArgument("unknown tuner");
}

}  // namespace

std::vector<ComparisonCell> compare_tuners(const TargetModel& model, const MapResult& map,
                                           const CompareOptions& options) {
  if (options.tuners.empty() || options.samplers.empty()) {
    throw InvalidArgument("compare_tuners needs at least one tuner and one sampler");
  }
  std::vector<ComparisonCell> table;
  for (const auto& variant : options.samplers) {
    SamplerConfig base = options.base;
    base.kind = variant.kind;
    base.use_cv = variant.use_cv;
    for (TunerKind tuner : options.tuners) {
      ComparisonCell cell;
      cell.tuner = to_string(tuner);
      cell.sampler = base.label();
      try {
        cell.config = tune_one(model, map, options, base, tuner);
        const Chain chain =
            run_chain(model, cell.config, &map, map.theta_map, options.final_budget);
        cell.n_samples = chain.size();
        if (chain.diverged || chain.empty()) {
          cell.error = chain.diverged ? "final chain diverged" : "final chain is empty";
        } else {
          cell.ksd = ksd_reward(chain, model, options.stein.thin, options.stein.burn_in,
                                options.stein.grad_mode, options.stein.kernel);
          if (options.reference) {
            cell.xi_std = relative_std_error(chain, *options.reference, options.stein.burn_in);
          }
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      table.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace mamba
