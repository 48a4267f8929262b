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
#include <optional>
#include <string>
#include <vector>

#include "mamba/bandit.hpp"
#include "mamba/model.hpp"
#include "mamba/samplers.hpp"

namespace mamba {

struct ReferenceMoments {
  enum class Source { kAnalytic, kFile };
  Vector mean;
  Vector std;
  Source source = Source::kAnalytic;

  void validate() const;
};

std::optional<ReferenceMoments> reference_from_model(const TargetModel& model);

/// Elementwise sample standard deviation (denominator P - 1).
Vector sample_std(const RowMatrix& samples);

/// ||sigma_hat - sigma_ref|| / ||sigma_ref||.
double relative_std_error(const RowMatrix& samples, const ReferenceMoments& ref);
double relative_std_error(const Chain& chain, const ReferenceMoments& ref,
                          double burn_in_fraction);

struct CurvePoint {
  double checkpoint = 0.0;
  double mean = 0.0;
  double lower = 0.0;  // mean - 2 std across repeats
  double upper = 0.0;
  std::size_t available = 0;  // repeats that had not diverged
  bool missing() const { return available == 0; }
};

struct RewardCurve {
  Metric metric = Metric::kKsd;
  std::vector<CurvePoint> points;
};

/// For each repeat (seed derived from config.seed), grows one chain through
/// the increasing checkpoints and scores its cumulative chain at each.
RewardCurve reward_curve(const TargetModel& model, const SamplerConfig& config,
                         const MapResult* map, const Vector& init, BudgetMode mode,
                         const std::vector<double>& checkpoints, Metric metric,
                         const SteinSettings& stein, std::size_t repeats,
                         std::size_t record_every = 1);

enum class TunerKind { kMambaKsd, kMambaFssd, kGrid, kHeuristic };

std::string to_string(TunerKind kind);
TunerKind parse_tuner_kind(const std::string& name);

struct SamplerVariant {
  SamplerKind kind = SamplerKind::kSgld;
  bool use_cv = false;
};

struct CompareOptions {
  std::vector<TunerKind> tuners;
  std::vector<SamplerVariant> samplers;
  SamplerConfig base;  // friction, thermostat ... shared by all arms
  std::vector<double> log10_steps;
  std::vector<double> batch_fractions;
  std::vector<int> leapfrogs;
  Budget mamba_budget = Budget::iterations(10000);
  std::size_t eta = 3;
  GridOptions grid;
  Budget final_budget = Budget::iterations(10000);
  SteinSettings stein;
  std::optional<ReferenceMoments> reference;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct ComparisonCell {
  std::string tuner;
  std::string sampler;
  SamplerConfig config;
  std::optional<double> ksd;
  std::optional<double> xi_std;
  std::size_t n_samples = 0;
  std::string error;  // non-empty when the tuner failed
};

/// Tunes each sampler variant with each tuner, runs the chosen configuration
/// from theta_MAP for the final budget and reports KSD and xi. A failing
/// tuner yields a cell with `error` set; the rest of the table still runs.
std::vector<ComparisonCell> compare_tuners(const TargetModel& model, const MapResult& map,
                                           const CompareOptions& options);

}  // namespace mamba
