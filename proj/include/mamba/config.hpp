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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mamba/bandit.hpp"
#include "mamba/errors.hpp"
#include "mamba/eval.hpp"
#include "mamba/samplers.hpp"

namespace mamba {

/// Bad configuration value; the message names the key, line and expected type.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct ModelSpec {
  std::string kind = "gaussian";  // gaussian | logistic
  std::size_t num_data = 1000;
  std::size_t dim = 2;
  double obs_noise = 1.0;
  std::optional<double> prior_var;  // gaussian: 1, logistic: 10
  std::optional<std::filesystem::path> data_file;
  std::uint64_t seed = 1;

  double resolved_prior_var() const { return prior_var.value_or(kind == "logistic" ? 10.0 : 1.0); }
};

struct TunerSpec {
  std::string method = "mamba";  // mamba | grid | heuristic | compare
  Metric metric = Metric::kKsd;
  std::size_t eta = 3;
  Budget budget = Budget::iterations(10000);
  std::vector<double> log10_step_sizes{-1.0, -1.5, -2.0, -2.5, -3.0, -3.5, -4.0,
                                       -4.5, -5.0, -5.5, -6.0, -6.5, -7.0, -7.5};
  std::vector<double> batch_fractions{1.0, 0.1, 0.01, 0.001};
  std::vector<int> leapfrog{5, 10};
  std::size_t record_every = 1;
  std::size_t grid_iterations = 5000;
  double grid_noise_scale = 0.2;
  GridObjective grid_objective = GridObjective::kKsd;
  std::vector<TunerKind> compare_tuners{TunerKind::kMambaKsd, TunerKind::kMambaFssd,
                                        TunerKind::kGrid, TunerKind::kHeuristic};
  std::vector<SamplerVariant> compare_samplers{{SamplerKind::kSgld, false}};
};

struct MapSpec {
  AdamConfig adam{};
  std::size_t max_iters = 10000;
  double tol = 1e-6;
};

struct CurveSpec {
  double log10_step = -4.0;
  double batch_fraction = 0.1;
  int leapfrog = 5;
  std::vector<double> checkpoints{1000, 2000, 5000, 10000};
  std::size_t repeats = 10;
};

struct RunConfig {
  ModelSpec model;
  SamplerConfig sampler;  // kind / use_cv / friction / thermostat shared by all arms
  TunerSpec tuner;
  SteinSettings stein;
  MapSpec map;
  CurveSpec curve;
  Budget final_budget = Budget::iterations(10000);
  std::optional<std::filesystem::path> reference_file;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Strict parse of a flat `key: value` YAML document. Unknown keys are
/// rejected; relative file paths resolve against `base_dir`.
RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir = ".");
RunConfig parse_config(const std::filesystem::path& path);

/// Every accepted key with its default, one per line.
std::string documented_keys();

}  // namespace mamba
