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

#include <Eigen/Core>

namespace mamba {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  static AdamState zeros(std::size_t dim, const AdamConfig& config = AdamConfig{});
};

struct AdamUpdate {
  AdamState state;
  Eigen::VectorXd step;  // descent direction, already scaled: theta += step
};

/// Bias-corrected Adam recursion for minimisation.
AdamUpdate adam_update(const AdamState& state, const Eigen::VectorXd& grad);

}  // namespace mamba
