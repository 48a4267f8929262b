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

#include "mamba/adam.hpp"

#include <cmath>

#include "mamba/errors.hpp"

namespace mamba {

AdamState AdamState::zeros(std::size_t dim, const AdamConfig& config) {
  const auto n = static_cast<Eigen::Index>(dim);
  return AdamState{config, 0, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

AdamUpdate adam_update(const AdamState& state, const Eigen::VectorXd& grad) {
  const auto& cfg = state.config;
  if (grad.size() != state.first_moment.size() || grad.size() != state.second_moment.size()) {
    throw InvalidArgument("adam_update: gradient dimension does not match moment dimension");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw InvalidArgument("adam_update: beta1 and beta2 must lie in [0, 1)");
  }

  AdamUpdate out{state, Eigen::VectorXd(grad.size())};
  AdamState& s = out.state;
  s.step_count += 1;
  s.first_moment = cfg.beta1 * s.first_moment + (1.0 - cfg.beta1) * grad;
  s.second_moment = cfg.beta2 * s.second_moment + (1.0 - cfg.beta2) * grad.cwiseAbs2();

  const double t = static_cast<double>(s.step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double m_hat = s.first_moment[i] / c1;
    const double v_hat = s.second_moment[i] / c2;
    out.step[i] = -cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  return out;
}

}  // namespace mamba
