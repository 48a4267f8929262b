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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mamba/model.hpp"
#include "mamba/random.hpp"
#include "mamba/samplers.hpp"
#include "mamba/stein.hpp"

namespace mamba::testing {

/// Replays a fixed list of normal draws, then zeros.
class ScriptedNoise final : public NoiseSource {
 public:
  ScriptedNoise() = default;
  explicit ScriptedNoise(std::vector<double> values) : values_(values.begin(), values.end()) {}

  void standard_normal(std::span<double> out) override {
    for (double& x : out) {
      if (values_.empty()) {
        x = 0.0;
      } else {
        x = values_.front();
        values_.pop_front();
      }
      ++consumed_;
    }
  }
  std::size_t consumed() const { return consumed_; }

 private:
  std::deque<double> values_;
  std::size_t consumed_ = 0;
};

inline double central_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                 Eigen::Index i, double h = 1e-5) {
  Vector plus = x;
  Vector minus = x;
  plus[i] += h;
  minus[i] -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Vector random_vector(std::size_t d, RandomStream& rng, double scale = 1.0) {
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

/// Standard-normal sample set with shift, scale and the Normal(0, I) score.
inline SteinSampleSet normal_sample_set(std::size_t p, std::size_t d, RandomStream& rng,
                                        double shift = 0.0, double scale = 1.0) {
  SteinSampleSet set;
  set.points.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < set.points.cols(); ++j) {
      set.points(i, j) = shift + scale * rng.normal();
    }
  }
  set.grads = set.points;
  return set;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace mamba::testing
