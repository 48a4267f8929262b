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

#include <cstdint>
#include <random>
#include <span>

namespace mamba {

/// Source of standard-normal draws for the stochastic terms of the samplers.
/// Tests substitute a scripted source to make hand-computed updates exact.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual void standard_normal(std::span<double> out) = 0;
};

/// Seeded pseudo-random stream. Copyable; a copy continues the identical
/// sequence, which is what lets chains be checkpointed and resumed.
class RandomStream final : public NoiseSource {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  void standard_normal(std::span<double> out) override {
    for (double& x : out) x = normal_(engine_);
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Uniform integer in [lo, hi].
  std::uint64_t uniform_index(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

  bool operator==(const RandomStream& other) const {
    return engine_ == other.engine_ && normal_ == other.normal_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Derives an independent seed for a sub-stream (arm, repeat, round ...)
/// from a base seed with splitmix64 mixing.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mamba
