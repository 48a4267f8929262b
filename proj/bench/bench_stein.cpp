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

#include <benchmark/benchmark.h>

#include "mamba/model.hpp"
#include "mamba/random.hpp"
#include "mamba/stein.hpp"

namespace {

mamba::SteinSampleSet gaussian_set(std::size_t n, std::size_t d) {
  mamba::RandomStream rng(7);
  mamba::SteinSampleSet set;
  set.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < set.points.cols(); ++j) set.points(i, j) = rng.normal();
  }
  set.grads = set.points;  // potential gradient of Normal(0, I)
  return set;
}

void BM_KsdSerial(benchmark::State& state) {
  const auto set = gaussian_set(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = mamba::KernelSpec::imq();
  for (auto _ : state) benchmark::DoNotOptimize(mamba::ksd_reference(set, spec));
  state.SetComplexityN(state.range(0));
}

void BM_KsdParallel(benchmark::State& state) {
  const auto set = gaussian_set(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = mamba::KernelSpec::imq();
  for (auto _ : state) benchmark::DoNotOptimize(mamba::ksd(set, spec));
  state.SetComplexityN(state.range(0));
}

mamba::RowMatrix locations(std::size_t j, std::size_t d) {
  mamba::RandomStream rng(11);
  mamba::RowMatrix v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = rng.normal();
  }
  return v;
}

void BM_FssdWitnessSerial(benchmark::State& state) {
  const auto set = gaussian_set(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = mamba::KernelSpec::gaussian(1.0);
  const auto v = locations(10, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mamba::fssd_witness_matrix_reference(set, spec, v));
  }
}

void BM_FssdWitnessParallel(benchmark::State& state) {
  const auto set = gaussian_set(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = mamba::KernelSpec::gaussian(1.0);
  const auto v = locations(10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mamba::fssd_witness_matrix(set, spec, v));
}

}  // namespace

BENCHMARK(BM_KsdSerial)->RangeMultiplier(4)->Range(64, 1024)->Complexity();
BENCHMARK(BM_KsdParallel)->RangeMultiplier(4)->Range(64, 1024)->Complexity();
BENCHMARK(BM_FssdWitnessSerial)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_FssdWitnessParallel)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);

BENCHMARK_MAIN();
