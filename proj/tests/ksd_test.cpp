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

#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>
#include <omp.h>

#include "mamba/errors.hpp"
#include "mamba/stein.hpp"
#include "support.hpp"

namespace mamba {
namespace {

using testing::median;
using testing::normal_sample_set;
using testing::relative_error;

SteinSampleSet from_rows(const RowMatrix& points, const RowMatrix& grads) {
  return SteinSampleSet{points, grads, GradMode::kFullbatch};
}

TEST(Ksd, SinglePointClosedForm) {
  const RowMatrix zero = RowMatrix::Zero(1, 1);
  EXPECT_NEAR(ksd(from_rows(zero, zero), KernelSpec::imq()), 1.0, 1e-12);
  EXPECT_NEAR(ksd_reference(from_rows(zero, zero), KernelSpec::imq()), 1.0, 1e-12);
}

TEST(Ksd, MatchesSerialReference) {
  RandomStream rng(4);
  for (const auto& spec : {KernelSpec::imq(), KernelSpec::imq(0.5, -0.7), KernelSpec::gaussian(0.8)}) {
    for (std::size_t d : {1u, 3u}) {
      const auto set = normal_sample_set(157, d, rng, 0.3, 1.2);
      EXPECT_LT(relative_error(ksd(set, spec), ksd_reference(set, spec)), 1e-12);
    }
  }
}

TEST(Ksd, ParallelResultIndependentOfThreadCount) {
  RandomStream rng(5);
  const auto set = normal_sample_set(400, 3, rng, 0.5);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = ksd(set, KernelSpec::imq());
  omp_set_num_threads(4);
  const double four = ksd(set, KernelSpec::imq());
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(Ksd, DuplicationInvariance) {
  RandomStream rng(6);
  const auto set = normal_sample_set(50, 2, rng, 0.4);
  RowMatrix pts(100, 2), grads(100, 2);
  pts << set.points, set.points;
  grads << set.grads, set.grads;
  EXPECT_LT(relative_error(ksd(set, KernelSpec::imq()), ksd(from_rows(pts, grads), KernelSpec::imq())),
            1e-12);
}

TEST(Ksd, PermutationInvariance) {
  RandomStream rng(7);
  const auto set = normal_sample_set(80, 2, rng, -0.2);
  std::vector<Eigen::Index> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  RowMatrix pts(80, 2), grads(80, 2);
  for (Eigen::Index i = 0; i < 80; ++i) {
    pts.row(i) = set.points.row(perm[static_cast<std::size_t>(i)]);
    grads.row(i) = set.grads.row(perm[static_cast<std::size_t>(i)]);
  }
  EXPECT_LT(relative_error(ksd(set, KernelSpec::imq()), ksd(from_rows(pts, grads), KernelSpec::imq())),
            1e-12);
}

TEST(Ksd, NonnegativeAcrossSampleSets) {
  RandomStream rng(8);
  for (int k = 0; k < 30; ++k) {
    const auto set = normal_sample_set(20, 2, rng, 0.1 * k);
    EXPECT_GE(ksd(set, KernelSpec::imq()), 0.0);
    EXPECT_GE(ksd(set, KernelSpec::gaussian(1.0)), 0.0);
  }
}

TEST(Ksd, UStatisticMatchesOffDiagonalMean) {
  RandomStream rng(9);
  const auto set = normal_sample_set(30, 2, rng, 0.2);
  double off = 0.0;
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 30; ++j) {
      if (i == j) continue;
      off += stein_kernel(KernelSpec::imq(), set.points.row(i).transpose(),
                          set.points.row(j).transpose(), set.grads.row(i).transpose(),
                          set.grads.row(j).transpose());
    }
  }
  EXPECT_LT(relative_error(ksd_squared(set, KernelSpec::imq(), Statistic::kU), off / (30.0 * 29.0)),
            1e-12);
}

TEST(Ksd, RowMeansAverageToSquaredKsd) {
  RandomStream rng(10);
  const auto set = normal_sample_set(60, 2, rng, 0.7);
  const Vector rows = stein_kernel_row_means(set, KernelSpec::imq());
  EXPECT_LT(relative_error(rows.mean(), ksd_squared(set, KernelSpec::imq())), 1e-12);
}

TEST(Ksd, NonFiniteKernelNamesThePair) {
  RowMatrix pts = RowMatrix::Zero(3, 1);
  RowMatrix grads = RowMatrix::Zero(3, 1);
  grads(1, 0) = 1e200;  // finite input whose squared norm overflows
  try {
    ksd(from_rows(pts, grads), KernelSpec::imq());
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos) << e.what();
  }
}

TEST(Ksd, RejectsMismatchedRows) {
  EXPECT_THROW(ksd(from_rows(RowMatrix::Zero(3, 1), RowMatrix::Zero(2, 1)), KernelSpec::imq()),
               InvalidArgument);
}

TEST(Ksd, DiscriminatesShiftedSamples) {
  RandomStream rng(2024);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto exact = normal_sample_set(1000, 2, rng);
    const auto shifted = normal_sample_set(1000, 2, rng, 1.0);
    if (ksd(shifted, KernelSpec::imq()) > ksd(exact, KernelSpec::imq())) ++wins;
  }
  EXPECT_GE(wins, 95);
}

TEST(Ksd, DetectsWrongScale) {
  RandomStream rng(2025);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto exact = normal_sample_set(300, 2, rng);
    const auto wide = normal_sample_set(300, 2, rng, 0.0, 2.0);
    if (ksd(wide, KernelSpec::imq()) > ksd(exact, KernelSpec::imq())) ++wins;
  }
  EXPECT_GE(wins, 95);
}

TEST(Ksd, ConsistentForExactSamples) {
  const auto model = build_gaussian_conjugate_model(100, 2, 1.0, 1.0, 3);
  std::vector<double> medians;
  for (std::size_t p : {10u, 100u, 1000u}) {
    std::vector<double> values;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RandomStream rng(derive_seed(seed, p));
      const RowMatrix pts = model->sample_posterior(p, rng);
      RowMatrix grads(pts.rows(), pts.cols());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        grads.row(i) = model->full_grad(pts.row(i).transpose()).transpose();
      }
      values.push_back(ksd(from_rows(pts, grads), KernelSpec::imq()));
    }
    medians.push_back(median(values));
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

// --------------------------------------------------------------------------
// Rewards from chains

TEST(KsdReward, StochasticEqualsFullbatchAtFullBatch) {
  const auto model = build_gaussian_conjugate_model(100, 2, 1.0, 1.0, 1);
  SamplerConfig cfg;
  cfg.step_size = 1e-3;
  cfg.batch_fraction = 1.0;
  const auto chain = run_chain(*model, cfg, nullptr, Vector::Zero(2), Budget::iterations(500));
  const auto spec = KernelSpec::imq();
  EXPECT_EQ(ksd_reward(chain, *model, 5, 0.1, GradMode::kStochastic, spec),
            ksd_reward(chain, *model, 5, 0.1, GradMode::kFullbatch, spec));
}

TEST(KsdReward, ThinningControlsSampleCount) {
  const auto model = build_gaussian_conjugate_model(100, 2, 1.0, 1.0, 1);
  SamplerConfig cfg;
  cfg.step_size = 1e-3;
  const auto chain = run_chain(*model, cfg, nullptr, Vector::Zero(2), Budget::iterations(200));
  // every second sample (100) plus the retained final sample
  EXPECT_EQ(thin_chain(chain, 2, 0.0).size(), 101u);
  EXPECT_TRUE(std::isfinite(ksd_reward(chain, *model, 1, 0.0, GradMode::kFullbatch, KernelSpec::imq())));
  EXPECT_TRUE(std::isfinite(ksd_reward(chain, *model, 2, 0.0, GradMode::kFullbatch, KernelSpec::imq())));
}

TEST(KsdReward, DivergedChainIsInfinite) {
  const auto model = build_gaussian_conjugate_model(10, 1, 1.0, 1.0, 1);
  Chain chain;
  chain.samples.push_back(Sample{1, 0.0, Vector::Zero(1), Vector::Zero(1)});
  chain.diverged = true;
  EXPECT_EQ(ksd_reward(chain, *model, 1, 0.0, GradMode::kFullbatch, KernelSpec::imq()),
            std::numeric_limits<double>::infinity());
}

TEST(KsdReward, LongerChainsScoreLower) {
  const auto model = build_gaussian_conjugate_model(1000, 2, 1.0, 1.0, 2);
  const auto map = find_map(*model, Vector::Zero(2));
  std::vector<double> short_runs, long_runs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SamplerConfig cfg;
    cfg.step_size = 1e-4;
    cfg.batch_fraction = 0.1;
    cfg.seed = seed;
    ChainRun run = start_chain(*model, cfg, map.theta_map);
    advance_chain(*model, cfg, nullptr, run, Budget::iterations(2000));
    short_runs.push_back(ksd_reward(run.chain, *model, 10, 0.1, GradMode::kFullbatch, KernelSpec::imq()));
    advance_chain(*model, cfg, nullptr, run, Budget::iterations(18000));
    long_runs.push_back(ksd_reward(run.chain, *model, 10, 0.1, GradMode::kFullbatch, KernelSpec::imq()));
  }
  EXPECT_LT(median(long_runs), median(short_runs));
}

TEST(KsdReward, StochasticTracksFullbatch) {
  const auto model = build_gaussian_conjugate_model(1000, 2, 1.0, 1.0, 2);
  const auto map = find_map(*model, Vector::Zero(2));
  SamplerConfig cfg;
  cfg.step_size = 1e-4;
  cfg.batch_fraction = 0.1;
  cfg.seed = 3;
  const auto chain = run_chain(*model, cfg, nullptr, map.theta_map, Budget::iterations(20000));
  const auto spec = KernelSpec::imq();
  const double full = ksd_reward(chain, *model, 10, 0.1, GradMode::kFullbatch, spec);
  const double stoch = ksd_reward(chain, *model, 10, 0.1, GradMode::kStochastic, spec);
  EXPECT_LT(std::abs(stoch - full) / full, 0.5) << "fullbatch " << full << " stochastic " << stoch;
}

TEST(SampleSet, DimensionMismatchNamesBothDims) {
  const auto model = build_gaussian_conjugate_model(10, 3, 1.0, 1.0, 1);
  Chain chain;
  chain.samples.push_back(Sample{1, 0.0, Vector::Zero(2), Vector::Zero(2)});
  try {
    make_sample_set(chain, *model, GradMode::kFullbatch);
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('2'), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
}

}  // namespace
}  // namespace mamba
