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

#include <gtest/gtest.h>

#include "mamba/bandit.hpp"
#include "mamba/errors.hpp"
#include "support.hpp"

namespace mamba {
namespace {

using testing::normal_sample_set;
using testing::relative_error;

TEST(Diagnostics, GapsAndComplexity) {
  const std::vector<double> ranked{0.0, -1.0, -2.0};
  const auto d = diagnostics(ranked, 1.0, 3, 3, 0.05);
  EXPECT_EQ(d.gaps, (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_TRUE(d.h2_defined);
  EXPECT_DOUBLE_EQ(d.h2, 2.0);
}

TEST(Diagnostics, TwoArms) {
  const std::vector<double> ranked{-3.0, -4.0};
  EXPECT_DOUBLE_EQ(diagnostics(ranked, 1.0, 2, 2, 0.1).h2, 2.0);
}

TEST(Diagnostics, BudgetBoundIsLinearInVariance) {
  const std::vector<double> ranked{0.0, -0.5, -0.7, -2.0};
  const auto a = diagnostics(ranked, 0.3, 3, 9, 0.05);
  const auto b = diagnostics(ranked, 0.6, 3, 9, 0.05);
  EXPECT_EQ(b.budget_bound_T, 2.0 * a.budget_bound_T);
}

TEST(Diagnostics, BudgetBoundInvertsFailureBound) {
  const std::vector<double> ranked{1.0, 0.2, -0.1, -0.3, -1.0, -1.2, -2.0, -2.5, -3.0};
  const double sigma2 = 0.7, delta = 0.05;
  const auto d = diagnostics(ranked, sigma2, 3, 9, delta);
  // closed form with log_3 9 = 2
  const double h2 = std::max({2.0 / 0.64, 3.0 / 1.21, 4.0 / 1.69, 5.0 / 4.0, 6.0 / 4.84,
                              7.0 / 9.0, 8.0 / 12.25, 9.0 / 16.0});
  EXPECT_DOUBLE_EQ(d.h2, h2);
  const double t = 4.0 * sigma2 * h2 * 3.0 / 3.0 * std::log(5.0 * 2.0 / delta);
  EXPECT_LT(relative_error(d.budget_bound_T, t), 1e-12);
  EXPECT_LT(relative_error(best_arm_failure_bound(3, 9, d.budget_bound_T, sigma2, d.h2), delta),
            1e-12);
}

TEST(Diagnostics, FailureBoundClosedForm) {
  // (2 eta - 1) log_eta M exp(-eta T / (4 sigma^2 H2 (log_eta M + 1))) at eta = 3, M = 27
  const double expected = 5.0 * 3.0 * std::exp(-3.0 * 100.0 / (4.0 * 0.5 * 2.5 * 4.0));
  EXPECT_LT(relative_error(best_arm_failure_bound(3, 27, 100.0, 0.5, 2.5), expected), 1e-12);
}

TEST(Diagnostics, TiedLeadersLeaveComplexityUndefined) {
  const std::vector<double> ranked{-1.0, -1.0, -2.0};
  const auto d = diagnostics(ranked, 1.0, 3, 3, 0.05);
  EXPECT_FALSE(d.h2_defined);
  EXPECT_TRUE(std::isinf(d.h2));
  EXPECT_TRUE(std::isinf(d.budget_bound_T));
}

TEST(Diagnostics, DivergedArmsContributeNothing) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> ranked{0.0, -1.0, ninf};
  EXPECT_DOUBLE_EQ(diagnostics(ranked, 1.0, 3, 3, 0.05).h2, 2.0);
}

TEST(Diagnostics, RejectsUnsortedInput) {
  const std::vector<double> ranked{-2.0, -1.0};
  EXPECT_THROW(diagnostics(ranked, 1.0, 2, 2, 0.05), InvalidArgument);
}

TEST(Sigma2, MaxOverArmsOfRowMeanVariance) {
  RandomStream rng(3);
  std::vector<SteinSampleSet> sets{normal_sample_set(40, 2, rng), normal_sample_set(30, 2, rng, 1.0),
                                   normal_sample_set(50, 2, rng, 0.3)};
  const auto spec = KernelSpec::imq();
  double worst = 0.0;
  for (const auto& set : sets) {
    const auto p = static_cast<Eigen::Index>(set.size());
    std::vector<double> rows(static_cast<std::size_t>(p), 0.0);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        rows[static_cast<std::size_t>(i)] +=
            stein_kernel(spec, set.points.row(i).transpose(), set.points.row(j).transpose(),
                         set.grads.row(i).transpose(), set.grads.row(j).transpose()) /
            static_cast<double>(p);
      }
    }
    double mean = 0.0;
    for (double r : rows) mean += r / static_cast<double>(p);
    double var = 0.0;
    for (double r : rows) var += (r - mean) * (r - mean) / static_cast<double>(p);
    worst = std::max(worst, var);
  }
  EXPECT_LT(relative_error(estimate_sigma2_ksd(sets, spec), worst), 1e-10);
}

}  // namespace
}  // namespace mamba
