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

#include <algorithm>
#include <cmath>
#include <limits>

#include "mamba/bandit.hpp"
#include "mamba/errors.hpp"

namespace mamba {

namespace {

double log_base(double x, double base) { return std::log(x) / std::log(base); }

}  // namespace

double best_arm_failure_bound(std::size_t eta, std::size_t num_arms, double total_budget,
                              double sigma2, double h2) {
  if (eta < 2 || num_arms < 2) throw InvalidArgument("failure bound needs eta >= 2 and M >= 2");
  const double e = static_cast<double>(eta);
  const double lm = log_base(static_cast<double>(num_arms), e);
  return (2.0 * e - 1.0) * lm * std::exp(-e * total_budget / (4.0 * sigma2 * h2 * (lm + 1.0)));
}

BanditDiagnostics diagnostics(std::span<const double> ranked_rewards, double sigma2_ksd,
                              std::size_t eta, std::size_t num_arms, double delta) {
  if (ranked_rewards.size() < 2) throw InvalidArgument("diagnostics need at least two arms");
  if (!std::is_sorted(ranked_rewards.begin(), ranked_rewards.end(), std::greater<>())) {
    throw InvalidArgument("diagnostics expect rewards sorted in decreasing order");
  }
  if (eta < 2 || num_arms < 2) throw InvalidArgument("diagnostics need eta >= 2 and M >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(sigma2_ksd >= 0.0)) throw InvalidArgument("sigma2_ksd must be nonnegative");

  BanditDiagnostics out;
  out.sigma2_ksd = sigma2_ksd;
  const double best = ranked_rewards.front();
  for (double r : ranked_rewards) out.gaps.push_back(best - r);

  out.h2_defined = out.gaps[1] > 0.0;
  if (!out.h2_defined) {
    out.h2 = std::numeric_limits<double>::infinity();
    out.budget_bound_T = std::numeric_limits<double>::infinity();
    return out;
  }
  for (std::size_t s = 1; s < out.gaps.size(); ++s) {
    const double rank = static_cast<double>(s + 1);
    out.h2 = std::max(out.h2, rank / (out.gaps[s] * out.gaps[s]));
  }
  const double e = static_cast<double>(eta);
  const double lm = log_base(static_cast<double>(num_arms), e);
  out.budget_bound_T = 4.0 * sigma2_ksd * out.h2 * (lm + 1.0) / e *
                       std::log((2.0 * e - 1.0) * lm / delta);
  return out;
}

double estimate_sigma2_ksd(std::span<const SteinSampleSet> sets, const KernelSpec& spec) {
  double worst = 0.0;
  for (const auto& set : sets) {
    const Vector means = stein_kernel_row_means(set, spec);
    const double mu = means.mean();
    const double var = (means.array() - mu).square().sum() / static_cast<double>(means.size());
    worst = std::max(worst, var);
  }
  return worst;
}

}  // namespace mamba
