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
#include <string>
#include <vector>

#include "mamba/model.hpp"
#include "mamba/random.hpp"
#include "mamba/samplers.hpp"

namespace mamba {

enum class KernelFamily { kImq, kGaussian };

/// Base kernel k(x, y). IMQ: (c^2 + |x-y|^2)^beta, valid for c > 0 and
/// beta in (-1, 0). Gaussian: exp(-|x-y|^2 / (2 bandwidth^2)).
struct KernelSpec {
  KernelFamily family = KernelFamily::kImq;
  double c = 1.0;
  double beta = -0.5;
  double bandwidth = 1.0;

  static KernelSpec imq(double c = 1.0, double beta = -0.5) {
    return {KernelFamily::kImq, c, beta, 1.0};
  }
  static KernelSpec gaussian(double bandwidth) {
    return {KernelFamily::kGaussian, 1.0, -0.5, bandwidth};
  }
  void validate() const;
};

struct KernelEval {
  double k = 0.0;
  Vector grad_x;  // d k / d x
  Vector grad_y;  // d k / d y
  double trace_grad_xy = 0.0;  // sum_i d^2 k / dx_i dy_i
};

KernelEval kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y);

/// Langevin Stein kernel in the potential convention (gx = grad U(x)):
///   gx.gy k - gx.grad_y k - gy.grad_x k + trace_grad_xy.
double stein_kernel(const KernelSpec& spec, const Vector& x, const Vector& y, const Vector& gx,
                    const Vector& gy);

enum class GradMode { kFullbatch, kStochastic };

std::string to_string(GradMode mode);
GradMode parse_grad_mode(const std::string& name);

/// Sample points with the gradient of U at each point, one row per sample.
struct SteinSampleSet {
  RowMatrix points;
  RowMatrix grads;
  GradMode grad_mode = GradMode::kFullbatch;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
  void validate() const;
};

/// Builds a sample set from a chain, recomputing full-batch gradients or
/// reusing the stored stochastic ones.
SteinSampleSet make_sample_set(const Chain& chain, const TargetModel& model, GradMode mode);

enum class Statistic { kV, kU };

/// Estimate of KSD^2: the V-statistic (diagonal included, always >= 0) or the
/// U-statistic (off-diagonal mean, may be negative).
///
/// Row blocks are distributed over OpenMP threads; each row's partial sum is
/// accumulated serially and the rows are reduced in index order, so the
/// result does not depend on the thread count.
double ksd_squared(const SteinSampleSet& set, const KernelSpec& spec,
                   Statistic statistic = Statistic::kV);

/// sqrt of the V-statistic, clamping round-off negatives above -1e-10 to 0.
double ksd(const SteinSampleSet& set, const KernelSpec& spec);

/// Serial reference: naive double loop over `stein_kernel`.
double ksd_reference(const SteinSampleSet& set, const KernelSpec& spec);

/// (1/P) sum_j k_pi(theta_i, theta_j) for each i.
Vector stein_kernel_row_means(const SteinSampleSet& set, const KernelSpec& spec);

/// KSD of the thinned chain. Returns +infinity for a diverged chain, which
/// the bandit turns into a reward of -infinity.
double ksd_reward(const Chain& chain, const TargetModel& model, std::size_t thin,
                  double burn_in_fraction, GradMode grad_mode, const KernelSpec& spec);

// ---------------------------------------------------------------------------
// Finite Set Stein Discrepancy

struct FssdConfig {
  std::size_t num_locations = 10;
  RowMatrix locations;  // J x d
  std::size_t opt_steps = 0;
  double opt_lr = 0.1;  // Adam rate in units of the fitted per-coordinate std

  void validate() const;
};

/// Median pairwise distance of (up to 1000 evenly spaced) points. Falls back
/// to 1 when every point coincides.
double median_bandwidth(const RowMatrix& points);

/// g(v)_i = (1/P) sum_p [ -grads(p,i) k(theta_p, v) + d k(theta_p, v)/d theta_{p,i} ].
/// Requires the Gaussian family.
Vector fssd_witness(const SteinSampleSet& set, const KernelSpec& spec, const Vector& v);

/// Witness at every row of `locations`; OpenMP over fixed sample blocks.
RowMatrix fssd_witness_matrix(const SteinSampleSet& set, const KernelSpec& spec,
                              const RowMatrix& locations);

/// Serial reference for `fssd_witness_matrix`.
RowMatrix fssd_witness_matrix_reference(const SteinSampleSet& set, const KernelSpec& spec,
                                        const RowMatrix& locations);

double fssd_squared(const SteinSampleSet& set, const KernelSpec& spec,
                    const RowMatrix& locations);
double fssd(const SteinSampleSet& set, const FssdConfig& config, const KernelSpec& spec);

/// Draws J locations from a diagonal Gaussian fit to the samples and runs
/// `opt_steps` of Adam ascent on FSSD^2 (central finite differences),
/// returning the best iterate. Coordinates with zero sample variance get a
/// 1e-3 variance and a message in `warnings`.
FssdConfig optimize_test_locations(const SteinSampleSet& set, const FssdConfig& config,
                                   const KernelSpec& spec, RandomStream& rng,
                                   std::vector<std::string>* warnings = nullptr);

/// FSSD of the thinned chain with a median-heuristic Gaussian kernel
/// (unless `bandwidth` > 0) and optimised locations. +infinity if diverged.
double fssd_reward(const Chain& chain, const TargetModel& model, std::size_t thin,
                   double burn_in_fraction, GradMode grad_mode, const FssdConfig& config,
                   double bandwidth, RandomStream& rng);

}  // namespace mamba
