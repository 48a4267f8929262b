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
#include <sstream>
#include <vector>

#include <omp.h>

#include "mamba/errors.hpp"
#include "mamba/stein.hpp"

namespace mamba {

namespace {

// k_pi for radial kernels, using grad_x k = s * (x - y) so that the two
// cross terms collapse to s * (gx - gy).(x - y).
struct PairKernel {
  KernelFamily family;
  double c2;
  double beta;
  double inv_s2;
  int dim;

  explicit PairKernel(const KernelSpec& spec, int d)
      : family(spec.family),
        c2(spec.c * spec.c),
        beta(spec.beta),
        inv_s2(1.0 / (spec.bandwidth * spec.bandwidth)),
        dim(d) {}

  double operator()(const double* x, const double* y, const double* gx,
                    const double* gy) const {
    double r2 = 0.0, gg = 0.0, cross = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double delta = x[i] - y[i];
      r2 += delta * delta;
      gg += gx[i] * gy[i];
      cross += (gx[i] - gy[i]) * delta;
    }
    const double d = static_cast<double>(dim);
    if (family == KernelFamily::kImq) {
      const double u = c2 + r2;
      const double k = beta == -0.5 ? 1.0 / std::sqrt(u) : std::pow(u, beta);
      const double ku1 = k / u;  // u^(beta-1)
      const double s = 2.0 * beta * ku1;
      const double trace = -2.0 * beta * d * ku1 - 4.0 * beta * (beta - 1.0) * (ku1 / u) * r2;
      return gg * k + s * cross + trace;
    }
    const double k = std::exp(-0.5 * r2 * inv_s2);
    return k * (gg - inv_s2 * cross + d * inv_s2 - r2 * inv_s2 * inv_s2);
  }
};

[[noreturn]] void report_bad_pair(std::size_t i, std::size_t j) {
  std::ostringstream msg;
  msg << "non-finite Stein kernel value for sample pair (" << i << ", " << j << ")";
  throw NumericalFailure(msg.str(), static_cast<std::int64_t>(i));
}

}  // namespace

std::string to_string(GradMode mode) {
  return mode == GradMode::kFullbatch ? "fullbatch" : "stochastic";
}

GradMode parse_grad_mode(const std::string& name) {
  if (name == "fullbatch") return GradMode::kFullbatch;
  if (name == "stochastic") return GradMode::kStochastic;
  throw InvalidArgument("unknown gradient mode '" + name + "' (expected fullbatch or stochastic)");
}

void SteinSampleSet::validate() const {
  if (points.rows() != grads.rows() || points.cols() != grads.cols()) {
    throw InvalidArgument("sample set: points and gradients have different shapes");
  }
  if (points.rows() < 1) throw InvalidArgument("sample set is empty");
  if (!points.allFinite() || !grads.allFinite()) {
    throw InvalidArgument("sample set contains non-finite entries");
  }
}

SteinSampleSet make_sample_set(const Chain& chain, const TargetModel& model, GradMode mode) {
  if (chain.empty()) throw InvalidArgument("make_sample_set: chain is empty");
  if (chain.dim() != model.dim()) {
    throw InvalidArgument("make_sample_set: chain dimension " + std::to_string(chain.dim()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  }
  SteinSampleSet set{chain.thetas(), RowMatrix(), mode};
  if (mode == GradMode::kStochastic) {
    set.grads = chain.grads();
  } else {
    set.grads.resize(set.points.rows(), set.points.cols());
    for (Eigen::Index r = 0; r < set.points.rows(); ++r) {
      set.grads.row(r) = model.full_grad(chain.samples[static_cast<std::size_t>(r)].theta).transpose();
    }
  }
  return set;
}

double ksd_squared(const SteinSampleSet& set, const KernelSpec& spec, Statistic statistic) {
  set.validate();
  spec.validate();
  const auto p = static_cast<std::ptrdiff_t>(set.size());
  if (statistic == Statistic::kU && p < 2) {
    throw InvalidArgument("U-statistic needs at least two samples");
  }
  const int d = static_cast<int>(set.dim());
  const PairKernel kp(spec, d);
  const double* pts = set.points.data();
  const double* grd = set.grads.data();

  std::vector<double> diag(static_cast<std::size_t>(p));
  std::vector<double> upper(static_cast<std::size_t>(p));
  std::vector<std::ptrdiff_t> bad(static_cast<std::size_t>(p), -1);

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < p; ++i) {
    const double* xi = pts + i * d;
    const double* gi = grd + i * d;
    const double kii = kp(xi, xi, gi, gi);
    double acc = 0.0;
    for (std::ptrdiff_t j = i + 1; j < p; ++j) {
      const double v = kp(xi, pts + j * d, gi, grd + j * d);
      if (!std::isfinite(v) && bad[static_cast<std::size_t>(i)] < 0) {
        bad[static_cast<std::size_t>(i)] = j;
      }
      acc += v;
    }
    if (!std::isfinite(kii)) bad[static_cast<std::size_t>(i)] = i;
    diag[static_cast<std::size_t>(i)] = kii;
    upper[static_cast<std::size_t>(i)] = acc;
  }

  double diag_sum = 0.0, off_sum = 0.0;
  for (std::ptrdiff_t i = 0; i < p; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (bad[ui] >= 0) report_bad_pair(ui, static_cast<std::size_t>(bad[ui]));
    diag_sum += diag[ui];
    off_sum += upper[ui];
  }
  const double pd = static_cast<double>(p);
  if (statistic == Statistic::kV) return (diag_sum + 2.0 * off_sum) / (pd * pd);
  return 2.0 * off_sum / (pd * (pd - 1.0));
}

namespace {

double root_of_v_statistic(double sq) {
  if (sq < 0.0) {
    if (sq > -1e-10) return 0.0;
    throw NumericalFailure("KSD V-statistic is negative beyond round-off", -1);
  }
  return std::sqrt(sq);
}

}  // namespace

double ksd(const SteinSampleSet& set, const KernelSpec& spec) {
  return root_of_v_statistic(ksd_squared(set, spec, Statistic::kV));
}

double ksd_reference(const SteinSampleSet& set, const KernelSpec& spec) {
  set.validate();
  spec.validate();
  const std::size_t p = set.size();
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const Vector xi = set.points.row(static_cast<Eigen::Index>(i)).transpose();
    const Vector gi = set.grads.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t j = 0; j < p; ++j) {
      const Vector xj = set.points.row(static_cast<Eigen::Index>(j)).transpose();
      const Vector gj = set.grads.row(static_cast<Eigen::Index>(j)).transpose();
      const double v = stein_kernel(spec, xi, xj, gi, gj);
      if (!std::isfinite(v)) report_bad_pair(i, j);
      total += v;
    }
  }
  const double pd = static_cast<double>(p);
  return root_of_v_statistic(total / (pd * pd));
}

Vector stein_kernel_row_means(const SteinSampleSet& set, const KernelSpec& spec) {
  set.validate();
  spec.validate();
  const auto p = static_cast<std::ptrdiff_t>(set.size());
  const int d = static_cast<int>(set.dim());
  const PairKernel kp(spec, d);
  const double* pts = set.points.data();
  const double* grd = set.grads.data();
  Vector means(p);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < p; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < p; ++j) {
      acc += kp(pts + i * d, pts + j * d, grd + i * d, grd + j * d);
    }
    means[i] = acc / static_cast<double>(p);
  }
  if (!means.allFinite()) throw NumericalFailure("non-finite Stein kernel row mean", -1);
  return means;
}

double ksd_reward(const Chain& chain, const TargetModel& model, std::size_t thin,
                  double burn_in_fraction, GradMode grad_mode, const KernelSpec& spec) {
  if (chain.diverged) return std::numeric_limits<double>::infinity();
  const Chain thinned = thin_chain(chain, thin, burn_in_fraction);
  return ksd(make_sample_set(thinned, model, grad_mode), spec);
}

}  // namespace mamba
