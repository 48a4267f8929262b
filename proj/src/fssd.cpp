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
#include <vector>

#include <omp.h>

#include "mamba/adam.hpp"
#include "mamba/errors.hpp"
#include "mamba/stein.hpp"

namespace mamba {

namespace {

constexpr std::ptrdiff_t kWitnessBlock = 256;

void require_gaussian(const KernelSpec& spec) {
  if (spec.family != KernelFamily::kGaussian) {
    throw InvalidArgument("FSSD requires a real analytic (Gaussian) kernel");
  }
  spec.validate();
}

// Adds sum_{p in [lo, hi)} of the witness summand at every location into out (J x d).
void accumulate_witness(const SteinSampleSet& set, double inv_s2, const RowMatrix& locations,
                        std::ptrdiff_t lo, std::ptrdiff_t hi, RowMatrix& out) {
  const auto d = static_cast<Eigen::Index>(set.dim());
  for (Eigen::Index j = 0; j < locations.rows(); ++j) {
    const double* v = locations.row(j).data();
    for (std::ptrdiff_t p = lo; p < hi; ++p) {
      const double* x = set.points.row(p).data();
      const double* g = set.grads.row(p).data();
      double r2 = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) r2 += (x[i] - v[i]) * (x[i] - v[i]);
      const double k = std::exp(-0.5 * r2 * inv_s2);
      for (Eigen::Index i = 0; i < d; ++i) {
        out(j, i) += -g[i] * k - (x[i] - v[i]) * inv_s2 * k;
      }
    }
  }
}

}  // namespace

void FssdConfig::validate() const {
  if (num_locations < 1) throw InvalidArgument("FSSD needs at least one test location");
  if (locations.rows() > 0 && !locations.allFinite()) {
    throw InvalidArgument("FSSD test locations must be finite");
  }
  if (!(opt_lr > 0.0)) throw InvalidArgument("FSSD opt_lr must be positive");
}

double median_bandwidth(const RowMatrix& points) {
  const Eigen::Index total = points.rows();
  if (total < 2) return 1.0;
  const Eigen::Index m = std::min<Eigen::Index>(total, 1000);
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i * total / m;

  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      dist.push_back((points.row(pick[static_cast<std::size_t>(a)]) -
                      points.row(pick[static_cast<std::size_t>(b)]))
                         .norm());
    }
  }
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  const double med = *mid;
  return med > 0.0 && std::isfinite(med) ? med : 1.0;
}

RowMatrix fssd_witness_matrix_reference(const SteinSampleSet& set, const KernelSpec& spec,
                                        const RowMatrix& locations) {
  require_gaussian(spec);
  set.validate();
  if (locations.cols() != static_cast<Eigen::Index>(set.dim())) {
    throw InvalidArgument("FSSD location dimension does not match the samples");
  }
  const double s2 = spec.bandwidth * spec.bandwidth;
  RowMatrix out = RowMatrix::Zero(locations.rows(), locations.cols());
  for (Eigen::Index j = 0; j < locations.rows(); ++j) {
    const Vector v = locations.row(j).transpose();
    for (Eigen::Index p = 0; p < set.points.rows(); ++p) {
      const Vector x = set.points.row(p).transpose();
      const Vector g = set.grads.row(p).transpose();
      const double k = std::exp(-(x - v).squaredNorm() / (2.0 * s2));
      const Vector dk_dx = -(x - v) * k / s2;
      out.row(j) += (-g * k + dk_dx).transpose();
    }
  }
  return out / static_cast<double>(set.size());
}

RowMatrix fssd_witness_matrix(const SteinSampleSet& set, const KernelSpec& spec,
                              const RowMatrix& locations) {
  require_gaussian(spec);
  set.validate();
  if (locations.cols() != static_cast<Eigen::Index>(set.dim())) {
    throw InvalidArgument("FSSD location dimension does not match the samples");
  }
  const double inv_s2 = 1.0 / (spec.bandwidth * spec.bandwidth);
  const auto p = static_cast<std::ptrdiff_t>(set.size());
  const std::ptrdiff_t blocks = (p + kWitnessBlock - 1) / kWitnessBlock;
  std::vector<RowMatrix> partial(static_cast<std::size_t>(blocks),
                                 RowMatrix::Zero(locations.rows(), locations.cols()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::ptrdiff_t lo = b * kWitnessBlock;
    accumulate_witness(set, inv_s2, locations, lo, std::min(p, lo + kWitnessBlock),
                       partial[static_cast<std::size_t>(b)]);
  }
  RowMatrix out = RowMatrix::Zero(locations.rows(), locations.cols());
  for (const auto& part : partial) out += part;
  return out / static_cast<double>(p);
}

Vector fssd_witness(const SteinSampleSet& set, const KernelSpec& spec, const Vector& v) {
  RowMatrix loc(1, v.size());
  loc.row(0) = v.transpose();
  return fssd_witness_matrix(set, spec, loc).row(0).transpose();
}

double fssd_squared(const SteinSampleSet& set, const KernelSpec& spec,
                    const RowMatrix& locations) {
  if (locations.rows() < 1) throw InvalidArgument("FSSD needs at least one test location");
  const RowMatrix g = fssd_witness_matrix(set, spec, locations);
  return g.squaredNorm() / static_cast<double>(g.rows() * g.cols());
}

double fssd(const SteinSampleSet& set, const FssdConfig& config, const KernelSpec& spec) {
  config.validate();
  return std::sqrt(fssd_squared(set, spec, config.locations));
}

FssdConfig optimize_test_locations(const SteinSampleSet& set, const FssdConfig& config,
                                   const KernelSpec& spec, RandomStream& rng,
                                   std::vector<std::string>* warnings) {
  config.validate();
  require_gaussian(spec);
  set.validate();
  if (set.size() < 2) {
    throw InvalidArgument("optimize_test_locations needs at least two samples");
  }
  const auto d = static_cast<Eigen::Index>(set.dim());
  const auto j_count = static_cast<Eigen::Index>(config.num_locations);

  const Vector mean = set.points.colwise().mean().transpose();
  Vector scale(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double var = (set.points.col(i).array() - mean[i]).square().sum() /
                 static_cast<double>(set.size() - 1);
    if (!(var > 0.0)) {
      var = 1e-3;
      if (warnings != nullptr) {
        warnings->push_back("coordinate " + std::to_string(i) +
                            " has zero sample variance; using jitter 1e-3");
      }
    }
    scale[i] = std::sqrt(var + 1e-6);
  }

  FssdConfig out = config;
  out.locations.resize(j_count, d);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) out.locations(j, i) = mean[i] + scale[i] * rng.normal();
  }
  if (config.opt_steps == 0) return out;

  // FSSD^2 = sum_j |g(v_j)|^2 / (dJ), so d/dv_j only involves g at v_j.
  const double norm = 1.0 / static_cast<double>(d * j_count);
  RowMatrix current = out.locations;
  RowMatrix best = current;
  double best_value = fssd_squared(set, spec, current);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.opt_lr;
  AdamState adam = AdamState::zeros(static_cast<std::size_t>(j_count * d), adam_cfg);

  RowMatrix probes(2 * d, d);
  for (std::size_t step = 0; step < config.opt_steps; ++step) {
    Eigen::VectorXd ascent(j_count * d);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(current(j, i)));
        probes.row(2 * i) = current.row(j);
        probes.row(2 * i + 1) = current.row(j);
        probes(2 * i, i) += h;
        probes(2 * i + 1, i) -= h;
      }
      const RowMatrix g = fssd_witness_matrix(set, spec, probes);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(current(j, i)));
        const double diff = g.row(2 * i).squaredNorm() - g.row(2 * i + 1).squaredNorm();
        // chain rule into standardised coordinates v = mean + scale * z
        ascent[j * d + i] = norm * diff / (2.0 * h) * scale[i];
      }
    }
    auto upd = adam_update(adam, -ascent);
    adam = std::move(upd.state);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) current(j, i) += upd.step[j * d + i] * scale[i];
    }
    const double value = fssd_squared(set, spec, current);
    if (std::isfinite(value) && value > best_value) {
      best_value = value;
      best = current;
    }
  }
  out.locations = std::move(best);
  return out;
}

double fssd_reward(const Chain& chain, const TargetModel& model, std::size_t thin,
                   double burn_in_fraction, GradMode grad_mode, const FssdConfig& config,
                   double bandwidth, RandomStream& rng) {
  if (chain.diverged) return std::numeric_limits<double>::infinity();
  const Chain thinned = thin_chain(chain, thin, burn_in_fraction);
  const SteinSampleSet set = make_sample_set(thinned, model, grad_mode);
  const KernelSpec spec =
      KernelSpec::gaussian(bandwidth > 0.0 ? bandwidth : median_bandwidth(set.points));
  if (set.size() < 2) {
    // A single point cannot be fitted; probe at the point itself.
    FssdConfig single = config;
    single.locations = set.points;
    return fssd(set, single, spec);
  }
  const FssdConfig located = optimize_test_locations(set, config, spec, rng);
  return fssd(set, located, spec);
}

}  // namespace mamba
