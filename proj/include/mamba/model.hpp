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
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mamba/adam.hpp"
#include "mamba/random.hpp"

namespace mamba {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::uint32_t;

struct PosteriorMoments {
  Vector mean;
  Vector std;
};

/// Differentiable potential U(theta) = sum_i U_i(theta), the negative
/// unnormalised log-posterior. Each U_i carries 1/N of the prior so that
/// full-batch and minibatch gradients share one code path.
///
/// Implementations are immutable after construction and may be shared by
/// concurrently running chains.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_data() const = 0;

  virtual double potential_datum(const Vector& theta, std::size_t i) const = 0;

  /// acc += scale * grad U_i(theta)
  virtual void accumulate_grad_datum(const Vector& theta, std::size_t i, double scale,
                                     Vector& acc) const = 0;

  Vector grad_potential_datum(const Vector& theta, std::size_t i) const;

  /// sum_{i in indices} grad U_i(theta)
  virtual Vector sum_grad(const Vector& theta, std::span<const Index> indices) const;

  virtual double potential(const Vector& theta) const;
  virtual Vector full_grad(const Vector& theta) const;

  virtual std::optional<PosteriorMoments> exact_posterior_moments() const {
    return std::nullopt;
  }
};

using ModelPtr = std::shared_ptr<const TargetModel>;

/// y_i ~ Normal(theta, obs_noise^2 I), prior Normal(0, prior_var I).
class GaussianConjugateModel final : public TargetModel {
 public:
  GaussianConjugateModel(RowMatrix observations, double obs_noise, double prior_var);

  std::string kind() const override { return "gaussian"; }
  std::size_t dim() const override { return static_cast<std::size_t>(y_.cols()); }
  std::size_t num_data() const override { return static_cast<std::size_t>(y_.rows()); }

  double potential_datum(const Vector& theta, std::size_t i) const override;
  void accumulate_grad_datum(const Vector& theta, std::size_t i, double scale,
                             Vector& acc) const override;
  Vector full_grad(const Vector& theta) const override;
  std::optional<PosteriorMoments> exact_posterior_moments() const override;

  const RowMatrix& observations() const { return y_; }
  double obs_noise() const { return obs_noise_; }
  double prior_var() const { return prior_var_; }

  /// Exact i.i.d. draws from the conjugate posterior, one per row.
  RowMatrix sample_posterior(std::size_t count, RandomStream& rng) const;

 private:
  RowMatrix y_;
  Vector sum_y_;
  double obs_noise_;
  double prior_var_;
};

/// Bayesian logistic regression with a Normal(0, prior_var I) prior.
class LogisticModel final : public TargetModel {
 public:
  LogisticModel(RowMatrix covariates, Vector labels, double prior_var = 10.0);

  std::string kind() const override { return "logistic"; }
  std::size_t dim() const override { return static_cast<std::size_t>(x_.cols()); }
  std::size_t num_data() const override { return static_cast<std::size_t>(x_.rows()); }

  double potential_datum(const Vector& theta, std::size_t i) const override;
  void accumulate_grad_datum(const Vector& theta, std::size_t i, double scale,
                             Vector& acc) const override;
  double potential(const Vector& theta) const override;
  Vector full_grad(const Vector& theta) const override;

  const RowMatrix& covariates() const { return x_; }
  const Vector& labels() const { return y_; }
  double prior_var() const { return prior_var_; }

  /// Mean negative log predictive probability of (x, y) averaged over the
  /// posterior draws in `thetas` (one per row).
  double log_loss(const RowMatrix& thetas, const RowMatrix& x, const Vector& y) const;

 private:
  RowMatrix x_;
  Vector y_;
  double prior_var_;
};

std::shared_ptr<const GaussianConjugateModel> build_gaussian_conjugate_model(
    std::size_t num_data, std::size_t dim, double obs_noise, double prior_var,
    std::uint64_t data_seed);

std::shared_ptr<const LogisticModel> build_logistic_model(RowMatrix covariates, Vector labels,
                                                          double prior_var = 10.0);

/// Simulated logistic-regression data: standard-normal covariates, a
/// standard-normal true coefficient vector and Bernoulli labels.
std::shared_ptr<const LogisticModel> build_synthetic_logistic_model(std::size_t num_data,
                                                                    std::size_t dim,
                                                                    double prior_var,
                                                                    std::uint64_t data_seed);

/// Reads `y,x_0,...,x_{d-1}` rows after a one-line header.
std::shared_ptr<const LogisticModel> load_logistic_csv(const std::filesystem::path& path,
                                                       double prior_var = 10.0);

// ---------------------------------------------------------------------------
// Gradient estimators

struct GradientEstimate {
  Vector value;
  std::vector<Index> indices;
  bool is_full = false;
};

struct MapResult {
  Vector theta_map;
  Vector full_grad_at_map;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Uniform subsets without replacement by a partial Fisher-Yates shuffle
/// over a persistent permutation buffer. Any permutation is a valid
/// starting state, so the buffer is never reset between draws.
class IndexSampler {
 public:
  explicit IndexSampler(std::size_t num_data);

  std::span<const Index> draw(std::size_t n, RandomStream& rng);
  std::size_t size() const { return perm_.size(); }
  const std::vector<Index>& permutation() const { return perm_; }

  bool operator==(const IndexSampler&) const = default;

 private:
  std::vector<Index> perm_;
};

/// Batch size n = max(1, floor(tau * N)).
std::size_t batch_size_for(double batch_fraction, std::size_t num_data);

/// Writes the plain (map == nullptr) or control-variate estimate into `out`
/// without retaining the index set. n == N always returns the full gradient.
void estimate_gradient(const TargetModel& model, const Vector& theta, std::size_t n,
                       const MapResult* map, IndexSampler& sampler, RandomStream& rng,
                       Vector& out);

GradientEstimate grad_minibatch(const TargetModel& model, const Vector& theta, std::size_t n,
                                RandomStream& rng);

GradientEstimate grad_cv(const TargetModel& model, const Vector& theta, const MapResult& map,
                         std::size_t n, RandomStream& rng);

MapResult find_map(const TargetModel& model, const Vector& init,
                   const AdamConfig& adam = AdamConfig{}, std::size_t max_iters = 10000,
                   double tol = 1e-6);

}  // namespace mamba
