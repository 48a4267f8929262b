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

#include "mamba/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "mamba/errors.hpp"

namespace mamba {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

Vector TargetModel::grad_potential_datum(const Vector& theta, std::size_t i) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
  accumulate_grad_datum(theta, i, 1.0, g);
  return g;
}

Vector TargetModel::sum_grad(const Vector& theta, std::span<const Index> indices) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
  for (Index i : indices) accumulate_grad_datum(theta, i, 1.0, g);
  return g;
}

double TargetModel::potential(const Vector& theta) const {
  double u = 0.0;
  for (std::size_t i = 0; i < num_data(); ++i) u += potential_datum(theta, i);
  return u;
}

Vector TargetModel::full_grad(const Vector& theta) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < num_data(); ++i) accumulate_grad_datum(theta, i, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------

GaussianConjugateModel::GaussianConjugateModel(RowMatrix observations, double obs_noise,
                                               double prior_var)
    : y_(std::move(observations)), obs_noise_(obs_noise), prior_var_(prior_var) {
  if (y_.rows() < 1 || y_.cols() < 1) {
    throw InvalidArgument("gaussian model: need at least one observation of dimension >= 1");
  }
  if (!(obs_noise > 0.0) || !(prior_var > 0.0)) {
    throw InvalidArgument("gaussian model: obs_noise and prior_var must be positive");
  }
  sum_y_ = y_.colwise().sum().transpose();
}

double GaussianConjugateModel::potential_datum(const Vector& theta, std::size_t i) const {
  const double n = static_cast<double>(num_data());
  const double lik = (y_.row(static_cast<Eigen::Index>(i)).transpose() - theta).squaredNorm() /
                     (2.0 * obs_noise_ * obs_noise_);
  return lik + theta.squaredNorm() / (2.0 * prior_var_ * n);
}

void GaussianConjugateModel::accumulate_grad_datum(const Vector& theta, std::size_t i,
                                                   double scale, Vector& acc) const {
  const double inv_noise = 1.0 / (obs_noise_ * obs_noise_);
  const double prior_w = 1.0 / (prior_var_ * static_cast<double>(num_data()));
  const auto row = y_.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    acc[k] += scale * ((theta[k] - row[k]) * inv_noise + theta[k] * prior_w);
  }
}

Vector GaussianConjugateModel::full_grad(const Vector& theta) const {
  const double n = static_cast<double>(num_data());
  const double inv_noise = 1.0 / (obs_noise_ * obs_noise_);
  return (n * theta - sum_y_) * inv_noise + theta / prior_var_;
}

std::optional<PosteriorMoments> GaussianConjugateModel::exact_posterior_moments() const {
  const double n = static_cast<double>(num_data());
  const double inv_noise = 1.0 / (obs_noise_ * obs_noise_);
  const double var = 1.0 / (n * inv_noise + 1.0 / prior_var_);
  PosteriorMoments m;
  m.mean = sum_y_ * inv_noise * var;
  m.std = Vector::Constant(sum_y_.size(), std::sqrt(var));
  return m;
}

RowMatrix GaussianConjugateModel::sample_posterior(std::size_t count, RandomStream& rng) const {
  const auto moments = *exact_posterior_moments();
  RowMatrix out(static_cast<Eigen::Index>(count), sum_y_.size());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(r, c) = moments.mean[c] + moments.std[c] * rng.normal();
    }
  }
  return out;
}

std::shared_ptr<const GaussianConjugateModel> build_gaussian_conjugate_model(
    std::size_t num_data, std::size_t dim, double obs_noise, double prior_var,
    std::uint64_t data_seed) {
  if (num_data < 1 || dim < 1) {
    throw InvalidArgument("build_gaussian_conjugate_model: N and d must be positive");
  }
  if (!(obs_noise > 0.0) || !(prior_var > 0.0)) {
    throw InvalidArgument("build_gaussian_conjugate_model: obs_noise and prior_var must be positive");
  }
  RandomStream rng(data_seed);
  const auto d = static_cast<Eigen::Index>(dim);
  Vector theta_true(d);
  for (Eigen::Index k = 0; k < d; ++k) theta_true[k] = rng.normal();
  RowMatrix y(static_cast<Eigen::Index>(num_data), d);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index k = 0; k < d; ++k) y(r, k) = theta_true[k] + obs_noise * rng.normal();
  }
  return std::make_shared<GaussianConjugateModel>(std::move(y), obs_noise, prior_var);
}

// ---------------------------------------------------------------------------

LogisticModel::LogisticModel(RowMatrix covariates, Vector labels, double prior_var)
    : x_(std::move(covariates)), y_(std::move(labels)), prior_var_(prior_var) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw InvalidArgument("logistic model: need at least one row and one covariate");
  }
  if (x_.rows() != y_.size()) {
    throw InvalidArgument("logistic model: covariate rows and label count differ");
  }
  if (!(prior_var > 0.0)) throw InvalidArgument("logistic model: prior_var must be positive");
  if (!x_.allFinite()) throw InvalidArgument("logistic model: covariates must be finite");
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    if (y_[i] != 0.0 && y_[i] != 1.0) {
      std::ostringstream msg;
      msg << "logistic model: label " << y_[i] << " at row " << i << " is not in {0,1}";
      throw InvalidArgument(msg.str());
    }
  }
}

double LogisticModel::potential_datum(const Vector& theta, std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  const double z = x_.row(r).dot(theta);
  return softplus(z) - y_[r] * z +
         theta.squaredNorm() / (2.0 * prior_var_ * static_cast<double>(num_data()));
}

void LogisticModel::accumulate_grad_datum(const Vector& theta, std::size_t i, double scale,
                                          Vector& acc) const {
  const auto r = static_cast<Eigen::Index>(i);
  const auto row = x_.row(r);
  const double resid = sigmoid(row.dot(theta)) - y_[r];
  const double prior_w = 1.0 / (prior_var_ * static_cast<double>(num_data()));
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    acc[k] += scale * (resid * row[k] + theta[k] * prior_w);
  }
}

double LogisticModel::potential(const Vector& theta) const {
  const Vector z = x_ * theta;
  double u = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) u += softplus(z[i]) - y_[i] * z[i];
  return u + theta.squaredNorm() / (2.0 * prior_var_);
}

Vector LogisticModel::full_grad(const Vector& theta) const {
  Vector resid = x_ * theta;
  for (Eigen::Index i = 0; i < resid.size(); ++i) resid[i] = sigmoid(resid[i]) - y_[i];
  return x_.transpose() * resid + theta / prior_var_;
}

double LogisticModel::log_loss(const RowMatrix& thetas, const RowMatrix& x,
                               const Vector& y) const {
  if (thetas.rows() < 1) throw InvalidArgument("log_loss: no posterior draws");
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double p = 0.0;
    for (Eigen::Index s = 0; s < thetas.rows(); ++s) {
      p += sigmoid(x.row(i).dot(thetas.row(s)));
    }
    p /= static_cast<double>(thetas.rows());
    p = std::clamp(p, 1e-15, 1.0 - 1e-15);
    total -= y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p);
  }
  return total / static_cast<double>(x.rows());
}

std::shared_ptr<const LogisticModel> build_logistic_model(RowMatrix covariates, Vector labels,
                                                          double prior_var) {
  return std::make_shared<LogisticModel>(std::move(covariates), std::move(labels), prior_var);
}

std::shared_ptr<const LogisticModel> build_synthetic_logistic_model(std::size_t num_data,
                                                                    std::size_t dim,
                                                                    double prior_var,
                                                                    std::uint64_t data_seed) {
  if (num_data < 1 || dim < 1) {
    throw InvalidArgument("build_synthetic_logistic_model: N and d must be positive");
  }
  RandomStream rng(data_seed);
  const auto d = static_cast<Eigen::Index>(dim);
  Vector theta_true(d);
  for (Eigen::Index k = 0; k < d; ++k) theta_true[k] = rng.normal();
  RowMatrix x(static_cast<Eigen::Index>(num_data), d);
  Vector y(static_cast<Eigen::Index>(num_data));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index k = 0; k < d; ++k) x(r, k) = rng.normal();
    y[r] = rng.uniform() < sigmoid(x.row(r).dot(theta_true)) ? 1.0 : 0.0;
  }
  return build_logistic_model(std::move(x), std::move(y), prior_var);
}

std::shared_ptr<const LogisticModel> load_logistic_csv(const std::filesystem::path& path,
                                                       double prior_var) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open data file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": missing header line");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 2) throw InvalidArgument(path.string() + ": need columns y,x_0,...");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    std::string cell;
    long count = 0;
    while (std::getline(fields, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                              ": not a number: '" + cell + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != columns) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns, found " +
                            std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw InvalidArgument(path.string() + ": no data rows");

  const auto d = static_cast<Eigen::Index>(columns - 1);
  RowMatrix x(static_cast<Eigen::Index>(rows), d);
  Vector y(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = values.data() + r * static_cast<std::size_t>(columns);
    y[static_cast<Eigen::Index>(r)] = row[0];
    for (Eigen::Index k = 0; k < d; ++k) x(static_cast<Eigen::Index>(r), k) = row[k + 1];
  }
  return build_logistic_model(std::move(x), std::move(y), prior_var);
}

// ---------------------------------------------------------------------------

IndexSampler::IndexSampler(std::size_t num_data) : perm_(num_data) {
  for (std::size_t i = 0; i < num_data; ++i) perm_[i] = static_cast<Index>(i);
}

std::span<const Index> IndexSampler::draw(std::size_t n, RandomStream& rng) {
  if (n < 1 || n > perm_.size()) {
    throw InvalidArgument("batch size must lie in [1, N]");
  }
  const std::size_t last = perm_.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(k, last));
    std::swap(perm_[k], perm_[j]);
  }
  return {perm_.data(), n};
}

std::size_t batch_size_for(double batch_fraction, std::size_t num_data) {
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw InvalidArgument("batch fraction must lie in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(std::floor(batch_fraction * static_cast<double>(num_data)));
  return std::max<std::size_t>(1, n);
}

namespace {

void estimate_into(const TargetModel& model, const Vector& theta, std::size_t n,
                   const MapResult* map, std::span<const Index> batch, Vector& out) {
  const double scale = static_cast<double>(model.num_data()) / static_cast<double>(n);
  out.setZero(static_cast<Eigen::Index>(model.dim()));
  if (map == nullptr) {
    for (Index i : batch) model.accumulate_grad_datum(theta, i, 1.0, out);
    out *= scale;
    return;
  }
  Vector correction = Vector::Zero(out.size());
  for (Index i : batch) {
    model.accumulate_grad_datum(theta, i, 1.0, correction);
    model.accumulate_grad_datum(map->theta_map, i, -1.0, correction);
  }
  out = map->full_grad_at_map + scale * correction;
}

}  // namespace

void estimate_gradient(const TargetModel& model, const Vector& theta, std::size_t n,
                       const MapResult* map, IndexSampler& sampler, RandomStream& rng,
                       Vector& out) {
  if (n < 1 || n > model.num_data()) throw InvalidArgument("batch size must lie in [1, N]");
  if (n == model.num_data()) {
    out = model.full_grad(theta);
    return;
  }
  estimate_into(model, theta, n, map, sampler.draw(n, rng), out);
}

namespace {

GradientEstimate estimate_with_indices(const TargetModel& model, const Vector& theta,
                                       std::size_t n, const MapResult* map, RandomStream& rng) {
  const std::size_t big_n = model.num_data();
  if (n < 1 || n > big_n) throw InvalidArgument("batch size must lie in [1, N]");
  GradientEstimate est;
  if (n == big_n) {
    est.value = model.full_grad(theta);
    est.indices.resize(big_n);
    for (std::size_t i = 0; i < big_n; ++i) est.indices[i] = static_cast<Index>(i);
    est.is_full = true;
    return est;
  }
  IndexSampler sampler(big_n);
  const auto batch = sampler.draw(n, rng);
  est.indices.assign(batch.begin(), batch.end());
  estimate_into(model, theta, n, map, batch, est.value);
  return est;
}

}  // namespace

GradientEstimate grad_minibatch(const TargetModel& model, const Vector& theta, std::size_t n,
                                RandomStream& rng) {
  return estimate_with_indices(model, theta, n, nullptr, rng);
}

GradientEstimate grad_cv(const TargetModel& model, const Vector& theta, const MapResult& map,
                         std::size_t n, RandomStream& rng) {
  if (map.theta_map.size() != static_cast<Eigen::Index>(model.dim()) ||
      map.full_grad_at_map.size() != static_cast<Eigen::Index>(model.dim())) {
    throw InvalidArgument("grad_cv: MAP result dimension does not match the model");
  }
  return estimate_with_indices(model, theta, n, &map, rng);
}

MapResult find_map(const TargetModel& model, const Vector& init, const AdamConfig& adam,
                   std::size_t max_iters, double tol) {
  if (max_iters < 1) throw InvalidArgument("find_map: max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("find_map: tol must be positive");
  if (init.size() != static_cast<Eigen::Index>(model.dim())) {
    throw InvalidArgument("find_map: init dimension does not match the model");
  }

  Vector theta = init;
  AdamState state = AdamState::zeros(model.dim(), adam);
  MapResult best;
  best.grad_norm = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it <= max_iters; ++it) {
    Vector grad = model.full_grad(theta);
    if (!grad.allFinite()) {
      throw NumericalFailure("find_map: non-finite gradient", static_cast<std::int64_t>(it));
    }
    const double norm = grad.norm();
    if (norm < best.grad_norm) {
      best.theta_map = theta;
      best.full_grad_at_map = grad;
      best.grad_norm = norm;
      best.iterations = it;
    }
    if (norm <= tol || it == max_iters) break;
    auto upd = adam_update(state, grad);
    state = std::move(upd.state);
    theta += upd.step;
  }
  best.converged = best.grad_norm <= tol;
  return best;
}

}  // namespace mamba
