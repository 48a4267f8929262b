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

#include "mamba/errors.hpp"
#include "mamba/stein.hpp"

namespace mamba {

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::kImq:
      if (!(c > 0.0)) throw InvalidArgument("IMQ kernel requires c > 0");
      if (!(beta > -1.0 && beta < 0.0)) {
        throw InvalidArgument("IMQ kernel requires beta in (-1, 0)");
      }
      break;
    case KernelFamily::kGaussian:
      if (!(bandwidth > 0.0)) throw InvalidArgument("Gaussian kernel requires bandwidth > 0");
      break;
  }
}

KernelEval kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw InvalidArgument("kernel_eval: dimension mismatch");
  const Vector diff = x - y;
  const double r2 = diff.squaredNorm();
  const double d = static_cast<double>(x.size());
  KernelEval out;
  if (spec.family == KernelFamily::kImq) {
    const double u = spec.c * spec.c + r2;
    const double b = spec.beta;
    out.k = std::pow(u, b);
    out.grad_x = 2.0 * b * std::pow(u, b - 1.0) * diff;
    out.grad_y = -out.grad_x;
    out.trace_grad_xy =
        -2.0 * b * d * std::pow(u, b - 1.0) - 4.0 * b * (b - 1.0) * std::pow(u, b - 2.0) * r2;
  } else {
    const double s2 = spec.bandwidth * spec.bandwidth;
    out.k = std::exp(-r2 / (2.0 * s2));
    out.grad_x = -(out.k / s2) * diff;
    out.grad_y = -out.grad_x;
    out.trace_grad_xy = out.k * (d / s2 - r2 / (s2 * s2));
  }
  return out;
}

double stein_kernel(const KernelSpec& spec, const Vector& x, const Vector& y, const Vector& gx,
                    const Vector& gy) {
  if (x.size() != y.size() || gx.size() != x.size() || gy.size() != y.size()) {
    throw InvalidArgument("stein_kernel: dimension mismatch");
  }
  const KernelEval e = kernel_eval(spec, x, y);
  return gx.dot(gy) * e.k - gx.dot(e.grad_y) - gy.dot(e.grad_x) + e.trace_grad_xy;
}

}  // namespace mamba
