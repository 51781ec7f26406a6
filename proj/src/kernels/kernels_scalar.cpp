// Copyright 2026 The pqmdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "pqmdl/kernels.hpp"

namespace pqmdl::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

// Operation order here is the reference the SIMD variants reproduce.
void adamw_scalar(const AdamWParams& hp, double* p, const double* g, double* m, double* v,
                  std::size_t n) {
  const double one_minus_b1 = 1.0 - hp.beta1;
  const double one_minus_b2 = 1.0 - hp.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = hp.beta1 * m[i] + one_minus_b1 * gi;
    v[i] = hp.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const double m_hat = m[i] / hp.bias_correction1;
    const double v_hat = v[i] / hp.bias_correction2;
    const double update = m_hat / (std::sqrt(v_hat) + hp.epsilon) + hp.weight_decay * p[i];
    p[i] = p[i] - hp.learning_rate * update;
  }
}

void ema_scalar(double step, const double* p, double* e, std::size_t n) {
  const double keep = 1.0 - step;
  for (std::size_t i = 0; i < n; ++i) e[i] = keep * e[i] + step * p[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, dot_scalar, axpy_scalar, adamw_scalar, ema_scalar};
  return table;
}

}  // namespace pqmdl::kernels
