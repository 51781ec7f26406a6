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

// AVX2 variants. Built with -mavx2 only (no FMA) so that elementwise kernels
// round exactly like the scalar reference.

#include <immintrin.h>

#include <cmath>

#include "pqmdl/kernels.hpp"

namespace pqmdl::kernels {
namespace {

// Two independent 4-lane accumulators, combined as (acc0 + acc1) then lanes
// 0+1+2+3 left to right, then the scalar tail.
double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void adamw_avx2(const AdamWParams& hp, double* p, const double* g, double* m, double* v,
                std::size_t n) {
  const double one_minus_b1 = 1.0 - hp.beta1;
  const double one_minus_b2 = 1.0 - hp.beta2;
  const __m256d b1 = _mm256_set1_pd(hp.beta1);
  const __m256d b2 = _mm256_set1_pd(hp.beta2);
  const __m256d c1 = _mm256_set1_pd(one_minus_b1);
  const __m256d c2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(hp.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(hp.bias_correction2);
  const __m256d eps = _mm256_set1_pd(hp.epsilon);
  const __m256d wd = _mm256_set1_pd(hp.weight_decay);
  const __m256d lr = _mm256_set1_pd(hp.learning_rate);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d pi = _mm256_loadu_pd(p + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_add_pd(_mm256_div_pd(m_hat, _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps)),
                                       _mm256_mul_pd(wd, pi));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(pi, _mm256_mul_pd(lr, step)));
  }
  for (; i < n; ++i) {
    const double gi = g[i];
    m[i] = hp.beta1 * m[i] + one_minus_b1 * gi;
    v[i] = hp.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const double m_hat = m[i] / hp.bias_correction1;
    const double v_hat = v[i] / hp.bias_correction2;
    const double update = m_hat / (std::sqrt(v_hat) + hp.epsilon) + hp.weight_decay * p[i];
    p[i] = p[i] - hp.learning_rate * update;
  }
}

void ema_avx2(double step, const double* p, double* e, std::size_t n) {
  const double keep = 1.0 - step;
  const __m256d vk = _mm256_set1_pd(keep);
  const __m256d vs = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ve = _mm256_mul_pd(vk, _mm256_loadu_pd(e + i));
    _mm256_storeu_pd(e + i, _mm256_add_pd(ve, _mm256_mul_pd(vs, _mm256_loadu_pd(p + i))));
  }
  for (; i < n; ++i) e[i] = keep * e[i] + step * p[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::kAvx2, dot_avx2, axpy_avx2, adamw_avx2, ema_avx2};
  return table;
}

}  // namespace pqmdl::kernels
