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

// Dense inner-loop kernels used by the readout models.
//
// Every kernel has a scalar reference implementation. SIMD variants are
// compiled into separate translation units and chosen once at startup from
// the CPU feature set (or forced via PQMDL_KERNELS=scalar|avx2, or
// select_kernels()).
//
// Elementwise kernels (axpy, adamw, ema) are bit-identical across variants.
// Reductions (dot) use a fixed lane-blocked order in the SIMD variants and
// agree with the scalar sum to rounding; a given variant is deterministic.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace pqmdl::kernels {

enum class Isa { kScalar, kAvx2 };

struct AdamWParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double bias_correction1 = 1.0;  // 1 - beta1^step
  double bias_correction2 = 1.0;  // 1 - beta2^step
};

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // In-place AdamW update of params, first and second moments.
  void (*adamw)(const AdamWParams& hp, double* params, const double* grad, double* m, double* v,
                std::size_t n);
  // ema = (1 - step) * ema + step * params
  void (*ema)(double step, const double* params, double* ema, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool isa_available(Isa isa);

/// The kernel table for `isa`; throws if the CPU lacks support.
const KernelTable& table_for(Isa isa);

/// The active table. Resolved on first use.
const KernelTable& active();

/// Force a specific variant for the rest of the process.
void select_kernels(Isa isa);

std::string_view isa_name(Isa isa);

/// Parses "scalar", "avx2" or "auto"; "auto" picks the best available.
Isa parse_isa(std::string_view name);

// Span conveniences over the active table.
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace pqmdl::kernels
