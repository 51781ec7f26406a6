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

// Straight-line MLP forward pass and smoothed cross-entropy in 50-digit
// arithmetic. Layout per layer: W (out x in, row-major), then b.

#pragma once

#include <vector>

#include "oracles/path_enumeration.hpp"
#include "pqmdl/readout.hpp"

namespace pqmdl::oracle {

inline std::vector<Big> mlp_log_probs(const std::vector<Big>& params, const ReadoutArchitecture& arch,
                                      std::span<const float> feature) {
  std::vector<int> widths{arch.input_dim};
  for (int l = 0; l < arch.hidden_layers; ++l) widths.push_back(arch.hidden_width);
  widths.push_back(arch.n_classes);
  std::vector<Big> x(feature.begin(), feature.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    std::vector<Big> z(out);
    for (std::size_t i = 0; i < out; ++i) {
      Big acc = params[off + out * in + i];
      for (std::size_t j = 0; j < in; ++j) acc += params[off + i * in + j] * x[j];
      z[i] = acc;
    }
    off += out * (in + 1);
    if (l + 2 < widths.size()) {
      for (auto& v : z) v = v > 0 ? v : Big(0);
    }
    x = std::move(z);
  }
  Big norm = 0;
  for (const auto& v : x) norm += boost::multiprecision::exp(v);
  norm = boost::multiprecision::log(norm);
  for (auto& v : x) v -= norm;
  return x;
}

inline Big smoothed_batch_loss(const std::vector<Big>& params, const ReadoutArchitecture& arch,
                               std::span<const LabelledExample> batch, double eps) {
  const std::size_t c = arch.n_classes;
  const Big on = c > 1 ? 1 - Big(eps) : Big(1);
  const Big off = c > 1 ? Big(eps) / Big(c - 1) : Big(0);
  Big total = 0;
  for (const auto& ex : batch) {
    const auto lp = mlp_log_probs(params, arch, ex.feature);
    for (std::size_t k = 0; k < c; ++k) total -= (k == ex.label ? on : off) * lp[k];
  }
  return total / Big(batch.size());
}

}  // namespace pqmdl::oracle
