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

#include "pqmdl/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pqmdl {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw Error("empty vector");
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

std::vector<double> uniform_log_prior(std::size_t k) {
  if (k == 0) throw Error("uniform prior needs at least one expert");
  return std::vector<double>(k, -std::log(static_cast<double>(k)));
}

bool is_log_normalized(std::span<const double> values, double tol) {
  return !values.empty() && std::abs(log_sum_exp(values)) <= tol;
}

std::vector<std::string> validate_feature_sequence(const FeatureSequence& seq) {
  std::vector<std::string> problems;
  const std::size_t n = seq.labels.size();
  if (n == 0) problems.emplace_back("sequence is empty");
  if (seq.dim == 0) problems.emplace_back("feature dimension must be >= 1");
  if (seq.n_classes == 0) problems.emplace_back("n_classes must be >= 1");
  if (seq.dim != 0 && seq.features.size() != n * seq.dim) {
    std::ostringstream os;
    os << "dimension mismatch: " << seq.features.size() << " feature values for " << n
       << " examples of dimension " << seq.dim;
    problems.push_back(os.str());
    return problems;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.labels[i] >= seq.n_classes) {
      std::ostringstream os;
      os << "label out of range at index " << i << ": " << seq.labels[i] << " >= " << seq.n_classes;
      problems.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < n && seq.dim != 0; ++i) {
    for (std::size_t j = 0; j < seq.dim; ++j) {
      if (!std::isfinite(seq.features[i * seq.dim + j])) {
        std::ostringstream os;
        os << "non-finite feature at (" << i << ", " << j << ")";
        problems.push_back(os.str());
      }
    }
  }
  return problems;
}

LossMatrix::LossMatrix(std::size_t n_steps, std::vector<std::string> expert_names,
                       std::vector<double> losses)
    : n_steps_(n_steps), names_(std::move(expert_names)), losses_(std::move(losses)) {
  if (names_.empty()) throw Error("loss matrix needs at least one expert");
  if (n_steps_ == 0) throw Error("loss matrix needs at least one step");
  if (losses_.size() != n_steps_ * names_.size()) {
    std::ostringstream os;
    os << "loss matrix has " << losses_.size() << " values, expected " << n_steps_ << " x "
       << names_.size();
    throw Error(os.str());
  }
  for (std::size_t i = 0; i < losses_.size(); ++i) {
    const double v = losses_[i];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "invalid loss " << v << " at (t=" << i / names_.size() << ", k=" << i % names_.size()
         << ")";
      throw Error(os.str());
    }
  }
}

std::vector<double> LossMatrix::column(std::size_t k) const {
  std::vector<double> out(n_steps_);
  for (std::size_t t = 0; t < n_steps_; ++t) out[t] = at(t, k);
  return out;
}

}  // namespace pqmdl
