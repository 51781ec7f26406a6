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

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqmdl {

/// Error raised for contract violations and malformed data.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(values))) with max subtraction. All -inf gives -inf.
/// Throws Error("empty vector") on empty input.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)), -inf aware.
double log_add_exp(double a, double b);

/// Uniform log prior log(1/K) of length K.
std::vector<double> uniform_log_prior(std::size_t k);

/// True when |log_sum_exp(values)| <= tol.
bool is_log_normalized(std::span<const double> values, double tol = 1e-9);

/// A labelled sequence of fixed feature vectors.
///
/// Features are stored row-major as 32-bit floats (the on-disk precision);
/// all model arithmetic widens to double.
struct FeatureSequence {
  std::vector<float> features;     // n_examples x dim, row-major
  std::vector<std::uint32_t> labels;
  std::size_t dim = 0;
  std::uint32_t n_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::span<const float> feature(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

/// Returns every invariant violation found in `seq`; empty when valid.
std::vector<std::string> validate_feature_sequence(const FeatureSequence& seq);

/// Read-only view of an N x K row-major loss table. Entries must be finite
/// but may be negative (density-valued losses from continuous experts).
struct LossView {
  std::span<const double> data;
  std::size_t n_steps = 0;
  std::size_t n_experts = 0;

  std::span<const double> row(std::size_t t) const {
    return data.subspan(t * n_experts, n_experts);
  }
  double at(std::size_t t, std::size_t k) const { return data[t * n_experts + k]; }
};

/// N x K next-step log-losses in nats (step-major). Every entry is finite
/// and non-negative; construction enforces this.
class LossMatrix {
 public:
  LossMatrix() = default;
  LossMatrix(std::size_t n_steps, std::vector<std::string> expert_names,
             std::vector<double> losses);

  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_experts() const { return names_.size(); }
  const std::vector<std::string>& expert_names() const { return names_; }
  const std::vector<double>& values() const { return losses_; }

  std::span<const double> row(std::size_t t) const {
    return {losses_.data() + t * n_experts(), n_experts()};
  }
  double at(std::size_t t, std::size_t k) const { return losses_[t * n_experts() + k]; }

  /// Per-step losses of a single expert.
  std::vector<double> column(std::size_t k) const;

  LossView view() const { return {losses_, n_steps_, n_experts()}; }
  operator LossView() const { return view(); }  // NOLINT(google-explicit-constructor)

 private:
  std::size_t n_steps_ = 0;
  std::vector<std::string> names_;
  std::vector<double> losses_;
};

}  // namespace pqmdl
