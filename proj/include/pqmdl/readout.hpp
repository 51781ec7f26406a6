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

// Linear and MLP readout heads over fixed feature vectors.
//
// Parameters live in one flat vector, layer by layer: the weight matrix
// (out x in, row-major) followed by the bias. Hidden layers use ReLU; the
// head emits C logits turned into log-probabilities with log-softmax.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pqmdl {

struct ReadoutArchitecture {
  int hidden_layers = 0;  // 0 is a linear readout
  int hidden_width = 0;
  int input_dim = 0;
  int n_classes = 0;

  static constexpr int kMaxHiddenLayers = 7;

  void validate() const;
  /// Widths from input to output, length hidden_layers + 2.
  std::vector<int> layer_widths() const;
  std::size_t parameter_count() const;
  /// "linear" or "mlp<h>".
  std::string family() const;
};

struct Hyperparameters {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double ema_step_size = 1e-2;
  double label_smoothing = 0.0;

  void validate() const;
};

struct ExpertState {
  std::vector<double> parameters;
  std::vector<double> ema_parameters;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
  Hyperparameters hyper;
};

/// Fan-in scaled uniform weights, zero biases; the output layer starts at
/// zero so the first prediction is uniform.
ExpertState init_expert(const ReadoutArchitecture& arch, const Hyperparameters& hyper,
                        std::uint64_t seed);

/// Log-softmax of the network output for raw parameters.
std::vector<double> forward_log_probs(std::span<const double> params,
                                      const ReadoutArchitecture& arch,
                                      std::span<const float> feature);

/// Log-probabilities from the state's raw or EMA parameters. Throws
/// Error("diverged expert") if the parameters or the output are not finite.
std::vector<double> predict_log_probs(const ExpertState& state, const ReadoutArchitecture& arch,
                                      std::span<const float> feature, bool use_ema);

struct LabelledExample {
  std::span<const float> feature;
  std::uint32_t label = 0;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean cross-entropy against smoothed targets (1 - eps on the label,
/// eps / (C - 1) elsewhere) and its exact gradient.
LossAndGradient loss_and_gradient(std::span<const double> params, const ReadoutArchitecture& arch,
                                  std::span<const LabelledExample> batch, double label_smoothing);

/// One AdamW step with decoupled weight decay, then the EMA update.
void sgd_step(ExpertState& state, std::span<const double> gradient);

bool all_finite(std::span<const double> values);

}  // namespace pqmdl
