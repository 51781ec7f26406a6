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

#include "pqmdl/readout.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pqmdl/core.hpp"
#include "pqmdl/kernels.hpp"

namespace pqmdl {

void ReadoutArchitecture::validate() const {
  if (hidden_layers < 0 || hidden_layers > kMaxHiddenLayers) {
    throw Error("hidden_layers must be in [0, 7]");
  }
  if (hidden_layers > 0 && hidden_width < 1) throw Error("hidden_width must be >= 1");
  if (input_dim < 1) throw Error("input_dim must be >= 1");
  if (n_classes < 1) throw Error("n_classes must be >= 1");
}

std::vector<int> ReadoutArchitecture::layer_widths() const {
  std::vector<int> widths;
  widths.push_back(input_dim);
  for (int l = 0; l < hidden_layers; ++l) widths.push_back(hidden_width);
  widths.push_back(n_classes);
  return widths;
}

std::size_t ReadoutArchitecture::parameter_count() const {
  const auto w = layer_widths();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    count += static_cast<std::size_t>(w[l + 1]) * (static_cast<std::size_t>(w[l]) + 1);
  }
  return count;
}

std::string ReadoutArchitecture::family() const {
  return hidden_layers == 0 ? std::string("linear") : "mlp" + std::to_string(hidden_layers);
}

void Hyperparameters::validate() const {
  if (!(learning_rate >= 0.0)) throw Error("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw Error("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error("beta2 must be in [0, 1)");
  if (!(ema_step_size > 0.0 && ema_step_size <= 1.0)) throw Error("ema_step_size must be in (0, 1]");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) {
    throw Error("label_smoothing must be in [0, 0.5)");
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

ExpertState init_expert(const ReadoutArchitecture& arch, const Hyperparameters& hyper,
                        std::uint64_t seed) {
  arch.validate();
  hyper.validate();
  ExpertState state;
  state.hyper = hyper;
  state.parameters.assign(arch.parameter_count(), 0.0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  const auto widths = arch.layer_widths();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = static_cast<std::size_t>(widths[l]);
    const std::size_t out = static_cast<std::size_t>(widths[l + 1]);
    const bool output_layer = l + 2 == widths.size();
    if (!output_layer) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t i = 0; i < in * out; ++i) state.parameters[offset + i] = dist(rng);
    }
    offset += out * (in + 1);
  }
  state.ema_parameters = state.parameters;
  state.first_moment.assign(state.parameters.size(), 0.0);
  state.second_moment.assign(state.parameters.size(), 0.0);
  return state;
}

namespace {

// Activations of one example: inputs to each layer plus the final logits.
struct ForwardPass {
  std::vector<std::vector<double>> inputs;       // inputs[l] feeds layer l
  std::vector<std::vector<double>> pre_activation;
  std::vector<double> log_probs;
};

void check_params(std::span<const double> params, const ReadoutArchitecture& arch) {
  if (params.size() != arch.parameter_count()) {
    std::ostringstream os;
    os << "parameter vector has " << params.size() << " entries, architecture needs "
       << arch.parameter_count();
    throw Error(os.str());
  }
}

void log_softmax_inplace(std::vector<double>& logits) {
  const double norm = log_sum_exp(logits);
  for (double& v : logits) v -= norm;
}

ForwardPass run_forward(std::span<const double> params, const std::vector<int>& widths,
                        std::span<const float> feature) {
  const auto& k = kernels::active();
  ForwardPass pass;
  const std::size_t n_layers = widths.size() - 1;
  pass.inputs.reserve(n_layers);
  pass.pre_activation.reserve(n_layers);
  pass.inputs.emplace_back(feature.begin(), feature.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = static_cast<std::size_t>(widths[l]);
    const std::size_t out = static_cast<std::size_t>(widths[l + 1]);
    const double* w = params.data() + offset;
    const double* b = w + out * in;
    const std::vector<double>& x = pass.inputs[l];
    std::vector<double> z(out);
    for (std::size_t i = 0; i < out; ++i) z[i] = k.dot(w + i * in, x.data(), in) + b[i];
    offset += out * (in + 1);
    if (l + 1 < n_layers) {
      std::vector<double> a(out);
      for (std::size_t i = 0; i < out; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
      pass.pre_activation.push_back(std::move(z));
      pass.inputs.push_back(std::move(a));
    } else {
      pass.log_probs = std::move(z);
    }
  }
  log_softmax_inplace(pass.log_probs);
  return pass;
}

}  // namespace

std::vector<double> forward_log_probs(std::span<const double> params,
                                      const ReadoutArchitecture& arch,
                                      std::span<const float> feature) {
  check_params(params, arch);
  if (feature.size() != static_cast<std::size_t>(arch.input_dim)) {
    throw Error("feature dimension does not match the readout input");
  }
  return run_forward(params, arch.layer_widths(), feature).log_probs;
}

std::vector<double> predict_log_probs(const ExpertState& state, const ReadoutArchitecture& arch,
                                      std::span<const float> feature, bool use_ema) {
  const auto& params = use_ema ? state.ema_parameters : state.parameters;
  if (!all_finite(params)) throw Error("diverged expert");
  auto lp = forward_log_probs(params, arch, feature);
  if (!all_finite(lp)) throw Error("diverged expert");
  return lp;
}

LossAndGradient loss_and_gradient(std::span<const double> params, const ReadoutArchitecture& arch,
                                  std::span<const LabelledExample> batch, double label_smoothing) {
  check_params(params, arch);
  if (batch.empty()) throw Error("empty batch");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) {
    throw Error("label_smoothing must be in [0, 0.5)");
  }
  const auto& k = kernels::active();
  const auto widths = arch.layer_widths();
  const std::size_t n_layers = widths.size() - 1;
  const std::size_t n_classes = static_cast<std::size_t>(arch.n_classes);
  const double on_target = n_classes > 1 ? 1.0 - label_smoothing : 1.0;
  const double off_target = n_classes > 1 ? label_smoothing / static_cast<double>(n_classes - 1) : 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());

  std::vector<std::size_t> offsets(n_layers);
  for (std::size_t l = 0, off = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(widths[l + 1]) * (static_cast<std::size_t>(widths[l]) + 1);
  }

  LossAndGradient out;
  out.gradient.assign(params.size(), 0.0);
  std::vector<double> delta, back;
  for (const auto& ex : batch) {
    if (ex.feature.size() != static_cast<std::size_t>(arch.input_dim)) {
      throw Error("feature dimension does not match the readout input");
    }
    if (ex.label >= n_classes) throw Error("label out of range");
    ForwardPass pass = run_forward(params, widths, ex.feature);
    if (!all_finite(pass.log_probs)) throw Error("diverged expert");

    delta.assign(n_classes, 0.0);
    double loss = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double target = c == ex.label ? on_target : off_target;
      loss -= target * pass.log_probs[c];
      delta[c] = (std::exp(pass.log_probs[c]) - target) * scale;
    }
    out.loss += loss * scale;

    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t in = static_cast<std::size_t>(widths[l]);
      const std::size_t n_out = static_cast<std::size_t>(widths[l + 1]);
      const double* w = params.data() + offsets[l];
      double* gw = out.gradient.data() + offsets[l];
      double* gb = gw + n_out * in;
      const std::vector<double>& x = pass.inputs[l];
      for (std::size_t i = 0; i < n_out; ++i) {
        k.axpy(delta[i], x.data(), gw + i * in, in);
        gb[i] += delta[i];
      }
      if (l == 0) break;
      back.assign(in, 0.0);
      for (std::size_t i = 0; i < n_out; ++i) k.axpy(delta[i], w + i * in, back.data(), in);
      const std::vector<double>& z = pass.pre_activation[l - 1];
      for (std::size_t j = 0; j < in; ++j) back[j] = z[j] > 0.0 ? back[j] : 0.0;
      delta.swap(back);
    }
  }
  return out;
}

void sgd_step(ExpertState& state, std::span<const double> gradient) {
  const std::size_t n = state.parameters.size();
  if (gradient.size() != n || state.ema_parameters.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    throw Error("gradient and state shapes disagree");
  }
  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  kernels::AdamWParams hp;
  hp.learning_rate = h.learning_rate;
  hp.beta1 = h.beta1;
  hp.beta2 = h.beta2;
  hp.epsilon = h.adam_epsilon;
  hp.weight_decay = h.weight_decay;
  hp.bias_correction1 = 1.0 - std::pow(h.beta1, t);
  hp.bias_correction2 = 1.0 - std::pow(h.beta2, t);
  const auto& k = kernels::active();
  k.adamw(hp, state.parameters.data(), gradient.data(), state.first_moment.data(),
          state.second_moment.data(), n);
  k.ema(h.ema_step_size, state.parameters.data(), state.ema_parameters.data(), n);
}

}  // namespace pqmdl
