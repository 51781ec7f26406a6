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

#include "pqmdl/trainer.hpp"

#include <cmath>
#include <sstream>

namespace pqmdl {

std::uint64_t expert_seed(std::uint64_t global_seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(global_seed),
                    static_cast<std::uint32_t>(global_seed >> 32),
                    static_cast<std::uint32_t>(index), 0x65787074u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

ReplayStreamSet::ReplayStreamSet(std::size_t n_streams, std::uint64_t seed,
                                 double reset_probability)
    : cursors_(n_streams, 0), reset_probability_(reset_probability), rng_(seed) {
  if (!(reset_probability >= 0.0 && reset_probability <= 1.0)) {
    throw Error("reset_probability must be in [0, 1]");
  }
}

void ReplayStreamSet::grow_to(std::size_t seen) {
  while (seen_ < seen) {
    ++seen_;
    if (seen_ == 1) continue;  // every cursor already points at example 0
    std::bernoulli_distribution jump(1.0 / static_cast<double>(seen_));
    for (auto& c : cursors_) {
      if (jump(rng_)) c = seen_ - 1;
    }
  }
}

std::vector<std::size_t> ReplayStreamSet::assemble_batch(std::size_t new_index,
                                                         std::size_t batch_size) {
  if (new_index < seen_) throw Error("replay frontier cannot move backwards");
  grow_to(new_index);
  std::vector<std::size_t> batch{new_index};
  if (cursors_.empty() || new_index == 0 || batch_size <= 1) return batch;
  const std::size_t replay = std::min(batch_size - 1, new_index);
  batch.reserve(replay + 1);
  for (std::size_t i = 0; i < replay; ++i) {
    std::size_t& cursor = cursors_[next_stream_];
    batch.push_back(cursor);
    if (reset_probability_ > 0.0 && std::bernoulli_distribution(reset_probability_)(rng_)) {
      cursor = seen_ - 1;
    } else {
      cursor = cursor + 1 < seen_ ? cursor + 1 : 0;
    }
    next_stream_ = (next_stream_ + 1) % cursors_.size();
  }
  return batch;
}

std::string describe_expert(const ReadoutArchitecture& arch, const Hyperparameters& hyper) {
  std::ostringstream os;
  os << arch.family();
  if (arch.hidden_layers > 0) os << "x" << arch.hidden_width;
  os << "/lr=" << hyper.learning_rate << ",wd=" << hyper.weight_decay << ",b1=" << hyper.beta1
     << ",ema=" << hyper.ema_step_size << ",ls=" << hyper.label_smoothing;
  return os.str();
}

void TrainerConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(reset_probability >= 0.0 && reset_probability <= 1.0)) {
    throw Error("reset_probability must be in [0, 1]");
  }
}

namespace {

void check_data(const FeatureSequence& data) {
  const auto problems = validate_feature_sequence(data);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid feature sequence";
    if (!data.name.empty()) os << " '" << data.name << "'";
    os << ": " << problems.front();
    if (problems.size() > 1) os << " (+" << problems.size() - 1 << " more)";
    throw Error(os.str());
  }
}

}  // namespace

PrequentialTrainer::PrequentialTrainer(const FeatureSequence& data, std::vector<ExpertSpec> pool,
                                       TrainerConfig config)
    : data_(data),
      pool_(std::move(pool)),
      config_(config),
      streams_(config.n_streams, expert_seed(config.seed, static_cast<std::size_t>(-1)),
               config.reset_probability) {
  config_.validate();
  check_data(data_);
  if (pool_.empty()) throw Error("expert pool is empty");
  states_.reserve(pool_.size());
  for (std::size_t k = 0; k < pool_.size(); ++k) {
    auto& spec = pool_[k];
    if (spec.name.empty()) spec.name = describe_expert(spec.arch, spec.hyper);
    if (spec.arch.input_dim != static_cast<int>(data_.dim) ||
        spec.arch.n_classes != static_cast<int>(data_.n_classes)) {
      throw Error("expert '" + spec.name + "' does not match the data dimensions");
    }
    states_.push_back(init_expert(spec.arch, spec.hyper, expert_seed(config_.seed, k)));
  }
  diverged_.assign(pool_.size(), false);
}

std::vector<std::string> PrequentialTrainer::expert_names() const {
  std::vector<std::string> names;
  names.reserve(pool_.size());
  for (const auto& s : pool_) names.push_back(s.name);
  return names;
}

std::vector<double> PrequentialTrainer::record(std::size_t t) {
  const double uniform = std::log(static_cast<double>(data_.n_classes));
  const auto feature = data_.feature(t);
  const std::uint32_t label = data_.labels[t];
  std::vector<double> losses(pool_.size());
  for (std::size_t k = 0; k < pool_.size(); ++k) {
    if (!diverged_[k]) {
      try {
        losses[k] = -predict_log_probs(states_[k], pool_[k].arch, feature, true)[label];
        continue;
      } catch (const Error&) {
        diverged_[k] = true;
      }
    }
    losses[k] = uniform;
  }
  return losses;
}

void PrequentialTrainer::update(std::size_t t) {
  const auto indices = streams_.assemble_batch(t, config_.batch_size);
  std::vector<LabelledExample> batch;
  batch.reserve(indices.size());
  for (std::size_t i : indices) batch.push_back({data_.feature(i), data_.labels[i]});
  for (std::size_t k = 0; k < pool_.size(); ++k) {
    if (diverged_[k]) continue;
    auto& state = states_[k];
    try {
      const auto lg =
          loss_and_gradient(state.parameters, pool_[k].arch, batch, state.hyper.label_smoothing);
      sgd_step(state, lg.gradient);
    } catch (const Error&) {
      diverged_[k] = true;
      continue;
    }
    if (!all_finite(state.parameters) || !all_finite(state.ema_parameters)) diverged_[k] = true;
  }
}

Stage1Result run_stage1(const FeatureSequence& data, const std::vector<ExpertSpec>& pool,
                        const TrainerConfig& config) {
  PrequentialTrainer trainer(data, pool, config);
  const std::size_t n = data.size();
  std::vector<double> losses;
  losses.reserve(n * trainer.n_experts());
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = trainer.record(t);
    losses.insert(losses.end(), row.begin(), row.end());
    trainer.update(t);
  }
  return {LossMatrix(n, trainer.expert_names(), std::move(losses)), trainer.diverged()};
}

OnlineResult run_online(const FeatureSequence& data, const std::vector<ExpertSpec>& pool,
                        const TrainerConfig& config, const SwitchingStrategy& strategy) {
  PrequentialTrainer trainer(data, pool, config);
  if (strategy.n_experts != trainer.n_experts()) {
    throw Error("strategy expert count does not match the pool");
  }
  const std::size_t n = data.size();
  const std::size_t k = trainer.n_experts();
  ForwardFilter filter(strategy);
  CodelengthResult result;
  result.strategy = strategy;
  result.trace.n_steps = n;
  result.trace.n_experts = k;
  result.trace.posteriors.reserve(n * k);
  result.time_averaged_posterior.assign(k, 0.0);
  std::vector<double> losses;
  losses.reserve(n * k);
  for (std::size_t t = 0; t < n; ++t) {
    const auto post = filter.predict();
    result.trace.posteriors.insert(result.trace.posteriors.end(), post.begin(), post.end());
    for (std::size_t j = 0; j < k; ++j) result.time_averaged_posterior[j] += post[j];
    const auto row = trainer.record(t);
    result.trace.per_step_marginal_loss.push_back(filter.absorb(row));
    losses.insert(losses.end(), row.begin(), row.end());
    trainer.update(t);
  }
  result.total_nats = filter.total_nats();
  for (double& p : result.time_averaged_posterior) p /= static_cast<double>(n);
  return {std::move(result), LossMatrix(n, trainer.expert_names(), std::move(losses)),
          trainer.diverged()};
}

}  // namespace pqmdl
