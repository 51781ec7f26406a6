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

// Prequential (predict, then train) pass over a feature sequence.
//
// At every step t the loss of each expert is recorded from parameters that
// have only seen examples < t, then every expert takes one optimizer step on
// a mini-batch made of example t plus replayed earlier examples.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pqmdl/core.hpp"
#include "pqmdl/readout.hpp"
#include "pqmdl/switching.hpp"

namespace pqmdl {

/// Cursors over the already-seen prefix that re-present old examples in
/// their original order.
///
/// A stream that runs into the frontier wraps around to the oldest example.
/// When the prefix grows to n examples each stream jumps to the newest one
/// with probability 1/n. Together these keep every cursor uniformly
/// distributed over the prefix, so replayed indices are uniform samples.
/// `reset_probability` > 0 additionally moves a stream to the newest example
/// after each draw with that probability, which biases replay toward recent data.
class ReplayStreamSet {
 public:
  ReplayStreamSet(std::size_t n_streams, std::uint64_t seed, double reset_probability = 0.0);

  /// Batch for new example `new_index` (0-based): the new index followed by
  /// min(batch_size - 1, new_index) replayed indices drawn round-robin over
  /// the streams. Calls must use non-decreasing `new_index`.
  std::vector<std::size_t> assemble_batch(std::size_t new_index, std::size_t batch_size);

  std::size_t n_streams() const { return cursors_.size(); }
  const std::vector<std::size_t>& cursors() const { return cursors_; }

 private:
  void grow_to(std::size_t seen);

  std::vector<std::size_t> cursors_;
  std::size_t seen_ = 0;
  std::size_t next_stream_ = 0;
  double reset_probability_;
  std::mt19937_64 rng_;
};

struct ExpertSpec {
  ReadoutArchitecture arch;
  Hyperparameters hyper;
  std::string name;  // defaults to a descriptor built from arch + hyper
};

/// "<family>/lr=..,wd=..,b1=..,ema=..,ls=.."
std::string describe_expert(const ReadoutArchitecture& arch, const Hyperparameters& hyper);

struct TrainerConfig {
  std::size_t batch_size = 32;
  std::size_t n_streams = 10;
  double reset_probability = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Drives a pool of experts over one feature sequence, one step at a time.
class PrequentialTrainer {
 public:
  PrequentialTrainer(const FeatureSequence& data, std::vector<ExpertSpec> pool,
                     TrainerConfig config);

  /// Next-step losses -log p_k(y_t | x_t) of all experts for example t,
  /// using EMA parameters. Diverged experts report log C.
  std::vector<double> record(std::size_t t);

  /// One optimizer step per expert on the batch for example t.
  void update(std::size_t t);

  std::size_t n_experts() const { return pool_.size(); }
  std::vector<std::string> expert_names() const;
  const std::vector<bool>& diverged() const { return diverged_; }
  const ExpertState& state(std::size_t k) const { return states_[k]; }
  const ExpertSpec& spec(std::size_t k) const { return pool_[k]; }

 private:
  const FeatureSequence& data_;
  std::vector<ExpertSpec> pool_;
  TrainerConfig config_;
  std::vector<ExpertState> states_;
  std::vector<bool> diverged_;
  ReplayStreamSet streams_;
};

struct Stage1Result {
  LossMatrix losses;
  std::vector<bool> diverged;
};

/// Records the full N x K loss table. Bit-reproducible for a fixed seed and
/// kernel variant.
Stage1Result run_stage1(const FeatureSequence& data, const std::vector<ExpertSpec>& pool,
                        const TrainerConfig& config);

struct OnlineResult {
  CodelengthResult codelength;
  LossMatrix losses;
  std::vector<bool> diverged;
};

/// Single pass that interleaves training and switching inference.
OnlineResult run_online(const FeatureSequence& data, const std::vector<ExpertSpec>& pool,
                        const TrainerConfig& config, const SwitchingStrategy& strategy);

/// Seed for expert `index` derived from the global seed.
std::uint64_t expert_seed(std::uint64_t global_seed, std::size_t index);

}  // namespace pqmdl
