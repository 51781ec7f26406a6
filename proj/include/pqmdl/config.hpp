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

// Text and JSON configuration: strategy specs, expert grids, regret experiments.
//
// Grid spec:
//   {"architectures": ["linear", "mlp1", "mlp2x32", {"hidden_layers": 1, "hidden_width": 8}],
//    "learning_rates": [1e-3, 3e-3], "weight_decays": [0], "beta1s": [0.9],
//    "ema_step_sizes": [0.01], "label_smoothings": [0],
//    "trainer": {"batch_size": 32, "n_streams": 10, "reset_probability": 0}}
// Every list is optional and defaults to a single Hyperparameters default.
// Hidden width defaults to the feature dimension.
//
// Regret experiment spec:
//   {"source": {"family": "bernoulli" | "gaussian", "variance": 1,
//               "segments": [{"start": 1, "parameter": 0.5}, ...]},
//    "horizon": 100000, "n_trials": 100, "seed": 1, "grid_per_decade": 10,
//    "experts": [{"family": "bernoulli", "smoothing": 0.5}, ...],
//    "strategy": "fixed-share-dec:m=2", "comparator_switches": 1}

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pqmdl/expfam.hpp"
#include "pqmdl/switching.hpp"
#include "pqmdl/trainer.hpp"

namespace pqmdl {

/// fixed-share-dec:m=INT | fixed-share-const:alpha=F | bayes | elementwise | switch:kappa=F
SwitchingStrategy parse_strategy(const std::string& text, std::size_t n_experts);

/// Comma-separated list of strategy specs.
std::vector<SwitchingStrategy> parse_strategy_list(const std::string& text, std::size_t n_experts);

struct GridSpec {
  std::vector<ReadoutArchitecture> architectures;  // input_dim / n_classes unset
  std::vector<bool> width_from_input;              // hidden width follows the data dimension
  std::vector<double> learning_rates;
  std::vector<double> weight_decays;
  std::vector<double> beta1s;
  std::vector<double> ema_step_sizes;
  std::vector<double> label_smoothings;
  TrainerConfig trainer;
  nlohmann::json source;  // echoed into reports
};

GridSpec parse_grid(const nlohmann::json& j);

/// Reads a grid from a JSON file, or inline JSON when `text` starts with '{'.
GridSpec load_grid(const std::string& text);

/// Cartesian product in the order architectures x lr x wd x beta1 x ema x smoothing.
std::vector<ExpertSpec> build_expert_pool(const GridSpec& grid, std::size_t dim, std::uint32_t n_classes);

RegretExperiment parse_regret_experiment(const nlohmann::json& j);
RegretExperiment load_regret_experiment(const std::string& path);

/// Parses a JSON file, naming the path on failure.
nlohmann::json read_json_file(const std::string& path);

}  // namespace pqmdl
