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

// Closed-form exponential-family plug-in experts and a Monte-Carlo harness
// measuring the regret of switching codes against the best expert path in
// hindsight (with per-expert maximum-likelihood fits on the whole prefix).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pqmdl/switching.hpp"

namespace pqmdl {

enum class Family { kBernoulli, kCategorical, kGaussianKnownVariance };

struct ExpFamSpec {
  Family family = Family::kBernoulli;
  int n_categories = 2;     // categorical only; Bernoulli is fixed at 2
  double smoothing = 0.5;   // add-gamma pseudo-count (0.5 is Krichevsky-Trofimov)
  double variance = 1.0;    // Gaussian only
  double prior_mean = 0.0;  // Gaussian pseudo-observation
  std::string name;

  void validate() const;
  int alphabet_size() const;
  std::string describe() const;
};

/// Sequential plug-in predictor. Discrete outcomes are passed as integral
/// doubles in [0, alphabet).
class ExpFamExpert {
 public:
  explicit ExpFamExpert(ExpFamSpec spec);

  /// Discrete: log((n_x + gamma) / (t + C gamma)).
  /// Gaussian: log N(x; (sum + prior_mean) / (t + 1), variance).
  double predictive_log_prob(double x) const;
  void observe(double x);

  std::size_t count() const { return t_; }
  const ExpFamSpec& spec() const { return spec_; }

 private:
  ExpFamSpec spec_;
  std::vector<std::size_t> counts_;
  double sum_ = 0.0;
  std::size_t t_ = 0;
};

/// Prequential losses -log p(x_t | x_<t) of one expert over a sequence.
std::vector<double> plugin_losses(const ExpFamSpec& spec, std::span<const double> data);

/// Per-step losses -log M(x_t; theta_ML(x^N)) under the batch ML fit.
std::vector<double> batch_fit_losses(const ExpFamSpec& spec, std::span<const double> data);

/// Best expert path in hindsight over batch-ML per-step losses with at most
/// `max_switches` switches. Throws if N * K * (max_switches + 1) > 4e8.
HindsightPath hindsight_best_codelength(std::span<const double> data,
                                        const std::vector<ExpFamSpec>& experts,
                                        std::optional<std::size_t> max_switches);

struct SourceSegment {
  std::size_t start = 1;   // 1-based first index of the segment
  double parameter = 0.5;  // Bernoulli p, or Gaussian mean
};

struct RegretExperiment {
  Family source_family = Family::kBernoulli;  // Bernoulli or Gaussian sources
  double source_variance = 1.0;
  std::vector<SourceSegment> segments{{1, 0.5}};
  std::size_t horizon = 1000;
  std::vector<ExpFamSpec> experts{ExpFamSpec{}};
  SwitchingStrategy strategy = SwitchingStrategy::bayesian_mixture(1);
  std::size_t n_trials = 10;
  std::uint64_t seed = 0;
  std::size_t grid_per_decade = 10;
  std::optional<std::size_t> comparator_max_switches;  // default derived from strategy

  void validate() const;
  /// Switch budget of the comparator path.
  std::size_t comparator_switches() const;
};

/// Draws one sequence from the piecewise-stationary source.
std::vector<double> sample_source(const RegretExperiment& exp, std::mt19937_64& rng);

/// Sorted sample sizes ~10^(i / per_decade) from 10 up to and including horizon.
std::vector<std::size_t> log_grid(std::size_t horizon, std::size_t per_decade);

struct RegretCurve {
  std::vector<std::size_t> grid;
  std::vector<double> mean_regret;
  std::vector<double> stderr_regret;
  double slope = 0.0;  // fit of R against ln N over the final decade
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double final_regret_per_step = 0.0;  // R(N) / N
  bool constant_regret = false;        // |slope| below kConstantRegretSlope
  std::size_t comparator_switches = 0;
};

inline constexpr double kConstantRegretSlope = 0.05;

RegretCurve run_regret_experiment(const RegretExperiment& exp);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace pqmdl
