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

// Exact forward inference over expert-sequence priors.
//
// An expert-sequence prior is a hidden Markov chain over "which readout model
// predicts step t". The codelength of a label sequence is the negative log of
// the marginal likelihood under that chain; the forward recursion computes it
// in O(states) per step for every strategy here, because each transition
// kernel is a rank-one update of the identity:
//
//   p(j | i) = (1 - beta_t) [i == j] + beta_t w(j)
//
// with beta_t = 0 (Bayesian mixture), 1 (elementwise mixture),
// alpha (fixed share, constant rate) or min(1, (m-1)/t) (fixed share,
// decreasing rate). The switch distribution doubles the state space into an
// unstable and an absorbing stable chain.
//
// Step indices in this API are 1-based where they refer to the data index t
// used by the transition schedule; containers are 0-based.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pqmdl/core.hpp"

namespace pqmdl {

struct SwitchingStrategy {
  enum class Kind {
    kFixedShareDecreasing,
    kFixedShareConstant,
    kBayesianMixture,
    kElementwiseMixture,
    kSwitchDistribution,
  };

  Kind kind = Kind::kFixedShareDecreasing;
  std::size_t n_experts = 1;
  int m = 2;             // fixed share, decreasing rate
  double alpha = 0.0;    // fixed share, constant rate
  double kappa = 0.5;    // switch distribution
  std::vector<double> initial_log_prior;  // length n_experts, normalized
  std::vector<double> switch_weights;     // w(k), sums to 1

  static SwitchingStrategy fixed_share_decreasing(std::size_t k, int m);
  static SwitchingStrategy fixed_share_constant(std::size_t k, double alpha);
  static SwitchingStrategy bayesian_mixture(std::size_t k);
  static SwitchingStrategy elementwise_mixture(std::size_t k);
  static SwitchingStrategy switch_distribution(std::size_t k, double kappa);

  /// Throws Error when an invariant does not hold.
  void validate() const;

  /// Hidden states of the chain: n_experts, or 2 * n_experts for the switch
  /// distribution (unstable states first, then stable).
  std::size_t n_states() const;

  /// Expert index emitted by hidden state `state`.
  std::size_t expert_of_state(std::size_t state) const { return state % n_experts; }

  /// Mixing weight beta_t of the rank-one kernel at data index t >= 2, or the
  /// unstable-chain restart probability tau_t for the switch distribution.
  double switch_rate(std::size_t t) const;

  /// Compact text form, e.g. "fixed-share-dec:m=2" (see parse_strategy).
  std::string descriptor() const;
};

/// min(1, (m - 1) / t)
double fixed_share_rate(int m, std::size_t t);

/// Dense n_states x n_states transition kernel, log space, row = previous state.
struct TransitionMatrix {
  std::size_t n_states = 0;
  std::vector<double> log_probs;
  double at(std::size_t from, std::size_t to) const { return log_probs[from * n_states + to]; }
};

/// log p(state_t | state_{t-1}) for data index t >= 2. Throws for t < 2.
TransitionMatrix transition_log_probs(const SwitchingStrategy& strategy, std::size_t t);

/// log p(state_1) over hidden states.
std::vector<double> initial_state_log_probs(const SwitchingStrategy& strategy);

/// Rows are p(xi_t = k | D_<t); per_step_marginal_loss[t] is the codelength
/// increment of step t under the mixture prediction.
struct PosteriorTrace {
  std::size_t n_steps = 0;
  std::size_t n_experts = 0;
  std::vector<double> posteriors;  // may be empty when not recorded
  std::vector<double> per_step_marginal_loss;

  std::span<const double> row(std::size_t t) const {
    return {posteriors.data() + t * n_experts, n_experts};
  }
};

struct CodelengthResult {
  double total_nats = 0.0;
  PosteriorTrace trace;
  std::vector<double> time_averaged_posterior;  // (1/N) sum_t p(xi_t = k | D_<t)
  SwitchingStrategy strategy;
};

struct ForwardOptions {
  bool keep_posteriors = true;
};

/// Incremental forward filter; one predict()/absorb() pair per data step.
///
///   ForwardFilter f(strategy);
///   for each step: auto post = f.predict(); ...; f.absorb(losses_row);
class ForwardFilter {
 public:
  explicit ForwardFilter(SwitchingStrategy strategy);

  /// Moves to the next step and returns p(xi_t = k | D_<t) over experts.
  std::span<const double> predict();

  /// Conditions on the step's losses; returns the per-step marginal loss.
  /// Throws on size mismatch or non-finite losses.
  double absorb(std::span<const double> losses);

  double total_nats() const { return total_; }
  std::size_t steps() const { return t_; }
  const SwitchingStrategy& strategy() const { return strategy_; }

 private:
  void apply_transition();

  SwitchingStrategy strategy_;
  std::vector<double> state_;  // log p(state_t, y_<t) up to the running normalizer
  std::vector<double> posterior_;
  std::vector<double> log_w_;
  std::size_t t_ = 0;
  bool predicted_ = false;
  double total_ = 0.0;
};

/// Total switching codelength with posterior trace (rank-one fast path).
CodelengthResult forward_codelength(LossView losses, const SwitchingStrategy& strategy,
                                    ForwardOptions options = {});

/// Same quantity via explicit dense transition matrices, O(states^2) per
/// step. Reference path for equivalence tests and small inputs.
CodelengthResult forward_codelength_dense(LossView losses, const SwitchingStrategy& strategy);

/// -log sum_k prior_k prod_t exp(-L_t^k)
double bayesian_mixture_codelength(LossView losses, std::span<const double> log_prior);

/// sum_t -log sum_k w_k exp(-L_t^k)
double elementwise_mixture_codelength(LossView losses, std::span<const double> weights);

/// Switch distribution with uniform w, tau_t = kappa / t. kappa in (0, 1).
double switch_distribution_codelength(LossView losses, double kappa);

/// R_t = sum_{s <= t} (marginal_s - comparator_s)
std::vector<double> regret_vs_comparator(const CodelengthResult& result,
                                         std::span<const double> comparator_per_step_loss);

/// Argmax of the time-averaged posterior; ties go to the lower index.
std::size_t most_probable_expert(std::span<const double> time_averaged_posterior);

struct HindsightPath {
  double codelength = 0.0;
  std::vector<std::size_t> path;  // expert per step
  std::size_t switches = 0;
};

/// Minimum of sum_t L_t^{xi_t} over expert paths with at most `max_switches`
/// switches (unlimited when empty). Ties prefer the lower final expert, then
/// fewer switches; along the path staying beats switching.
HindsightPath hindsight_best_path(LossView losses, std::optional<std::size_t> max_switches);

}  // namespace pqmdl
