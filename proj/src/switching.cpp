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

#include "pqmdl/switching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace pqmdl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SwitchingStrategy make(SwitchingStrategy::Kind kind, std::size_t k) {
  if (k == 0) throw Error("strategy needs at least one expert");
  SwitchingStrategy s;
  s.kind = kind;
  s.n_experts = k;
  s.initial_log_prior = uniform_log_prior(k);
  s.switch_weights.assign(k, 1.0 / static_cast<double>(k));
  return s;
}

void check_dims(LossView losses, std::size_t k) {
  if (losses.n_experts != k) {
    std::ostringstream os;
    os << "loss matrix has " << losses.n_experts << " experts but strategy expects " << k;
    throw Error(os.str());
  }
  if (losses.n_steps == 0) throw Error("loss matrix has no steps");
  if (losses.data.size() != losses.n_steps * losses.n_experts) {
    throw Error("loss view size does not match its dimensions");
  }
}

void check_row(std::span<const double> row, std::size_t t) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (!std::isfinite(row[k])) {
      std::ostringstream os;
      os << "non-finite loss " << row[k] << " at (t=" << t << ", k=" << k << ")";
      throw Error(os.str());
    }
  }
}

}  // namespace

SwitchingStrategy SwitchingStrategy::fixed_share_decreasing(std::size_t k, int m) {
  auto s = make(Kind::kFixedShareDecreasing, k);
  s.m = m;
  s.validate();
  return s;
}

SwitchingStrategy SwitchingStrategy::fixed_share_constant(std::size_t k, double alpha) {
  auto s = make(Kind::kFixedShareConstant, k);
  s.alpha = alpha;
  s.validate();
  return s;
}

SwitchingStrategy SwitchingStrategy::bayesian_mixture(std::size_t k) {
  return make(Kind::kBayesianMixture, k);
}

SwitchingStrategy SwitchingStrategy::elementwise_mixture(std::size_t k) {
  return make(Kind::kElementwiseMixture, k);
}

SwitchingStrategy SwitchingStrategy::switch_distribution(std::size_t k, double kappa) {
  auto s = make(Kind::kSwitchDistribution, k);
  s.kappa = kappa;
  s.validate();
  return s;
}

void SwitchingStrategy::validate() const {
  if (n_experts == 0) throw Error("strategy needs at least one expert");
  if (initial_log_prior.size() != n_experts) throw Error("initial prior length != n_experts");
  if (!is_log_normalized(initial_log_prior, 1e-9)) throw Error("initial prior is not normalized");
  if (switch_weights.size() != n_experts) throw Error("switch weights length != n_experts");
  double sum = 0.0;
  for (double w : switch_weights) {
    if (!(w >= 0.0)) throw Error("switch weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error("switch weights must sum to 1");
  switch (kind) {
    case Kind::kFixedShareDecreasing:
      if (m < 1) throw Error("fixed share needs m >= 1");
      break;
    case Kind::kFixedShareConstant:
      if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("fixed share alpha must be in [0, 1]");
      break;
    case Kind::kSwitchDistribution:
      if (!(kappa > 0.0 && kappa < 1.0)) throw Error("switch distribution kappa must be in (0, 1)");
      break;
    case Kind::kBayesianMixture:
    case Kind::kElementwiseMixture:
      break;
  }
}

std::size_t SwitchingStrategy::n_states() const {
  return kind == Kind::kSwitchDistribution ? 2 * n_experts : n_experts;
}

double fixed_share_rate(int m, std::size_t t) {
  if (t == 0) throw Error("fixed share rate needs t >= 1");
  return std::min(1.0, static_cast<double>(m - 1) / static_cast<double>(t));
}

double SwitchingStrategy::switch_rate(std::size_t t) const {
  switch (kind) {
    case Kind::kFixedShareDecreasing:
      return fixed_share_rate(m, t);
    case Kind::kFixedShareConstant:
      return alpha;
    case Kind::kBayesianMixture:
      return 0.0;
    case Kind::kElementwiseMixture:
      return 1.0;
    case Kind::kSwitchDistribution:
      return kappa / static_cast<double>(t);
  }
  return 0.0;
}

std::string SwitchingStrategy::descriptor() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::kFixedShareDecreasing:
      os << "fixed-share-dec:m=" << m;
      break;
    case Kind::kFixedShareConstant:
      os << "fixed-share-const:alpha=" << alpha;
      break;
    case Kind::kBayesianMixture:
      os << "bayes";
      break;
    case Kind::kElementwiseMixture:
      os << "elementwise";
      break;
    case Kind::kSwitchDistribution:
      os << "switch:kappa=" << kappa;
      break;
  }
  return os.str();
}

std::vector<double> initial_state_log_probs(const SwitchingStrategy& strategy) {
  if (strategy.kind != SwitchingStrategy::Kind::kSwitchDistribution) {
    return strategy.initial_log_prior;
  }
  const std::size_t k = strategy.n_experts;
  std::vector<double> init(2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    init[i] = strategy.initial_log_prior[i] - std::log(2.0);
    init[k + i] = init[i];
  }
  return init;
}

TransitionMatrix transition_log_probs(const SwitchingStrategy& strategy, std::size_t t) {
  if (t < 2) throw Error("transition_log_probs needs t >= 2 (t = 1 uses the initial prior)");
  const std::size_t k = strategy.n_experts;
  const std::size_t n = strategy.n_states();
  const double rate = strategy.switch_rate(t);
  TransitionMatrix out{n, std::vector<double>(n * n, kNegInf)};
  if (strategy.kind != SwitchingStrategy::Kind::kSwitchDistribution) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double p = (i == j ? 1.0 - rate : 0.0) + rate * strategy.switch_weights[j];
        out.log_probs[i * n + j] = std::log(p);
      }
    }
    return out;
  }
  // Unstable (i < k): stay with 1 - tau, otherwise redraw expert ~ w and chain
  // uniformly. Stable (i >= k): absorbing.
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double fresh = rate * strategy.switch_weights[j] * 0.5;
      out.log_probs[i * n + j] = std::log((i == j ? 1.0 - rate : 0.0) + fresh);
      out.log_probs[i * n + k + j] = std::log(fresh);
    }
    out.log_probs[(k + i) * n + k + i] = 0.0;
  }
  return out;
}

ForwardFilter::ForwardFilter(SwitchingStrategy strategy) : strategy_(std::move(strategy)) {
  strategy_.validate();
  posterior_.assign(strategy_.n_experts, 0.0);
  log_w_.resize(strategy_.n_experts);
  for (std::size_t k = 0; k < strategy_.n_experts; ++k) {
    log_w_[k] = std::log(strategy_.switch_weights[k]);
  }
}

void ForwardFilter::apply_transition() {
  const std::size_t k = strategy_.n_experts;
  const double rate = strategy_.switch_rate(t_);
  const double log_keep = std::log1p(-rate);
  const double log_rate = std::log(rate);
  if (strategy_.kind != SwitchingStrategy::Kind::kSwitchDistribution) {
    if (rate == 0.0) return;
    const double mass = log_sum_exp(state_);
    for (std::size_t j = 0; j < k; ++j) {
      state_[j] = log_add_exp(log_keep + state_[j], log_rate + log_w_[j] + mass);
    }
    return;
  }
  const double unstable = log_sum_exp(std::span<const double>(state_).first(k));
  for (std::size_t j = 0; j < k; ++j) {
    const double fresh = log_rate + log_w_[j] - std::log(2.0) + unstable;
    state_[j] = log_add_exp(log_keep + state_[j], fresh);
    state_[k + j] = log_add_exp(state_[k + j], fresh);
  }
}

std::span<const double> ForwardFilter::predict() {
  if (predicted_) throw Error("predict() called twice without absorb()");
  ++t_;
  if (t_ == 1) {
    state_ = initial_state_log_probs(strategy_);
  } else {
    apply_transition();
  }
  const double norm = log_sum_exp(state_);
  const std::size_t k = strategy_.n_experts;
  for (std::size_t j = 0; j < k; ++j) {
    double lp = state_[j];
    if (strategy_.kind == SwitchingStrategy::Kind::kSwitchDistribution) {
      lp = log_add_exp(lp, state_[k + j]);
    }
    posterior_[j] = std::exp(lp - norm);
  }
  predicted_ = true;
  return posterior_;
}

double ForwardFilter::absorb(std::span<const double> losses) {
  if (!predicted_) throw Error("absorb() called before predict()");
  if (losses.size() != strategy_.n_experts) {
    throw Error("loss row length does not match the number of experts");
  }
  check_row(losses, t_ - 1);
  const double before = log_sum_exp(state_);
  for (std::size_t i = 0; i < state_.size(); ++i) {
    state_[i] -= losses[strategy_.expert_of_state(i)];
  }
  const double after = log_sum_exp(state_);
  for (double& s : state_) s -= after;
  const double marginal = before - after;
  total_ += marginal;
  predicted_ = false;
  return marginal;
}

namespace {

CodelengthResult start_result(LossView losses, const SwitchingStrategy& strategy, bool keep) {
  CodelengthResult result;
  result.strategy = strategy;
  result.trace.n_steps = losses.n_steps;
  result.trace.n_experts = losses.n_experts;
  if (keep) result.trace.posteriors.reserve(losses.n_steps * losses.n_experts);
  result.trace.per_step_marginal_loss.reserve(losses.n_steps);
  result.time_averaged_posterior.assign(losses.n_experts, 0.0);
  return result;
}

void finish_average(CodelengthResult& result) {
  const double n = static_cast<double>(result.trace.n_steps);
  for (double& p : result.time_averaged_posterior) p /= n;
}

}  // namespace

CodelengthResult forward_codelength(LossView losses, const SwitchingStrategy& strategy,
                                    ForwardOptions options) {
  strategy.validate();
  check_dims(losses, strategy.n_experts);
  CodelengthResult result = start_result(losses, strategy, options.keep_posteriors);
  ForwardFilter filter(strategy);
  for (std::size_t t = 0; t < losses.n_steps; ++t) {
    const auto post = filter.predict();
    for (std::size_t k = 0; k < post.size(); ++k) result.time_averaged_posterior[k] += post[k];
    if (options.keep_posteriors) {
      result.trace.posteriors.insert(result.trace.posteriors.end(), post.begin(), post.end());
    }
    result.trace.per_step_marginal_loss.push_back(filter.absorb(losses.row(t)));
  }
  result.total_nats = filter.total_nats();
  finish_average(result);
  return result;
}

CodelengthResult forward_codelength_dense(LossView losses, const SwitchingStrategy& strategy) {
  strategy.validate();
  check_dims(losses, strategy.n_experts);
  CodelengthResult result = start_result(losses, strategy, true);
  const std::size_t k = strategy.n_experts;
  const std::size_t n = strategy.n_states();
  std::vector<double> s = initial_state_log_probs(strategy);
  std::vector<double> next(n);
  std::vector<double> terms(n);
  double total = 0.0;
  for (std::size_t t = 0; t < losses.n_steps; ++t) {
    if (t > 0) {
      const TransitionMatrix trans = transition_log_probs(strategy, t + 1);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) terms[i] = trans.at(i, j) + s[i];
        next[j] = log_sum_exp(terms);
      }
      s.swap(next);
    }
    const double norm = log_sum_exp(s);
    for (std::size_t j = 0; j < k; ++j) {
      double lp = s[j];
      if (n != k) lp = log_add_exp(lp, s[k + j]);
      const double p = std::exp(lp - norm);
      result.trace.posteriors.push_back(p);
      result.time_averaged_posterior[j] += p;
    }
    const auto row = losses.row(t);
    check_row(row, t);
    for (std::size_t i = 0; i < n; ++i) s[i] -= row[strategy.expert_of_state(i)];
    const double after = log_sum_exp(s);
    result.trace.per_step_marginal_loss.push_back(norm - after);
    total += norm - after;
    for (double& v : s) v -= after;
  }
  result.total_nats = total;
  finish_average(result);
  return result;
}

double bayesian_mixture_codelength(LossView losses, std::span<const double> log_prior) {
  check_dims(losses, log_prior.size());
  if (!is_log_normalized(log_prior)) throw Error("prior is not normalized");
  std::vector<double> terms(log_prior.begin(), log_prior.end());
  for (std::size_t t = 0; t < losses.n_steps; ++t) {
    const auto row = losses.row(t);
    check_row(row, t);
    for (std::size_t k = 0; k < terms.size(); ++k) terms[k] -= row[k];
  }
  return -log_sum_exp(terms);
}

double elementwise_mixture_codelength(LossView losses, std::span<const double> weights) {
  check_dims(losses, weights.size());
  std::vector<double> log_w(weights.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0)) throw Error("mixture weights must be non-negative");
    sum += weights[k];
    log_w[k] = std::log(weights[k]);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error("mixture weights must sum to 1");
  std::vector<double> terms(weights.size());
  double total = 0.0;
  for (std::size_t t = 0; t < losses.n_steps; ++t) {
    const auto row = losses.row(t);
    check_row(row, t);
    for (std::size_t k = 0; k < terms.size(); ++k) terms[k] = log_w[k] - row[k];
    total -= log_sum_exp(terms);
  }
  return total;
}

double switch_distribution_codelength(LossView losses, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error("switch distribution kappa must be in (0, 1)");
  const auto strategy = SwitchingStrategy::switch_distribution(losses.n_experts, kappa);
  return forward_codelength(losses, strategy, {.keep_posteriors = false}).total_nats;
}

std::vector<double> regret_vs_comparator(const CodelengthResult& result,
                                         std::span<const double> comparator_per_step_loss) {
  const auto& own = result.trace.per_step_marginal_loss;
  if (own.size() != comparator_per_step_loss.size()) {
    std::ostringstream os;
    os << "comparator has " << comparator_per_step_loss.size() << " steps, result has "
       << own.size();
    throw Error(os.str());
  }
  std::vector<double> out(own.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < own.size(); ++t) {
    acc += own[t] - comparator_per_step_loss[t];
    out[t] = acc;
  }
  return out;
}

std::size_t most_probable_expert(std::span<const double> time_averaged_posterior) {
  if (time_averaged_posterior.empty()) throw Error("empty posterior");
  std::size_t best = 0;
  for (std::size_t k = 1; k < time_averaged_posterior.size(); ++k) {
    if (time_averaged_posterior[k] > time_averaged_posterior[best]) best = k;
  }
  return best;
}

namespace {

struct Best {
  double value = kInf;
  std::size_t index = 0;
};

// Lowest and second-lowest entries; ties resolve to the lower index.
std::pair<Best, Best> two_smallest(std::span<const double> values, std::size_t stride,
                                   std::size_t offset, std::size_t count) {
  Best first, second;
  for (std::size_t j = 0; j < count; ++j) {
    const double v = values[j * stride + offset];
    if (v < first.value) {
      second = first;
      first = {v, j};
    } else if (v < second.value) {
      second = {v, j};
    }
  }
  return {first, second};
}

HindsightPath viterbi_unlimited(LossView losses) {
  const std::size_t n = losses.n_steps;
  const std::size_t k = losses.n_experts;
  std::vector<double> cost(losses.row(0).begin(), losses.row(0).end());
  std::vector<double> next(k);
  std::vector<std::uint32_t> back(n * k);
  for (std::size_t j = 0; j < k; ++j) back[j] = static_cast<std::uint32_t>(j);
  for (std::size_t t = 1; t < n; ++t) {
    const auto [best, unused] = two_smallest(cost, 1, 0, k);
    (void)unused;
    const auto row = losses.row(t);
    for (std::size_t j = 0; j < k; ++j) {
      if (cost[j] <= best.value) {
        next[j] = cost[j] + row[j];
        back[t * k + j] = static_cast<std::uint32_t>(j);
      } else {
        next[j] = best.value + row[j];
        back[t * k + j] = static_cast<std::uint32_t>(best.index);
      }
    }
    cost.swap(next);
  }
  HindsightPath out;
  std::size_t end = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (cost[j] < cost[end]) end = j;
  }
  out.codelength = cost[end];
  out.path.resize(n);
  std::size_t cur = end;
  for (std::size_t t = n; t-- > 0;) {
    out.path[t] = cur;
    const std::size_t prev = back[t * k + cur];
    if (t > 0 && prev != cur) ++out.switches;
    cur = prev;
  }
  return out;
}

}  // namespace

HindsightPath hindsight_best_path(LossView losses, std::optional<std::size_t> max_switches) {
  if (losses.n_steps == 0 || losses.n_experts == 0) throw Error("empty loss table");
  for (std::size_t t = 0; t < losses.n_steps; ++t) check_row(losses.row(t), t);
  const std::size_t n = losses.n_steps;
  const std::size_t k = losses.n_experts;
  if (!max_switches || *max_switches + 1 >= n) return viterbi_unlimited(losses);

  const std::size_t levels = *max_switches + 1;
  if (static_cast<double>(n) * static_cast<double>(k) * static_cast<double>(levels) > 4e8) {
    throw Error("hindsight search too large (N * K * (switches + 1) > 4e8)");
  }
  // cost[j * levels + s]: best prefix cost ending at expert j after s switches.
  std::vector<double> cost(k * levels, kInf), next(k * levels);
  std::vector<std::uint32_t> back(n * k * levels);
  for (std::size_t j = 0; j < k; ++j) {
    cost[j * levels] = losses.at(0, j);
    back[j * levels] = static_cast<std::uint32_t>(j);
  }
  for (std::size_t t = 1; t < n; ++t) {
    const auto row = losses.row(t);
    for (std::size_t s = 0; s < levels; ++s) {
      Best first, second;
      if (s > 0) std::tie(first, second) = two_smallest(cost, levels, s - 1, k);
      for (std::size_t j = 0; j < k; ++j) {
        const double stay = cost[j * levels + s];
        const Best& sw = first.index != j ? first : second;
        std::uint32_t from = static_cast<std::uint32_t>(j);
        double best = stay;
        if (s > 0 && sw.value < stay) {
          best = sw.value;
          from = static_cast<std::uint32_t>(sw.index);
        }
        next[j * levels + s] = best + row[j];
        back[(t * k + j) * levels + s] = from;
      }
    }
    cost.swap(next);
  }
  std::size_t end_j = 0, end_s = 0;
  double end_cost = kInf;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t s = 0; s < levels; ++s) {
      if (cost[j * levels + s] < end_cost) {
        end_cost = cost[j * levels + s];
        end_j = j;
        end_s = s;
      }
    }
  }
  HindsightPath out;
  out.codelength = end_cost;
  out.switches = end_s;
  out.path.resize(n);
  std::size_t cur = end_j, level = end_s;
  for (std::size_t t = n; t-- > 0;) {
    out.path[t] = cur;
    const std::size_t prev = back[(t * k + cur) * levels + level];
    if (t > 0 && prev != cur) --level;
    cur = prev;
  }
  return out;
}

}  // namespace pqmdl
