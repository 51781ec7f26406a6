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

// Brute-force oracles over explicit expert paths, in 50-digit arithmetic.
// Priors are written from the process definitions, not from the library's
// transition matrices.

#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "pqmdl/core.hpp"
#include "pqmdl/switching.hpp"

namespace pqmdl::oracle {

using Big = boost::multiprecision::cpp_bin_float_50;
using Kind = SwitchingStrategy::Kind;

inline Big rate_at(const SwitchingStrategy& s, std::size_t t) {
  switch (s.kind) {
    case Kind::kFixedShareDecreasing: {
      Big r = Big(s.m - 1) / Big(t);
      return r > 1 ? Big(1) : r;
    }
    case Kind::kFixedShareConstant:
      return Big(s.alpha);
    case Kind::kBayesianMixture:
      return Big(0);
    case Kind::kElementwiseMixture:
      return Big(1);
    case Kind::kSwitchDistribution:
      return Big(s.kappa) / Big(t);
  }
  return Big(0);
}

inline Big prior_weight(const SwitchingStrategy& s, std::size_t k) {
  return boost::multiprecision::exp(Big(s.initial_log_prior[k]));
}

/// Rates, switch weights and initial weights of a strategy in 50 digits.
struct PriorTables {
  std::vector<Big> rate;  // rate[t] for 1-based t >= 2
  std::vector<Big> weight;
  std::vector<Big> initial;

  PriorTables(const SwitchingStrategy& s, std::size_t n) : rate(n + 1) {
    for (std::size_t t = 2; t <= n; ++t) rate[t] = rate_at(s, t);
    for (std::size_t k = 0; k < s.n_experts; ++k) {
      weight.push_back(Big(s.switch_weights[k]));
      initial.push_back(prior_weight(s, k));
    }
  }
};

/// p(xi_1, ..., xi_N) under the strategy; `path` holds 0-based experts.
inline Big path_prior(const SwitchingStrategy& s, const PriorTables& tab,
                      const std::vector<std::size_t>& path) {
  if (path.empty()) return Big(1);
  const Big& p1 = tab.initial[path[0]];
  if (s.kind != Kind::kSwitchDistribution) {
    Big p = p1;
    for (std::size_t i = 1; i < path.size(); ++i) {
      const Big& r = tab.rate[i + 1];
      p *= (path[i] == path[i - 1] ? 1 - r : Big(0)) + r * tab.weight[path[i]];
    }
    return p;
  }
  // Two-flag chain given the expert path: unstable may stay or redraw
  // (half the redraw mass lands in each flag), stable stays forever.
  Big unstable = p1 / 2;
  Big stable = p1 / 2;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Big& tau = tab.rate[i + 1];
    const bool same = path[i] == path[i - 1];
    const Big fresh = tau * tab.weight[path[i]] / 2;
    const Big next_unstable = unstable * ((same ? 1 - tau : Big(0)) + fresh);
    const Big next_stable = unstable * fresh + (same ? stable : Big(0));
    unstable = next_unstable;
    stable = next_stable;
  }
  return unstable + stable;
}

inline Big path_prior(const SwitchingStrategy& s, const std::vector<std::size_t>& path) {
  return path_prior(s, PriorTables(s, path.size()), path);
}

/// Calls fn(path) for every path in [0, k)^n.
template <typename Fn>
void for_each_path(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> path(n, 0);
  while (true) {
    fn(static_cast<const std::vector<std::size_t>&>(path));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++path[i] < k) break;
      path[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

inline std::size_t count_switches(const std::vector<std::size_t>& path) {
  std::size_t s = 0;
  for (std::size_t i = 1; i < path.size(); ++i) s += path[i] != path[i - 1];
  return s;
}

/// -log sum_paths p(path) exp(-sum_t L_t^{path_t}).
inline double enumerated_codelength(LossView losses, const SwitchingStrategy& s) {
  const PriorTables tab(s, losses.n_steps);
  std::vector<Big> likelihood(losses.n_steps * losses.n_experts);
  for (std::size_t i = 0; i < likelihood.size(); ++i) likelihood[i] = boost::multiprecision::exp(-Big(losses.data[i]));
  Big total = 0;
  for_each_path(losses.n_steps, losses.n_experts, [&](const std::vector<std::size_t>& path) {
    Big p = path_prior(s, tab, path);
    for (std::size_t t = 0; t < path.size(); ++t) p *= likelihood[t * losses.n_experts + path[t]];
    total += p;
  });
  return static_cast<double>(-boost::multiprecision::log(total));
}

/// Minimum path loss with at most `max_switches` switches, by enumeration.
inline double enumerated_hindsight(LossView losses, std::optional<std::size_t> max_switches) {
  double best = std::numeric_limits<double>::infinity();
  for_each_path(losses.n_steps, losses.n_experts, [&](const std::vector<std::size_t>& path) {
    if (max_switches && count_switches(path) > *max_switches) return;
    double loss = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) loss += losses.at(t, path[t]);
    best = std::min(best, loss);
  });
  return best;
}

}  // namespace pqmdl::oracle

namespace pqmdl::oracle {

/// min over paths of -log p(path) + sum_t L_t^{path_t}, and the path count.
inline std::pair<double, double> enumerated_map_path(LossView losses, const SwitchingStrategy& s) {
  double best = std::numeric_limits<double>::infinity();
  double count = 0;
  for_each_path(losses.n_steps, losses.n_experts, [&](const std::vector<std::size_t>& path) {
    const Big p = path_prior(s, path);
    count += 1;
    if (p == 0) return;
    double loss = static_cast<double>(-boost::multiprecision::log(p));
    for (std::size_t t = 0; t < path.size(); ++t) loss += losses.at(t, path[t]);
    best = std::min(best, loss);
  });
  return {best, count};
}

/// -log p(path) for fixed share with uniform weights given only the sorted
/// 1-based switch times (labels do not matter under uniform weights).
inline double fixed_share_switch_cost(const SwitchingStrategy& s, std::size_t n,
                                      const std::vector<std::size_t>& switch_times) {
  const Big k = Big(s.n_experts);
  Big cost = boost::multiprecision::log(k);
  std::size_t next = 0;
  for (std::size_t t = 2; t <= n; ++t) {
    const Big r = rate_at(s, t);
    if (next < switch_times.size() && switch_times[next] == t) {
      cost -= boost::multiprecision::log(r / k);
      ++next;
    } else {
      cost -= boost::multiprecision::log(1 - r + r / k);
    }
  }
  return static_cast<double>(cost);
}

}  // namespace pqmdl::oracle
