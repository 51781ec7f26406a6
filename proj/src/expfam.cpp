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

#include "pqmdl/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pqmdl {
namespace {

double gaussian_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

std::size_t outcome_index(const ExpFamSpec& spec, double x) {
  const int c = spec.alphabet_size();
  if (!(x >= 0.0) || x >= c || x != std::floor(x)) {
    std::ostringstream os;
    os << "observation " << x << " is outside the alphabet [0, " << c << ")";
    throw Error(os.str());
  }
  return static_cast<std::size_t>(x);
}

}  // namespace

void ExpFamSpec::validate() const {
  switch (family) {
    case Family::kBernoulli:
    case Family::kCategorical:
      if (alphabet_size() < 2) throw Error("categorical expert needs at least 2 categories");
      if (!(smoothing > 0.0)) throw Error("smoothing pseudo-count must be > 0");
      break;
    case Family::kGaussianKnownVariance:
      if (!(variance > 0.0)) throw Error("Gaussian variance must be > 0");
      if (!std::isfinite(prior_mean)) throw Error("Gaussian prior mean must be finite");
      break;
  }
}

int ExpFamSpec::alphabet_size() const {
  return family == Family::kBernoulli ? 2 : family == Family::kCategorical ? n_categories : 0;
}

std::string ExpFamSpec::describe() const {
  if (!name.empty()) return name;
  std::ostringstream os;
  switch (family) {
    case Family::kBernoulli:
      os << "bernoulli(gamma=" << smoothing << ")";
      break;
    case Family::kCategorical:
      os << "categorical(C=" << n_categories << ",gamma=" << smoothing << ")";
      break;
    case Family::kGaussianKnownVariance:
      os << "gaussian(var=" << variance << ",mu0=" << prior_mean << ")";
      break;
  }
  return os.str();
}

ExpFamExpert::ExpFamExpert(ExpFamSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  counts_.assign(static_cast<std::size_t>(spec_.alphabet_size()), 0);
}

double ExpFamExpert::predictive_log_prob(double x) const {
  if (spec_.family == Family::kGaussianKnownVariance) {
    const double mean = (sum_ + spec_.prior_mean) / static_cast<double>(t_ + 1);
    return gaussian_log_density(x, mean, spec_.variance);
  }
  const std::size_t c = outcome_index(spec_, x);
  const double num = static_cast<double>(counts_[c]) + spec_.smoothing;
  const double den = static_cast<double>(t_) + static_cast<double>(counts_.size()) * spec_.smoothing;
  return std::log(num / den);
}

void ExpFamExpert::observe(double x) {
  if (spec_.family == Family::kGaussianKnownVariance) {
    sum_ += x;
  } else {
    ++counts_[outcome_index(spec_, x)];
  }
  ++t_;
}

std::vector<double> plugin_losses(const ExpFamSpec& spec, std::span<const double> data) {
  ExpFamExpert expert(spec);
  std::vector<double> out(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    out[t] = -expert.predictive_log_prob(data[t]);
    expert.observe(data[t]);
  }
  return out;
}

std::vector<double> batch_fit_losses(const ExpFamSpec& spec, std::span<const double> data) {
  spec.validate();
  if (data.empty()) throw Error("empty sequence");
  std::vector<double> out(data.size());
  const double n = static_cast<double>(data.size());
  if (spec.family == Family::kGaussianKnownVariance) {
    double sum = 0.0;
    for (double x : data) sum += x;
    const double mean = sum / n;
    for (std::size_t t = 0; t < data.size(); ++t) {
      out[t] = -gaussian_log_density(data[t], mean, spec.variance);
    }
    return out;
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(spec.alphabet_size()), 0);
  for (double x : data) ++counts[outcome_index(spec, x)];
  std::vector<double> cost(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    cost[c] = counts[c] ? -std::log(static_cast<double>(counts[c]) / n) : 0.0;
  }
  for (std::size_t t = 0; t < data.size(); ++t) out[t] = cost[static_cast<std::size_t>(data[t])];
  return out;
}

HindsightPath hindsight_best_codelength(std::span<const double> data,
                                        const std::vector<ExpFamSpec>& experts,
                                        std::optional<std::size_t> max_switches) {
  if (experts.empty()) throw Error("no experts");
  const std::size_t n = data.size();
  const std::size_t k = experts.size();
  if (max_switches && static_cast<double>(n) * static_cast<double>(k) *
                              static_cast<double>(*max_switches + 1) >
                          4e8) {
    throw Error("hindsight search too large (N * K * (switches + 1) > 4e8)");
  }
  std::vector<double> table(n * k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = batch_fit_losses(experts[j], data);
    for (std::size_t t = 0; t < n; ++t) table[t * k + j] = col[t];
  }
  return hindsight_best_path(LossView{table, n, k}, max_switches);
}

void RegretExperiment::validate() const {
  if (n_trials < 1) throw Error("n_trials must be ≥ 1");
  if (horizon < 1) throw Error("horizon must be >= 1");
  if (source_family == Family::kCategorical) {
    throw Error("sources are Bernoulli or Gaussian");
  }
  if (source_family == Family::kGaussianKnownVariance && !(source_variance >= 0.0)) {
    throw Error("source variance must be >= 0");
  }
  if (segments.empty()) throw Error("source needs at least one segment");
  if (segments.front().start != 1) throw Error("first segment must start at 1");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start < 1 || s.start > horizon) throw Error("segment start outside [1, horizon]");
    if (i > 0 && s.start <= segments[i - 1].start) {
      throw Error("segment boundaries must be strictly increasing");
    }
    if (source_family == Family::kBernoulli && !(s.parameter >= 0.0 && s.parameter <= 1.0)) {
      throw Error("Bernoulli source parameter must be in [0, 1]");
    }
  }
  if (experts.empty()) throw Error("experiment needs at least one expert");
  for (const auto& e : experts) {
    e.validate();
    const bool discrete_source = source_family == Family::kBernoulli;
    const bool discrete_expert = e.family != Family::kGaussianKnownVariance;
    if (discrete_source != discrete_expert) {
      throw Error("expert '" + e.describe() + "' does not match the source domain");
    }
  }
  if (strategy.n_experts != experts.size()) {
    throw Error("strategy expert count does not match the experiment's experts");
  }
  strategy.validate();
  if (grid_per_decade < 1) throw Error("grid_per_decade must be >= 1");
}

std::size_t RegretExperiment::comparator_switches() const {
  if (comparator_max_switches) return *comparator_max_switches;
  switch (strategy.kind) {
    case SwitchingStrategy::Kind::kFixedShareDecreasing:
      return static_cast<std::size_t>(strategy.m - 1);
    case SwitchingStrategy::Kind::kBayesianMixture:
      return 0;
    default:
      return segments.size() - 1;
  }
}

std::vector<double> sample_source(const RegretExperiment& exp, std::mt19937_64& rng) {
  std::vector<double> out(exp.horizon);
  std::size_t seg = 0;
  const double sd = std::sqrt(exp.source_variance);
  for (std::size_t t = 0; t < exp.horizon; ++t) {
    while (seg + 1 < exp.segments.size() && exp.segments[seg + 1].start <= t + 1) ++seg;
    const double param = exp.segments[seg].parameter;
    if (exp.source_family == Family::kBernoulli) {
      out[t] = std::bernoulli_distribution(param)(rng) ? 1.0 : 0.0;
    } else {
      out[t] = sd > 0.0 ? std::normal_distribution<double>(param, sd)(rng) : param;
    }
  }
  return out;
}

std::vector<std::size_t> log_grid(std::size_t horizon, std::size_t per_decade) {
  std::vector<std::size_t> grid;
  const std::size_t first = std::min<std::size_t>(10, horizon);
  for (std::size_t i = per_decade;; ++i) {
    const double v = std::pow(10.0, static_cast<double>(i) / static_cast<double>(per_decade));
    const auto n = static_cast<std::size_t>(std::llround(v));
    if (n >= horizon) break;
    if (n >= first && (grid.empty() || n > grid.back())) grid.push_back(n);
  }
  if (grid.empty() || grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("line fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error("line fit needs distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

RegretCurve run_regret_experiment(const RegretExperiment& exp) {
  exp.validate();
  RegretCurve curve;
  curve.grid = log_grid(exp.horizon, exp.grid_per_decade);
  curve.comparator_switches = exp.comparator_switches();
  const std::size_t g = curve.grid.size();
  const std::size_t k = exp.experts.size();

  // Fit over the final decade; fall back to the last two points.
  std::vector<double> fit_x;
  std::size_t fit_from = g;
  for (std::size_t i = 0; i < g; ++i) {
    if (curve.grid[i] * 10 >= exp.horizon) {
      fit_from = i;
      break;
    }
  }
  if (g - fit_from < 2) fit_from = g >= 2 ? g - 2 : 0;
  for (std::size_t i = fit_from; i < g; ++i) {
    fit_x.push_back(std::log(static_cast<double>(curve.grid[i])));
  }

  std::vector<double> sum(g, 0.0), sum_sq(g, 0.0);
  std::vector<double> slopes;
  slopes.reserve(exp.n_trials);
  std::vector<double> table;
  for (std::size_t trial = 0; trial < exp.n_trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(exp.seed), static_cast<std::uint32_t>(exp.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    const auto data = sample_source(exp, rng);

    table.assign(exp.horizon * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto col = plugin_losses(exp.experts[j], data);
      for (std::size_t t = 0; t < exp.horizon; ++t) table[t * k + j] = col[t];
    }
    ForwardFilter filter(exp.strategy);
    std::vector<double> regret(g);
    std::size_t next = 0;
    for (std::size_t t = 0; t < exp.horizon && next < g; ++t) {
      filter.predict();
      filter.absorb(std::span<const double>(table).subspan(t * k, k));
      if (t + 1 == curve.grid[next]) {
        const auto prefix = std::span<const double>(data).first(t + 1);
        const auto best = hindsight_best_codelength(prefix, exp.experts, curve.comparator_switches);
        regret[next] = filter.total_nats() - best.codelength;
        ++next;
      }
    }
    for (std::size_t i = 0; i < g; ++i) {
      sum[i] += regret[i];
      sum_sq[i] += regret[i] * regret[i];
    }
    const auto fit_y = std::span<const double>(regret).subspan(fit_from);
    slopes.push_back(fit_x.size() >= 2 ? fit_line(fit_x, fit_y).first : 0.0);
  }

  const double trials = static_cast<double>(exp.n_trials);
  curve.mean_regret.resize(g);
  curve.stderr_regret.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    const double mean = sum[i] / trials;
    curve.mean_regret[i] = mean;
    const double var = exp.n_trials > 1 ? std::max(0.0, (sum_sq[i] - trials * mean * mean) / (trials - 1)) : 0.0;
    curve.stderr_regret[i] = std::sqrt(var / trials);
  }
  if (fit_x.size() >= 2) {
    const auto [slope, intercept] =
        fit_line(fit_x, std::span<const double>(curve.mean_regret).subspan(fit_from));
    curve.slope = slope;
    curve.intercept = intercept;
  }
  if (exp.n_trials > 1) {
    double m = 0.0;
    for (double s : slopes) m += s;
    m /= trials;
    double v = 0.0;
    for (double s : slopes) v += (s - m) * (s - m);
    curve.slope_stderr = std::sqrt(v / (trials - 1) / trials);
  }
  curve.final_regret_per_step = curve.mean_regret.back() / static_cast<double>(exp.horizon);
  curve.constant_regret = std::abs(curve.slope) < kConstantRegretSlope;
  return curve;
}

}  // namespace pqmdl
