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

#include "pqmdl/report.hpp"

#include <algorithm>
#include <sstream>

namespace pqmdl {
namespace {

using nlohmann::json;

std::vector<double> cumulative(const std::vector<double>& per_step) {
  std::vector<double> out(per_step.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < per_step.size(); ++t) out[t] = acc += per_step[t];
  return out;
}

// min_k sum_{s <= t} L_s^k for every t.
std::vector<double> best_expert_cumulative(const LossMatrix& losses) {
  const std::size_t k = losses.n_experts();
  std::vector<double> acc(k, 0.0);
  std::vector<double> out(losses.n_steps());
  for (std::size_t t = 0; t < losses.n_steps(); ++t) {
    for (std::size_t j = 0; j < k; ++j) acc[j] += losses.at(t, j);
    out[t] = *std::min_element(acc.begin(), acc.end());
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ostringstream precise_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

}  // namespace

std::string expert_family(const std::string& name) {
  std::string head = name.substr(0, name.find('/'));
  // "mlp2x16" belongs to family "mlp2".
  if (head.rfind("mlp", 0) == 0) {
    const auto x = head.find('x', 3);
    if (x != std::string::npos) head.resize(x);
  }
  return head;
}

std::vector<std::pair<std::string, double>> family_posterior(
    const std::vector<double>& time_averaged_posterior, const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string fam = expert_family(names[k]);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == fam; });
    if (it == out.end()) {
      out.emplace_back(fam, time_averaged_posterior[k]);
    } else {
      it->second += time_averaged_posterior[k];
    }
  }
  return out;
}

json posterior_summary(const std::vector<double>& time_averaged_posterior,
                       const std::vector<std::string>& names) {
  json j;
  json experts = json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    experts.push_back({{"name", names[k]}, {"mass", time_averaged_posterior[k]}});
  }
  j["time_averaged"] = experts;
  const std::size_t best = most_probable_expert(time_averaged_posterior);
  j["most_probable_expert"] = {
      {"index", best}, {"name", names[best]}, {"mass", time_averaged_posterior[best]}};
  const auto fams = family_posterior(time_averaged_posterior, names);
  json fam_json = json::array();
  std::size_t best_fam = 0;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    fam_json.push_back({{"family", fams[i].first}, {"mass", fams[i].second}});
    if (fams[i].second > fams[best_fam].second) best_fam = i;
  }
  j["family_posterior"] = fam_json;
  j["most_probable_family"] = {{"family", fams[best_fam].first}, {"mass", fams[best_fam].second}};
  return j;
}

json regret_vs_best_expert(const CodelengthResult& result, const LossMatrix& losses,
                           std::size_t per_decade) {
  const auto mix = cumulative(result.trace.per_step_marginal_loss);
  const auto best = best_expert_cumulative(losses);
  json samples = json::array();
  if (mix.empty()) return samples;
  for (std::size_t n : log_grid(mix.size(), per_decade)) {
    samples.push_back({{"n", n}, {"regret", mix[n - 1] - best[n - 1]}});
  }
  return samples;
}

json codelength_section(const CodelengthResult& result, const LossMatrix& losses) {
  const double n = static_cast<double>(losses.n_steps());
  json j;
  j["strategy"] = result.strategy.descriptor();
  j["total_nats"] = result.total_nats;
  j["nats_per_example"] = result.total_nats / n;
  j["posterior"] = posterior_summary(result.time_averaged_posterior, losses.expert_names());
  j["regret_vs_best_expert"] = regret_vs_best_expert(result, losses);
  return j;
}

void attach_regret_vs_baseline(json& section, const CodelengthResult& result,
                               const CodelengthResult& baseline, std::size_t per_decade) {
  const auto a = cumulative(result.trace.per_step_marginal_loss);
  const auto b = cumulative(baseline.trace.per_step_marginal_loss);
  if (a.size() != b.size()) throw Error("baseline has a different number of steps");
  json samples = json::array();
  if (!a.empty()) {
    for (std::size_t n : log_grid(a.size(), per_decade)) {
      samples.push_back({{"n", n}, {"regret", a[n - 1] - b[n - 1]}});
    }
  }
  section["regret_vs_fixed_share"] = {{"baseline", baseline.strategy.descriptor()},
                                      {"total", result.total_nats - baseline.total_nats},
                                      {"samples", samples}};
}

std::string posterior_csv(const PosteriorTrace& trace, const std::vector<std::string>& names) {
  auto os = precise_stream();
  os << "step";
  for (const auto& n : names) os << ',' << csv_escape(n);
  os << '\n';
  if (trace.posteriors.size() != trace.n_steps * trace.n_experts) {
    throw Error("posterior trace was not recorded");
  }
  for (std::size_t t = 0; t < trace.n_steps; ++t) {
    os << t + 1;
    for (double p : trace.row(t)) os << ',' << p;
    os << '\n';
  }
  return os.str();
}

std::string codelength_curves_csv(const std::vector<CodelengthResult>& results,
                                  const LossMatrix& losses) {
  auto os = precise_stream();
  os << "strategy,step,cumulative_nats,regret_vs_best_expert\n";
  const auto best = best_expert_cumulative(losses);
  for (const auto& r : results) {
    const auto mix = cumulative(r.trace.per_step_marginal_loss);
    const std::string name = csv_escape(r.strategy.descriptor());
    for (std::size_t t = 0; t < mix.size(); ++t) {
      os << name << ',' << t + 1 << ',' << mix[t] << ',' << mix[t] - best[t] << '\n';
    }
  }
  return os.str();
}

json regret_curve_json(const RegretCurve& curve) {
  json samples = json::array();
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    samples.push_back({{"n", curve.grid[i]},
                       {"mean_regret", curve.mean_regret[i]},
                       {"stderr", curve.stderr_regret[i]}});
  }
  return {{"samples", samples},
          {"slope", curve.slope},
          {"slope_stderr", curve.slope_stderr},
          {"intercept", curve.intercept},
          {"final_regret_per_step", curve.final_regret_per_step},
          {"constant_regret", curve.constant_regret},
          {"comparator_switches", curve.comparator_switches}};
}

std::string regret_curve_csv(const RegretCurve& curve) {
  auto os = precise_stream();
  os << "n,mean_regret,stderr\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    os << curve.grid[i] << ',' << curve.mean_regret[i] << ',' << curve.stderr_regret[i] << '\n';
  }
  return os.str();
}

json rank_report(const RankSummary& summary) {
  json ranks = json::array();
  std::vector<std::size_t> order(summary.average_ranks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return summary.average_ranks[a] < summary.average_ranks[b];
  });
  for (std::size_t i : order) {
    ranks.push_back({{"representation", summary.representation_names[i]},
                     {"average_rank", summary.average_ranks[i]}});
  }
  const auto sig = significance_matrix(summary);
  json matrix = json::array();
  for (const auto& row : sig) {
    json r = json::array();
    for (bool b : row) r.push_back(b);
    matrix.push_back(r);
  }
  return {{"average_ranks", ranks},
          {"critical_difference", summary.critical_difference},
          {"q", summary.q_value},
          {"gamma", summary.gamma},
          {"n_datasets", summary.n_datasets},
          {"representations", summary.representation_names},
          {"significant", matrix}};
}

}  // namespace pqmdl
