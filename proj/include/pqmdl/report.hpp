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

// JSON reports and CSV exports.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pqmdl/core.hpp"
#include "pqmdl/expfam.hpp"
#include "pqmdl/ranking.hpp"
#include "pqmdl/switching.hpp"

namespace pqmdl {

/// Expert family: the part of the name before the first '/', without an
/// "x<width>" suffix, e.g. "mlp2x16/lr=.." -> "mlp2".
std::string expert_family(const std::string& name);

/// Time-averaged posterior per expert and per family, plus the argmax entries.
nlohmann::json posterior_summary(const std::vector<double>& time_averaged_posterior,
                                 const std::vector<std::string>& names);

/// Per-family sums of the time-averaged posterior, in first-seen order.
std::vector<std::pair<std::string, double>> family_posterior(
    const std::vector<double>& time_averaged_posterior, const std::vector<std::string>& names);

/// Cumulative switching codelength minus the best single expert's cumulative
/// loss, sampled at log_grid(N, per_decade).
nlohmann::json regret_vs_best_expert(const CodelengthResult& result, const LossMatrix& losses,
                                     std::size_t per_decade = 10);

/// Section for one strategy: totals, per-example nats, posterior summary, regret samples.
nlohmann::json codelength_section(const CodelengthResult& result, const LossMatrix& losses);

/// Adds "regret_vs_fixed_share" to every section: cumulative difference to
/// `baseline` on the log grid and the final total difference.
void attach_regret_vs_baseline(nlohmann::json& section, const CodelengthResult& result,
                               const CodelengthResult& baseline, std::size_t per_decade = 10);

/// "step,<name 1>,...,<name K>" rows of p(xi_t = k | D_<t).
std::string posterior_csv(const PosteriorTrace& trace, const std::vector<std::string>& names);

/// "strategy,step,cumulative_nats,regret_vs_best_expert" rows for each strategy.
std::string codelength_curves_csv(const std::vector<CodelengthResult>& results,
                                  const LossMatrix& losses);

nlohmann::json regret_curve_json(const RegretCurve& curve);
std::string regret_curve_csv(const RegretCurve& curve);

nlohmann::json rank_report(const RankSummary& summary);

}  // namespace pqmdl
