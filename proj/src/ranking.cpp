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

#include "pqmdl/ranking.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pqmdl/core.hpp"

namespace pqmdl {

Orientation parse_orientation(const std::string& text) {
  if (text == "lower") return Orientation::kLowerIsBetter;
  if (text == "higher") return Orientation::kHigherIsBetter;
  throw Error("orientation must be 'lower' or 'higher', got '" + text + "'");
}

void ScoreTable::validate() const {
  if (n_datasets() < 1) throw Error("score table needs at least one dataset");
  if (n_representations() < 2) throw Error("score table needs at least two representations");
  if (scores.size() != n_datasets() * n_representations()) {
    throw Error("score table shape does not match its names");
  }
  for (std::size_t d = 0; d < n_datasets(); ++d) {
    for (std::size_t r = 0; r < n_representations(); ++r) {
      if (std::isnan(at(d, r))) {
        std::ostringstream os;
        os << "NaN score for dataset '" << dataset_names[d] << "', representation '"
           << representation_names[r] << "'";
        throw Error(os.str());
      }
    }
  }
}

std::vector<double> mid_ranks(const std::vector<double>& row, Orientation orientation) {
  for (double v : row) {
    if (std::isnan(v)) throw Error("NaN score");
  }
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return orientation == Orientation::kLowerIsBetter ? row[a] < row[b] : row[a] > row[b];
  });
  std::vector<double> ranks(row.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && row[order[j + 1]] == row[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> average_rank(const ScoreTable& table) {
  table.validate();
  const std::size_t r = table.n_representations();
  std::vector<double> sum(r, 0.0);
  for (std::size_t d = 0; d < table.n_datasets(); ++d) {
    const std::vector<double> row(table.scores.begin() + static_cast<std::ptrdiff_t>(d * r),
                                  table.scores.begin() + static_cast<std::ptrdiff_t>((d + 1) * r));
    const auto ranks = mid_ranks(row, table.orientation);
    for (std::size_t j = 0; j < r; ++j) sum[j] += ranks[j];
  }
  for (double& s : sum) s /= static_cast<double>(table.n_datasets());
  return sum;
}

double nemenyi_critical_difference(std::size_t r, std::size_t n, double q) {
  if (r < 2) throw Error("Nemenyi test needs r >= 2");
  if (n < 1) throw Error("Nemenyi test needs n >= 1");
  if (!(q > 0.0)) throw Error("q must be > 0");
  const double rd = static_cast<double>(r);
  return q * std::sqrt(rd * (rd + 1.0) / (6.0 * static_cast<double>(n)));
}

double nemenyi_q(double gamma, std::size_t r) {
  static constexpr std::array<double, 9> q05 = {1.960, 2.344, 2.569, 2.728, 2.850,
                                                2.948, 3.031, 3.102, 3.164};
  static constexpr std::array<double, 9> q10 = {1.645, 2.052, 2.291, 2.460, 2.589,
                                                2.693, 2.780, 2.855, 2.920};
  if (r < 2 || r > 10) throw Error("built-in q table covers 2 <= r <= 10; pass q explicitly");
  if (std::abs(gamma - 0.05) < 1e-12) return q05[r - 2];
  if (std::abs(gamma - 0.10) < 1e-12) return q10[r - 2];
  throw Error("built-in q table covers gamma 0.05 and 0.10; pass q explicitly");
}

RankSummary summarize_ranks(const ScoreTable& table, double q, double gamma) {
  RankSummary s;
  s.representation_names = table.representation_names;
  s.average_ranks = average_rank(table);
  s.n_datasets = table.n_datasets();
  s.gamma = gamma;
  s.q_value = q;
  s.critical_difference = nemenyi_critical_difference(table.n_representations(), s.n_datasets, q);
  return s;
}

std::vector<std::vector<bool>> significance_matrix(const RankSummary& summary) {
  const std::size_t r = summary.average_ranks.size();
  std::vector<std::vector<bool>> out(r, std::vector<bool>(r, false));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i + 1; j < r; ++j) {
      const bool sig = std::abs(summary.average_ranks[i] - summary.average_ranks[j]) >=
                       summary.critical_difference;
      out[i][j] = out[j][i] = sig;
    }
  }
  return out;
}

}  // namespace pqmdl
