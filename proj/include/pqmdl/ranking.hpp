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

// Average ranks over datasets and the Nemenyi post-hoc test.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pqmdl {

enum class Orientation { kLowerIsBetter, kHigherIsBetter };

Orientation parse_orientation(const std::string& text);  // "lower" | "higher"

/// D datasets (rows) by R representations (columns).
struct ScoreTable {
  std::vector<std::string> dataset_names;
  std::vector<std::string> representation_names;
  std::vector<double> scores;  // row-major D x R
  Orientation orientation = Orientation::kLowerIsBetter;

  std::size_t n_datasets() const { return dataset_names.size(); }
  std::size_t n_representations() const { return representation_names.size(); }
  double at(std::size_t d, std::size_t r) const { return scores[d * n_representations() + r]; }
  void validate() const;
};

/// Ranks of one row, 1 = best, ties share the mean of their positions.
std::vector<double> mid_ranks(const std::vector<double>& row, Orientation orientation);

/// Column means of per-dataset mid-ranks.
std::vector<double> average_rank(const ScoreTable& table);

/// q * sqrt(r (r + 1) / (6 n)).
double nemenyi_critical_difference(std::size_t r, std::size_t n, double q);

/// Two-tailed Nemenyi q for gamma in {0.05, 0.10} and 2 <= r <= 10
/// (studentized range quantile divided by sqrt 2). Throws outside the table.
double nemenyi_q(double gamma, std::size_t r);

struct RankSummary {
  std::vector<std::string> representation_names;
  std::vector<double> average_ranks;
  double critical_difference = 0.0;
  double gamma = 0.1;
  double q_value = 0.0;
  std::size_t n_datasets = 0;
};

RankSummary summarize_ranks(const ScoreTable& table, double q, double gamma);

/// Entry (i, j) true iff |rank_i - rank_j| >= critical difference.
std::vector<std::vector<bool>> significance_matrix(const RankSummary& summary);

}  // namespace pqmdl
