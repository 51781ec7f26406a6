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

#include <cmath>
#include <random>

#include "doctest.h"
#include "pqmdl/io.hpp"
#include "pqmdl/ranking.hpp"

using namespace pqmdl;

TEST_CASE("mid-ranks") {
  CHECK(mid_ranks({0.3, 0.7}, Orientation::kLowerIsBetter) == std::vector<double>{1, 2});
  CHECK(mid_ranks({0.3, 0.7}, Orientation::kHigherIsBetter) == std::vector<double>{2, 1});
  CHECK(mid_ranks({1, 1, 1, 1}, Orientation::kLowerIsBetter) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
  CHECK(mid_ranks({2, 1, 2, 0}, Orientation::kLowerIsBetter) == std::vector<double>{3.5, 2, 3.5, 1});
}

TEST_CASE("average rank on a two-representation table") {
  ScoreTable t;
  t.dataset_names = {"a", "b", "c"};
  t.representation_names = {"x", "y"};
  t.scores = {0.1, 0.2, 0.3, 0.2, 0.5, 0.5};
  const auto r = average_rank(t);
  CHECK(r[0] == doctest::Approx(4.5 / 3.0));
  CHECK(r[1] == doctest::Approx(4.5 / 3.0));
}

TEST_CASE("mid-ranks sum to R(R+1)/2 and ignore monotone transforms (property)") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
    std::vector<double> row(r);
    // Few distinct values so ties are common.
    for (double& v : row) v = std::uniform_int_distribution<int>(0, 3)(rng) * 0.25;
    const auto ranks = mid_ranks(row, Orientation::kLowerIsBetter);
    double sum = 0.0;
    for (double v : ranks) sum += v;
    CHECK(sum == doctest::Approx(r * (r + 1) / 2.0));
    std::vector<double> transformed(r);
    for (std::size_t i = 0; i < r; ++i) transformed[i] = std::exp(3.0 * row[i]) + 1.0;
    CHECK(mid_ranks(transformed, Orientation::kLowerIsBetter) == ranks);
    std::vector<double> negated(r);
    for (std::size_t i = 0; i < r; ++i) negated[i] = -row[i];
    CHECK(mid_ranks(negated, Orientation::kHigherIsBetter) == ranks);
  }
}

TEST_CASE("Nemenyi critical differences") {
  CHECK(nemenyi_critical_difference(6, 19, 3.12) == doctest::Approx(1.894).epsilon(5e-4));
  CHECK(nemenyi_critical_difference(12, 19, 3.12) == doctest::Approx(3.65).epsilon(2e-3));
  CHECK(nemenyi_critical_difference(2, 6, 3.12) == doctest::Approx(1.2738).epsilon(1e-4));
  CHECK_THROWS_AS(nemenyi_critical_difference(1, 19, 3.12), Error);
  CHECK_THROWS_AS(nemenyi_critical_difference(6, 0, 3.12), Error);
  CHECK_THROWS_AS(nemenyi_critical_difference(6, 19, 0.0), Error);
}

TEST_CASE("Nemenyi q table") {
  CHECK(nemenyi_q(0.05, 2) == doctest::Approx(1.960));
  CHECK(nemenyi_q(0.05, 6) == doctest::Approx(2.850));
  CHECK(nemenyi_q(0.10, 6) == doctest::Approx(2.589));
  CHECK(nemenyi_q(0.10, 10) == doctest::Approx(2.920));
  for (std::size_t r = 3; r <= 10; ++r) CHECK(nemenyi_q(0.05, r) > nemenyi_q(0.05, r - 1));
  CHECK_THROWS_AS(nemenyi_q(0.05, 11), Error);
  CHECK_THROWS_AS(nemenyi_q(0.01, 4), Error);
}

TEST_CASE("significance at the published average ranks") {
  RankSummary s;
  s.representation_names = {"DINO", "BYOL", "MAE", "ViT-SUP", "SimCLR", "RN50-SUP"};
  s.average_ranks = {1.89, 2.53, 3.79, 4.16, 4.21, 4.42};
  s.critical_difference = nemenyi_critical_difference(6, 19, 3.12);
  const auto sig = significance_matrix(s);
  CHECK(sig[0][5]);
  CHECK(sig[5][0]);
  CHECK(sig[0][2]);
  CHECK_FALSE(sig[0][1]);
  CHECK_FALSE(sig[2][5]);
  for (std::size_t i = 0; i < 6; ++i) CHECK_FALSE(sig[i][i]);
}

TEST_CASE("identical columns are never significantly different") {
  ScoreTable t;
  t.dataset_names = {"a", "b", "c", "d"};
  t.representation_names = {"x", "y", "z"};
  t.scores = {1, 1, 1, 2, 2, 2, 0.5, 0.5, 0.5, 3, 3, 3};
  const auto s = summarize_ranks(t, 3.12, 0.1);
  for (double r : s.average_ranks) CHECK(r == 2.0);
  for (const auto& row : significance_matrix(s))
    for (bool b : row) CHECK_FALSE(b);
}

TEST_CASE("table validation") {
  ScoreTable t;
  t.dataset_names = {"a"};
  t.representation_names = {"x"};
  t.scores = {1.0};
  CHECK_THROWS_AS(t.validate(), Error);
  t.representation_names = {"x", "y"};
  t.scores = {1.0, NAN};
  CHECK_THROWS_AS(t.validate(), Error);
  t.scores = {1.0};
  CHECK_THROWS_AS(t.validate(), Error);
  CHECK_THROWS_AS(parse_orientation("sideways"), Error);
  CHECK(parse_orientation("higher") == Orientation::kHigherIsBetter);
}

TEST_CASE("codelength table ordering") {
  const auto t = read_score_table(PQMDL_TEST_DATA_DIR "/vtab_objectives_codelength.csv", Orientation::kLowerIsBetter);
  CHECK(t.n_datasets() == 19);
  CHECK(t.n_representations() == 6);
  const auto s = summarize_ranks(t, 3.12, 0.1);
  CHECK(s.critical_difference == doctest::Approx(1.894).epsilon(5e-4));
  // DINO best, BYOL second.
  const auto& r = s.average_ranks;
  CHECK(r[4] < r[2]);
  for (std::size_t i : {0u, 1u, 3u, 5u}) CHECK(r[2] < r[i]);
}
