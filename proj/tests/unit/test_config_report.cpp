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
#include <sstream>

#include "doctest.h"
#include "oracles/generators.hpp"
#include "pqmdl/config.hpp"
#include "pqmdl/report.hpp"

using namespace pqmdl;
using nlohmann::json;

TEST_CASE("strategy specs parse and round-trip through their descriptor") {
  for (const std::string text : {"fixed-share-dec:m=2", "fixed-share-const:alpha=0.01", "bayes",
                                 "elementwise", "switch:kappa=0.5"}) {
    const auto s = parse_strategy(text, 4);
    CHECK(s.n_experts == 4);
    const auto again = parse_strategy(s.descriptor(), 4);
    CHECK(again.kind == s.kind);
    CHECK(again.m == s.m);
    CHECK(again.alpha == s.alpha);
    CHECK(again.kappa == s.kappa);
  }
  CHECK(parse_strategy("fixed-share-dec:m=5", 3).m == 5);
  CHECK(parse_strategy_list("bayes,elementwise,fixed-share-dec:m=3", 2).size() == 3);
}

TEST_CASE("malformed strategy specs are rejected") {
  for (const std::string text : {"", "fixed-share", "fixed-share-dec:m=0", "fixed-share-dec:m=x",
                                 "fixed-share-const:alpha=1.5", "switch:kappa=1", "switch:rate=0.5",
                                 "bayes:m=2", "nonsense"}) {
    INFO(text);
    CHECK_THROWS_AS(parse_strategy(text, 3), Error);
  }
}

TEST_CASE("grid expansion order and width defaulting") {
  const auto grid = parse_grid(json::parse(R"({
    "architectures": ["linear", "mlp2", "mlp1x7", {"hidden_layers": 1, "hidden_width": 3}],
    "learning_rates": [0.001, 0.01],
    "weight_decays": [0, 0.1],
    "trainer": {"batch_size": 4, "n_streams": 2}
  })"));
  CHECK(grid.trainer.batch_size == 4);
  CHECK(grid.trainer.n_streams == 2);
  const auto pool = build_expert_pool(grid, 16, 5);
  REQUIRE(pool.size() == 4 * 2 * 2);
  CHECK(pool[0].arch.hidden_layers == 0);
  CHECK(pool[0].hyper.learning_rate == 0.001);
  CHECK(pool[0].hyper.weight_decay == 0.0);
  CHECK(pool[1].hyper.weight_decay == 0.1);
  CHECK(pool[2].hyper.learning_rate == 0.01);
  CHECK(pool[4].arch.hidden_layers == 2);
  CHECK(pool[4].arch.hidden_width == 16);
  CHECK(pool[8].arch.hidden_width == 7);
  CHECK(pool[12].arch.hidden_width == 3);
  for (const auto& e : pool) {
    CHECK(e.arch.input_dim == 16);
    CHECK(e.arch.n_classes == 5);
    CHECK(e.name == describe_expert(e.arch, e.hyper));
  }
  CHECK(expert_family(pool[0].name) == "linear");
  CHECK(expert_family(pool[4].name) == "mlp2");
}

TEST_CASE("grid errors") {
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"architectures": ["cnn"]})")), Error);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"architectures": ["mlp9"]})")), Error);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"learning_rates": []})")), Error);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"learning_rates": [-1]})")), Error);
  CHECK_THROWS_AS(load_grid("/nonexistent/grid.json"), Error);
  CHECK(build_expert_pool(load_grid(R"({"architectures": ["linear"]})"), 3, 2).size() == 1);
}

TEST_CASE("regret experiment specs") {
  const auto e = parse_regret_experiment(json::parse(R"({
    "source": {"family": "bernoulli", "segments": [{"start": 1, "parameter": 0.9}, {"start": 500, "parameter": 0.1}]},
    "horizon": 1000, "n_trials": 3, "seed": 9,
    "experts": [{"family": "bernoulli", "smoothing": 0.5}, {"family": "bernoulli", "smoothing": 1.0}],
    "strategy": "fixed-share-dec:m=2"
  })"));
  CHECK(e.horizon == 1000);
  CHECK(e.n_trials == 3);
  CHECK(e.seed == 9);
  CHECK(e.segments.size() == 2);
  CHECK(e.segments[1].start == 500);
  CHECK(e.experts[1].smoothing == 1.0);
  CHECK(e.strategy.n_experts == 2);
  CHECK(e.comparator_switches() == 1);
  CHECK_THROWS_WITH_AS(parse_regret_experiment(json::parse(R"({"n_trials": 0})")), "n_trials must be ≥ 1", Error);
  CHECK_THROWS_AS(parse_regret_experiment(json::parse(R"({"source": {"family": "poisson"}})")), Error);
}

TEST_CASE("codelength section") {
  gen::Rng rng(11);
  const std::size_t n = 300, k = 4;
  const auto values = gen::loss_matrix(rng, n, k, 2.0).values();
  const LossMatrix losses(n, {"linear/a", "linear/b", "mlp1/a", "mlp1/b"}, values);
  const auto result = forward_codelength(losses, SwitchingStrategy::fixed_share_decreasing(k, 2));
  const auto j = codelength_section(result, losses);
  CHECK(j["strategy"] == "fixed-share-dec:m=2");
  CHECK(std::abs(j["nats_per_example"].get<double>() - j["total_nats"].get<double>() / n) < 1e-12);
  const auto& fam = j["posterior"]["family_posterior"];
  REQUIRE(fam.size() == 2);
  CHECK(fam[0]["family"] == "linear");
  const double sum = fam[0]["mass"].get<double>() + fam[1]["mass"].get<double>();
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["regret_vs_best_expert"].back()["n"] == n);

  auto baseline = forward_codelength(losses, SwitchingStrategy::bayesian_mixture(k));
  auto section = codelength_section(baseline, losses);
  attach_regret_vs_baseline(section, baseline, result);
  CHECK(section["regret_vs_fixed_share"]["total"].get<double>() ==
        doctest::Approx(baseline.total_nats - result.total_nats).epsilon(1e-12));
}

TEST_CASE("CSV exports") {
  gen::Rng rng(12);
  const LossMatrix losses(5, {"a", "b"}, gen::loss_matrix(rng, 5, 2, 1.0).values());
  const auto r = forward_codelength(losses, SwitchingStrategy::bayesian_mixture(2));
  const auto csv = posterior_csv(r.trace, losses.expert_names());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,a,b");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  const auto curves = codelength_curves_csv({r, r}, losses);
  CHECK(curves.rfind("strategy,step,cumulative_nats,regret_vs_best_expert", 0) == 0);
}

TEST_CASE("rank report is sorted by average rank") {
  RankSummary s;
  s.representation_names = {"x", "y", "z"};
  s.average_ranks = {2.5, 1.0, 2.5};
  s.critical_difference = 1.2;
  s.q_value = 3.12;
  const auto j = rank_report(s);
  CHECK(j["average_ranks"][0]["representation"] == "y");
  CHECK(j["critical_difference"] == 1.2);
}
