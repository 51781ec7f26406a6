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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "pqmdl/io.hpp"

using namespace pqmdl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pqmdl_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

const std::string kGrid =
    R"({"architectures": ["linear", "mlp1"], "learning_rates": [0.001, 0.01], "trainer": {"batch_size": 8, "n_streams": 2}})";

std::string make_features(const TempDir& dir, std::size_t n = 64) {
  const auto path = dir.file("x.pqsf");
  const auto r = cli({"make-synth", "--out", path, "--n", std::to_string(n), "--dim", "8", "--classes", "4"});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("help exits cleanly") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"stage2", "--help"}).code == 0);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"stage2"}).code == 2);
}

TEST_CASE("stage1 writes an N x K loss matrix") {
  TempDir dir;
  const auto features = make_features(dir);
  const auto losses = dir.file("l.pqlm");
  const auto r = cli({"stage1", "--features", features, "--grid", kGrid, "--out", losses});
  REQUIRE(r.code == 0);
  const auto m = read_loss_matrix_file(losses);
  CHECK(m.n_steps() == 64);
  CHECK(m.n_experts() == 4);
}

TEST_CASE("same seed gives byte-identical reports") {
  TempDir dir;
  const auto features = make_features(dir);
  for (const auto& seed : {"1", "2"}) {
    const auto a = dir.file(std::string("a") + seed + ".json");
    const auto b = dir.file(std::string("b") + seed + ".json");
    REQUIRE(cli({"--seed", seed, "online", "--features", features, "--grid", kGrid, "--out", a}).code == 0);
    REQUIRE(cli({"--seed", seed, "online", "--features", features, "--grid", kGrid, "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
  }
  CHECK(slurp(dir.file("a1.json")) != slurp(dir.file("a2.json")));
}

TEST_CASE("stage1 then stage2 matches online") {
  TempDir dir;
  const auto features = make_features(dir, 200);
  const auto losses = dir.file("l.pqlm");
  REQUIRE(cli({"stage1", "--features", features, "--grid", kGrid, "--out", losses}).code == 0);
  REQUIRE(cli({"stage2", "--losses", losses, "--out", dir.file("s2.json")}).code == 0);
  REQUIRE(cli({"online", "--features", features, "--grid", kGrid, "--out", dir.file("on.json")}).code == 0);
  const double a = read_json(dir.file("s2.json"))["result"]["total_nats"];
  const double b = read_json(dir.file("on.json"))["result"]["total_nats"];
  CHECK(std::abs(a - b) <= 1e-9);
}

TEST_CASE("missing inputs exit 2 and name the path") {
  TempDir dir;
  const auto missing = dir.file("nope.pqsf");
  const auto r = cli({"stage1", "--features", missing, "--grid", kGrid, "--out", dir.file("l.pqlm")});
  CHECK(r.code == 2);
  CHECK(r.err.find(missing) != std::string::npos);
  const auto s = cli({"stage2", "--losses", dir.file("nope.pqlm"), "--out", dir.file("o.json")});
  CHECK(s.code == 2);
  CHECK(s.err.find("nope.pqlm") != std::string::npos);
}

TEST_CASE("a single expert's codelength is its cumulative loss") {
  TempDir dir;
  std::vector<double> v{0.5, 1.25, 0.0, 3.0, 0.75};
  const auto path = dir.file("one.pqlm");
  write_loss_matrix_file(path, LossMatrix(5, {"only"}, v));
  for (const auto& s : {"bayes", "fixed-share-dec:m=2", "switch:kappa=0.5"}) {
    REQUIRE(cli({"stage2", "--losses", path, "--strategy", s, "--out", dir.file("o.json")}).code == 0);
    CHECK(read_json(dir.file("o.json"))["result"]["total_nats"].get<double>() == doctest::Approx(5.5).epsilon(1e-14));
  }
}

TEST_CASE("fixed share beats the Bayesian mixture across a regime shift, and the sweep reports each strategy") {
  TempDir dir;
  const std::size_t n = 400;
  std::vector<double> v;
  for (std::size_t t = 0; t < n; ++t) {
    const bool first = t < n / 2;
    v.push_back(first ? 0.1 : 2.0);
    v.push_back(first ? 2.0 : 0.1);
  }
  const auto path = dir.file("shift.pqlm");
  write_loss_matrix_file(path, LossMatrix(n, {"a", "b"}, v));
  const auto out = dir.file("o.json");
  const auto curves = dir.file("c.csv");
  const auto post = dir.file("p.csv");
  REQUIRE(cli({"stage2", "--losses", path, "--sweep", "bayes,elementwise,switch:kappa=0.5", "--out", out,
               "--curves", curves, "--posterior", post})
              .code == 0);
  const auto j = read_json(out);
  REQUIRE(j["sweep"].size() == 3);
  const double fs = j["result"]["total_nats"];
  const double bm = j["sweep"][0]["total_nats"];
  CHECK(fs < bm);
  CHECK(j["sweep"][0]["regret_vs_fixed_share"]["total"].get<double>() == doctest::Approx(bm - fs));
  CHECK(fs::file_size(curves) > 0);
  CHECK(fs::file_size(post) > 0);
}

TEST_CASE("malformed strategies exit 2") {
  TempDir dir;
  const auto path = dir.file("l.pqlm");
  write_loss_matrix_file(path, LossMatrix(1, {"a", "b"}, {0.1, 0.2}));
  const auto r = cli({"stage2", "--losses", path, "--strategy", "fixed-share-dec:m=0", "--out", dir.file("o.json")});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("synth-regret") {
  TempDir dir;
  const auto bad = dir.file("bad.json");
  write_text_file(bad, R"({"n_trials": 0})");
  const auto r = cli({"synth-regret", bad, "--out", dir.file("o.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find("n_trials must be ≥ 1") != std::string::npos);

  const auto spec = dir.file("det.json");
  write_text_file(spec, R"({"source": {"segments": [{"start": 1, "parameter": 1.0}]},
                            "horizon": 5000, "n_trials": 2,
                            "experts": [{"family": "bernoulli", "smoothing": 0.001}],
                            "strategy": "bayes"})");
  REQUIRE(cli({"synth-regret", "--spec", spec, "--out", dir.file("d.json"), "--curves", dir.file("d.csv")}).code == 0);
  CHECK(read_json(dir.file("d.json"))["curve"]["constant_regret"] == true);
}

TEST_CASE("rank") {
  TempDir dir;
  const auto ragged = dir.file("r.csv");
  write_text_file(ragged, "dataset,a,b\nd1,1,2\nd2,3\n");
  const auto r = cli({"rank", "--scores", ragged, "--out", dir.file("o.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find(ragged) != std::string::npos);

  const auto single = dir.file("s.csv");
  write_text_file(single, "dataset,a,b,c\nd1,0.3,0.1,0.2\n");
  REQUIRE(cli({"rank", "--scores", single, "--out", dir.file("s.json")}).code == 0);
  const auto s = read_json(dir.file("s.json"));
  CHECK(s["n_datasets"] == 1);
  CHECK(s["average_ranks"][0]["representation"] == "b");

  const auto same = dir.file("t.csv");
  write_text_file(same, "dataset,a,b\nd1,1,1\nd2,2,2\n");
  REQUIRE(cli({"rank", "--scores", same, "--gamma", "0.05", "--out", dir.file("t.json")}).code == 0);
  const auto t = read_json(dir.file("t.json"));
  CHECK(t["average_ranks"][0]["average_rank"] == 1.5);
  CHECK(t["average_ranks"][1]["average_rank"] == 1.5);
  CHECK(t["q"] == 1.960);
  CHECK(cli({"rank", "--scores", same, "--gamma", "0.05", "--q-gamma", "3", "--out", dir.file("t.json")}).code == 2);
}
