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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "pqmdl/io.hpp"

using namespace pqmdl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pqmdl_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

FeatureSequence random_sequence(std::size_t n, std::size_t d, std::uint32_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  FeatureSequence s;
  s.dim = d;
  s.n_classes = c;
  s.features.resize(n * d);
  for (float& v : s.features) v = g(rng);
  s.labels.resize(n);
  for (auto& y : s.labels) y = static_cast<std::uint32_t>(rng() % c);
  return s;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <class F>
std::string error_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("feature file round trip is bit-exact") {
  TempDir dir;
  auto s = random_sequence(37, 5, 3, 1);
  s.name = "demo";
  const auto path = dir.file("x.pqsf");
  write_feature_file(path, s, "unit test");
  CHECK(fs::file_size(path) == kFeatureHeaderBytes + 37 * 5 * 4 + 37 * 4);
  const auto r = read_feature_file(path);
  CHECK(r.dim == 5);
  CHECK(r.n_classes == 3);
  CHECK(r.labels == s.labels);
  CHECK(std::memcmp(r.features.data(), s.features.data(), s.features.size() * sizeof(float)) == 0);
  CHECK(r.name == "demo");
  CHECK(fs::exists(path + ".json"));
}

TEST_CASE("feature file name defaults to the stem without a sidecar") {
  TempDir dir;
  const auto path = dir.file("plain.pqsf");
  write_feature_file(path, random_sequence(3, 2, 2, 2));
  CHECK_FALSE(fs::exists(path + ".json"));
  CHECK(read_feature_file(path).name == "plain");
}

TEST_CASE("corrupt feature files report the path") {
  TempDir dir;
  const auto path = dir.file("bad.pqsf");
  write_feature_file(path, random_sequence(10, 4, 2, 3));
  auto bytes = slurp(path);

  auto truncated = bytes;
  truncated.pop_back();
  dump(path, truncated);
  CHECK(error_of([&] { read_feature_file(path); }).find(path) != std::string::npos);

  auto longer = bytes;
  longer.push_back(0);
  dump(path, longer);
  CHECK(error_of([&] { read_feature_file(path); }).find(path) != std::string::npos);

  auto magic = bytes;
  magic[0] = 'X';
  dump(path, magic);
  CHECK(error_of([&] { read_feature_file(path); }).find(path) != std::string::npos);

  dump(path, {bytes.begin(), bytes.begin() + 10});
  CHECK(error_of([&] { read_feature_file(path); }).find(path) != std::string::npos);

  auto label = bytes;
  label[bytes.size() - 4] = 9;  // label 9 with C = 2
  dump(path, label);
  CHECK(error_of([&] { read_feature_file(path); }).find(path) != std::string::npos);

  const auto missing = dir.file("missing.pqsf");
  CHECK(error_of([&] { read_feature_file(missing); }).find(missing) != std::string::npos);
}

TEST_CASE("loss matrix round trip is bit-exact") {
  TempDir dir;
  std::mt19937_64 rng(4);
  std::vector<double> v(25 * 3);
  for (double& x : v) x = std::exponential_distribution<double>(1.0)(rng);
  v[4] = 0.0;
  const LossMatrix m(25, {"linear/lr=0.001", "mlp1", "ünïcode"}, v);
  const auto path = dir.file("l.pqlm");
  write_loss_matrix_file(path, m);
  const auto r = read_loss_matrix_file(path);
  CHECK(r.n_steps() == 25);
  CHECK(r.expert_names() == m.expert_names());
  CHECK(std::memcmp(r.values().data(), v.data(), v.size() * sizeof(double)) == 0);

  auto bytes = slurp(path);
  bytes.resize(bytes.size() - 8);
  dump(path, bytes);
  CHECK(error_of([&] { read_loss_matrix_file(path); }).find(path) != std::string::npos);
}

TEST_CASE("CSV features") {
  TempDir dir;
  const auto path = dir.file("f.csv");
  write_text_file(path, "# comment\n1,0.5,2\n\n0,-1,3.25\n2,0,0\n");
  const auto s = load_features(path);
  CHECK(s.size() == 3);
  CHECK(s.dim == 2);
  CHECK(s.n_classes == 3);
  CHECK(s.labels == std::vector<std::uint32_t>{1, 0, 2});
  CHECK(s.features[3] == 3.25f);
  const auto tsv = dir.file("f.tsv");
  write_text_file(tsv, "0\t1\t2\n1\t3\t4\n");
  CHECK(load_features(tsv).dim == 2);
  CHECK(read_feature_csv(tsv, 5).n_classes == 5);
  write_text_file(path, "0,1,2\n1,3\n");
  CHECK(error_of([&] { load_features(path); }).find(path) != std::string::npos);
  write_text_file(path, "0,1,x\n");
  CHECK(error_of([&] { load_features(path); }).find(path) != std::string::npos);
}

TEST_CASE("score tables") {
  TempDir dir;
  const auto path = dir.file("s.csv");
  write_text_file(path, "dataset,a,b\nd1,0.1,0.2\nd2,0.3,0.1\n");
  const auto t = read_score_table(path, Orientation::kHigherIsBetter);
  CHECK(t.n_datasets() == 2);
  CHECK(t.representation_names == std::vector<std::string>{"a", "b"});
  CHECK(t.at(1, 0) == 0.3);
  CHECK(t.orientation == Orientation::kHigherIsBetter);
  write_text_file(path, "dataset,a,b\nd1,0.1,0.2\nd2,0.3\n");
  const auto msg = error_of([&] { read_score_table(path, Orientation::kLowerIsBetter); });
  CHECK(msg.find(path) != std::string::npos);
  CHECK(msg.find("ragged") != std::string::npos);
}
