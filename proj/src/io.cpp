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

#include "pqmdl/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <sstream>

namespace pqmdl {
namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u;
    std::memcpy(&u, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void flush(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error("failed writing '" + path + "'");
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::size_t size() const { return buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) fail("truncated file");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error(path_ + ": " + what); }

 private:
  std::string path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && ptr == end;
}

char detect_delimiter(const std::string& line) {
  return line.find('\t') != std::string::npos ? '\t' : ',';
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_feature_file(const std::string& path, const FeatureSequence& seq,
                        const std::string& provenance) {
  const auto problems = validate_feature_sequence(seq);
  if (!problems.empty()) throw Error("refusing to write invalid features: " + problems.front());
  Writer w;
  w.bytes("PQSF", 4);
  w.le<std::uint32_t>(kFeatureFileVersion);
  w.le<std::uint64_t>(seq.size());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(seq.dim));
  w.le<std::uint32_t>(seq.n_classes);
  w.le<std::uint32_t>(0);
  for (float f : seq.features) w.le<float>(f);
  for (std::uint32_t l : seq.labels) w.le<std::uint32_t>(l);
  w.flush(path);
  if (!seq.name.empty() || !provenance.empty()) {
    nlohmann::json side{{"name", seq.name}, {"provenance", provenance}};
    write_text_file(path + ".json", side.dump(2) + "\n");
  }
}

FeatureSequence read_feature_file(const std::string& path) {
  Reader r(path);
  if (r.size() < kFeatureHeaderBytes) r.fail("file shorter than the 28-byte header");
  if (r.bytes(4) != "PQSF") r.fail("bad magic, expected PQSF");
  const auto version = r.le<std::uint32_t>();
  if (version != kFeatureFileVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.le<std::uint64_t>();
  const auto d = r.le<std::uint32_t>();
  const auto c = r.le<std::uint32_t>();
  const auto dtype = r.le<std::uint32_t>();
  if (dtype != 0) r.fail("unsupported dtype tag " + std::to_string(dtype));
  if (d == 0) r.fail("feature dimension is 0");
  // Guard the size arithmetic below against overflow.
  if (n > (std::uint64_t{1} << 40) / (std::uint64_t{d} + 1)) r.fail("header N*d is implausibly large");
  const std::uint64_t expected = kFeatureHeaderBytes + 4 * n * d + 4 * n;
  if (r.size() != expected) {
    r.fail("byte length " + std::to_string(r.size()) + " does not match header (expected " +
           std::to_string(expected) + ")");
  }
  FeatureSequence seq;
  seq.dim = d;
  seq.n_classes = c;
  seq.features.resize(n * d);
  seq.labels.resize(n);
  for (auto& f : seq.features) f = r.le<float>();
  for (auto& l : seq.labels) l = r.le<std::uint32_t>();
  seq.name = std::filesystem::path(path).stem().string();
  const std::string side = path + ".json";
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.contains("name") && j["name"].is_string() && !j["name"].get<std::string>().empty()) {
        seq.name = j["name"].get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(side + ": " + e.what());
    }
  }
  const auto problems = validate_feature_sequence(seq);
  if (!problems.empty()) r.fail(problems.front());
  return seq;
}

FeatureSequence read_feature_csv(const std::string& path, std::optional<std::uint32_t> n_classes) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw Error(path + ": no data rows");
  const char delim = detect_delimiter(lines.front());
  FeatureSequence seq;
  seq.name = std::filesystem::path(path).stem().string();
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = split(lines[i], delim);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (cells.size() < 2) throw Error(where + ": need a label and at least one feature");
    if (seq.dim == 0) seq.dim = cells.size() - 1;
    if (cells.size() - 1 != seq.dim) throw Error(where + ": ragged row");
    std::uint32_t label = 0;
    if (!parse_number(cells[0], label)) throw Error(where + ": bad label '" + cells[0] + "'");
    max_label = std::max(max_label, label);
    seq.labels.push_back(label);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      float v = 0.0f;
      if (!parse_number(cells[j], v)) throw Error(where + ": bad feature '" + cells[j] + "'");
      seq.features.push_back(v);
    }
  }
  seq.n_classes = n_classes ? *n_classes : max_label + 1;
  const auto problems = validate_feature_sequence(seq);
  if (!problems.empty()) throw Error(path + ": " + problems.front());
  return seq;
}

FeatureSequence load_features(const std::string& path) {
  const auto ext = lower_extension(path);
  if (ext == ".csv" || ext == ".tsv") return read_feature_csv(path);
  return read_feature_file(path);
}

void write_loss_matrix_file(const std::string& path, const LossMatrix& losses) {
  Writer w;
  w.bytes("PQLM", 4);
  w.le<std::uint32_t>(kLossFileVersion);
  w.le<std::uint64_t>(losses.n_steps());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(losses.n_experts()));
  for (const auto& name : losses.expert_names()) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
  }
  for (double v : losses.values()) w.le<double>(v);
  w.flush(path);
}

LossMatrix read_loss_matrix_file(const std::string& path) {
  Reader r(path);
  if (r.bytes(4) != "PQLM") r.fail("bad magic, expected PQLM");
  const auto version = r.le<std::uint32_t>();
  if (version != kLossFileVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.le<std::uint64_t>();
  const auto k = r.le<std::uint32_t>();
  if (k == 0) r.fail("loss matrix has no experts");
  std::vector<std::string> names;
  names.reserve(k);
  for (std::uint32_t j = 0; j < k; ++j) {
    const auto len = r.le<std::uint32_t>();
    names.push_back(r.bytes(len));
  }
  if (n > r.remaining() / 8 / k || r.remaining() != 8 * n * k) {
    r.fail("payload length " + std::to_string(r.remaining()) + " does not match N*K*8");
  }
  std::vector<double> values(n * k);
  for (auto& v : values) v = r.le<double>();
  try {
    return LossMatrix(n, std::move(names), std::move(values));
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

ScoreTable read_score_table(const std::string& path, Orientation orientation) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw Error(path + ": need a header row and at least one dataset row");
  const char delim = detect_delimiter(lines.front());
  ScoreTable table;
  table.orientation = orientation;
  const auto header = split(lines.front(), delim);
  if (header.size() < 3) throw Error(path + ": header needs a label column and >= 2 representations");
  for (std::size_t j = 1; j < header.size(); ++j) table.representation_names.push_back(trim(header[j]));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], delim);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (cells.size() != header.size()) {
      throw Error(where + ": ragged row (" + std::to_string(cells.size()) + " cells, header has " +
                  std::to_string(header.size()) + ")");
    }
    table.dataset_names.push_back(trim(cells[0]));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double v = 0.0;
      if (!parse_number(cells[j], v)) throw Error(where + ": bad score '" + cells[j] + "'");
      table.scores.push_back(v);
    }
  }
  try {
    table.validate();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  return table;
}

}  // namespace pqmdl
