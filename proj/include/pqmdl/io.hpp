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

// File formats.
//
// Feature file (little-endian):
//   "PQSF" | version u32 = 1 | N u64 | d u32 | C u32 | dtype u32 (0 = f32)
//   N*d f32 features, row-major | N u32 labels
// An optional sidecar `<path>.json` holds {"name": ..., "provenance": ...}.
//
// Loss matrix file (little-endian):
//   "PQLM" | version u32 = 1 | N u64 | K u32
//   K names, each u32 byte length + UTF-8 bytes | N*K f64 losses, step-major

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pqmdl/core.hpp"
#include "pqmdl/ranking.hpp"

namespace pqmdl {

inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::uint32_t kLossFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 28;

void write_feature_file(const std::string& path, const FeatureSequence& seq,
                        const std::string& provenance = "");
FeatureSequence read_feature_file(const std::string& path);

/// One example per line: label, then d features. `n_classes` defaults to max label + 1.
FeatureSequence read_feature_csv(const std::string& path,
                                 std::optional<std::uint32_t> n_classes = std::nullopt);

/// Chooses the CSV reader for *.csv / *.tsv paths, the binary reader otherwise.
FeatureSequence load_features(const std::string& path);

void write_loss_matrix_file(const std::string& path, const LossMatrix& losses);
LossMatrix read_loss_matrix_file(const std::string& path);

/// Header row "<label>,<rep 1>,...,<rep R>", then one row per dataset with
/// its name followed by R scores. Comma or tab separated.
ScoreTable read_score_table(const std::string& path, Orientation orientation);

/// Writes `text` to `path`, throwing an Error naming the path on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pqmdl
