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

#include <atomic>
#include <cstdlib>
#include <string>

#include "pqmdl/core.hpp"
#include "pqmdl/kernels.hpp"

namespace pqmdl::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(PQMDL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa best_available() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

const KernelTable* resolve_initial() {
  if (const char* env = std::getenv("PQMDL_KERNELS")) {
    return &table_for(parse_isa(env));
  }
  return &table_for(best_available());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{resolve_initial()};
  return table;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_available(isa)) {
    throw Error("kernel variant '" + std::string(isa_name(isa)) + "' is not supported on this CPU");
  }
#if defined(PQMDL_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select_kernels(Isa isa) { current().store(&table_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "auto" || name.empty()) return best_available();
  throw Error("unknown kernel variant '" + std::string(name) + "' (expected scalar, avx2 or auto)");
}

}  // namespace pqmdl::kernels
