// Copyright 2026 The capsim Authors
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

#ifndef CAPSIM_TYPES_HPP
#define CAPSIM_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string_view>

namespace capsim {

// Capability identifier. Ids are assigned sequentially starting at 1 and are
// never reused within a session; 0 is reserved for the null parent.
using CapId = std::uint64_t;
inline constexpr CapId kNullCap = 0;

// Permissions only move downward: RW -> RO -> NA.
enum class Permission : std::uint8_t { RW, RO, NA };

enum class CapTag : std::uint8_t { Ref, RawPtr, Cell };

enum class BorrowKind : std::uint8_t { Mut, Imm, RawMut, RawImm, Cell };

struct Capability {
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // exclusive
  Permission perm = Permission::NA;
  CapId parent = kNullCap;
  CapTag tag = CapTag::Ref;

  bool valid() const { return perm != Permission::NA; }
  bool contains(std::uint64_t addr, std::uint64_t width) const {
    return addr >= lo && addr < hi && width <= hi - addr;
  }
  bool overlaps(std::uint64_t a, std::uint64_t b) const {
    return lo < b && a < hi;
  }
};

enum class ViolationKind : std::uint8_t {
  None = 0,
  InvalidCapabilityLoad,
  InvalidCapabilityStore,
  PermissionStore,
  OutOfBoundsLoad,
  OutOfBoundsStore,
  BorrowFromInvalid,
  BorrowMutFromRo,
  BoundsNotSubset,
  DropInvalid,
  EmptyRange,
  UntrackedAccess,
  ProvenanceAmbiguous,  // diagnostic, not fatal
  PoolExhausted,
  MalformedEvent,
};

const char* to_string(ViolationKind kind);
std::optional<ViolationKind> violation_kind_from_string(std::string_view name);

const char* to_string(BorrowKind kind);
std::optional<BorrowKind> borrow_kind_from_string(std::string_view name);

const char* to_string(Permission perm);
const char* to_string(CapTag tag);

// Policy flags for the Rust-specific relaxations. Fixed for a session.
struct KernelConfig {
  bool raw_pointer_relaxation = true;
  bool cell_relaxation = true;
};

inline bool borrow_kind_needs_write(BorrowKind kind) {
  return kind == BorrowKind::Mut || kind == BorrowKind::RawMut ||
         kind == BorrowKind::Cell;
}

inline Permission borrow_kind_perm(BorrowKind kind) {
  return borrow_kind_needs_write(kind) ? Permission::RW : Permission::RO;
}

inline CapTag borrow_kind_tag(BorrowKind kind) {
  switch (kind) {
    case BorrowKind::RawMut:
    case BorrowKind::RawImm:
      return CapTag::RawPtr;
    case BorrowKind::Cell:
      return CapTag::Cell;
    default:
      return CapTag::Ref;
  }
}

}  // namespace capsim

#endif  // CAPSIM_TYPES_HPP
