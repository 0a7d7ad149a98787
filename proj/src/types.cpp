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

#include "capsim/types.hpp"

namespace capsim {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::None:
      return "ok";
    case ViolationKind::InvalidCapabilityLoad:
      return "invalid-capability-load";
    case ViolationKind::InvalidCapabilityStore:
      return "invalid-capability-store";
    case ViolationKind::PermissionStore:
      return "permission-store";
    case ViolationKind::OutOfBoundsLoad:
      return "out-of-bounds-load";
    case ViolationKind::OutOfBoundsStore:
      return "out-of-bounds-store";
    case ViolationKind::BorrowFromInvalid:
      return "borrow-from-invalid";
    case ViolationKind::BorrowMutFromRo:
      return "borrow-mut-from-ro";
    case ViolationKind::BoundsNotSubset:
      return "bounds-not-subset";
    case ViolationKind::DropInvalid:
      return "drop-invalid";
    case ViolationKind::EmptyRange:
      return "empty-range";
    case ViolationKind::UntrackedAccess:
      return "untracked-access";
    case ViolationKind::ProvenanceAmbiguous:
      return "provenance-ambiguous";
    case ViolationKind::PoolExhausted:
      return "pool-exhausted";
    case ViolationKind::MalformedEvent:
      return "malformed-event";
  }
  return "unknown";
}

std::optional<ViolationKind> violation_kind_from_string(std::string_view name) {
  static constexpr ViolationKind kKinds[] = {
      ViolationKind::InvalidCapabilityLoad,
      ViolationKind::InvalidCapabilityStore,
      ViolationKind::PermissionStore,
      ViolationKind::OutOfBoundsLoad,
      ViolationKind::OutOfBoundsStore,
      ViolationKind::BorrowFromInvalid,
      ViolationKind::BorrowMutFromRo,
      ViolationKind::BoundsNotSubset,
      ViolationKind::DropInvalid,
      ViolationKind::EmptyRange,
      ViolationKind::UntrackedAccess,
      ViolationKind::ProvenanceAmbiguous,
      ViolationKind::PoolExhausted,
      ViolationKind::MalformedEvent,
  };
  for (ViolationKind kind : kKinds) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const char* to_string(BorrowKind kind) {
  switch (kind) {
    case BorrowKind::Mut:
      return "mut";
    case BorrowKind::Imm:
      return "imm";
    case BorrowKind::RawMut:
      return "raw-mut";
    case BorrowKind::RawImm:
      return "raw-imm";
    case BorrowKind::Cell:
      return "cell";
  }
  return "unknown";
}

std::optional<BorrowKind> borrow_kind_from_string(std::string_view name) {
  if (name == "mut") return BorrowKind::Mut;
  if (name == "imm") return BorrowKind::Imm;
  if (name == "raw-mut") return BorrowKind::RawMut;
  if (name == "raw-imm") return BorrowKind::RawImm;
  if (name == "cell") return BorrowKind::Cell;
  return std::nullopt;
}

const char* to_string(Permission perm) {
  switch (perm) {
    case Permission::RW:
      return "rw";
    case Permission::RO:
      return "ro";
    case Permission::NA:
      return "na";
  }
  return "unknown";
}

const char* to_string(CapTag tag) {
  switch (tag) {
    case CapTag::Ref:
      return "ref";
    case CapTag::RawPtr:
      return "raw";
    case CapTag::Cell:
      return "cell";
  }
  return "unknown";
}

}  // namespace capsim
