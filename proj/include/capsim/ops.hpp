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

#ifndef CAPSIM_OPS_HPP
#define CAPSIM_OPS_HPP

#include <cstdint>
#include <vector>

#include "capsim/types.hpp"

namespace capsim {

// One capability-level operation as issued to the kernel, after provenance
// resolution. This is the stream the differential harness replays against
// the reference oracle.
struct KernelOp {
  enum class Kind : std::uint8_t { Alloc, Borrow, Drop, Load, Store };

  Kind kind = Kind::Alloc;
  CapId cap = kNullCap;       // borrow source / dropped / accessing capability
  BorrowKind bkind = BorrowKind::Mut;
  CapTag tag = CapTag::Ref;   // alloc tag
  // Alloc/Borrow: bounds [a, b). Load/Store: a = address, b = width.
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

// Outcome of one kernel-level operation, recorded by both engines.
struct OpOutcome {
  ViolationKind verdict = ViolationKind::None;
  CapId created = kNullCap;
  std::vector<CapId> changed;  // revoked or demoted ids, sorted

  friend bool operator==(const OpOutcome& x, const OpOutcome& y) {
    return x.verdict == y.verdict && x.created == y.created &&
           x.changed == y.changed;
  }
};

}  // namespace capsim

#endif  // CAPSIM_OPS_HPP
