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

#ifndef CAPSIM_KERNEL_HPP
#define CAPSIM_KERNEL_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "capsim/interval_index.hpp"
#include "capsim/types.hpp"

namespace capsim {

struct AllocResult {
  ViolationKind kind = ViolationKind::None;
  CapId id = kNullCap;
  bool ok() const { return kind == ViolationKind::None; }
};

struct BorrowResult {
  ViolationKind kind = ViolationKind::None;
  CapId id = kNullCap;
  bool ok() const { return kind == ViolationKind::None; }
};

struct DropResult {
  ViolationKind kind = ViolationKind::None;
  std::vector<CapId> revoked;  // sorted by id
  bool ok() const { return kind == ViolationKind::None; }
};

struct AccessResult {
  ViolationKind kind = ViolationKind::None;
  // Newly invalidated (store) or newly demoted RW->RO (load), sorted by id.
  std::vector<CapId> changed;
  bool ok() const { return kind == ViolationKind::None; }
};

// Test-only knobs for fault injection in the differential suites.
struct KernelDebugOptions {
  // Leaves invalidated capabilities connected to the forest and in the
  // interval index, and reports the full traversal instead of the newly
  // invalidated set. Breaks the invalidate-at-most-once guarantee.
  bool skip_disconnection = false;
};

// The capability state machine: borrow forest, overlap index, and the six
// instruction transitions. Pure state, no I/O.
class Kernel {
 public:
  explicit Kernel(KernelConfig config = {}, KernelDebugOptions debug = {});

  // Creates a root capability over [lo, hi). The tag parameter supports
  // cell-tagged allocations from the trace language; plain allocations are
  // Ref.
  AllocResult alloc(std::uint64_t lo, std::uint64_t hi,
                    CapTag tag = CapTag::Ref);

  // Checks borrow preconditions without creating anything.
  ViolationKind borrow_precheck(CapId src, BorrowKind kind, std::uint64_t lo,
                                std::uint64_t hi) const;
  BorrowResult borrow(CapId src, BorrowKind kind, std::uint64_t lo,
                      std::uint64_t hi);

  // Invalidates the whole tree containing id, from its root.
  DropResult drop_cap(CapId id);

  AccessResult access_store(CapId id, std::uint64_t addr, std::uint64_t width);
  AccessResult access_load(CapId id, std::uint64_t addr, std::uint64_t width);

  // Read-only view over all capabilities ever created, including invalidated
  // ones. Ids are 1..size().
  std::map<CapId, Capability> snapshot() const;
  std::size_t size() const { return nodes_.size(); }
  bool exists(CapId id) const { return id >= 1 && id <= nodes_.size(); }
  const Capability& cap(CapId id) const { return nodes_[id - 1].cap; }

  // Root-to-id chain of parent links (parents are immutable).
  std::vector<CapId> parent_chain(CapId id) const;

  // True if anc is id or an ancestor of id.
  bool is_ancestor(CapId anc, CapId id) const;

  std::uint64_t invalidation_count() const { return invalidations_; }
  const KernelConfig& config() const { return config_; }

  // Live (valid) capabilities whose bounds overlap [lo, hi).
  std::vector<CapId> overlapping_live(std::uint64_t lo,
                                      std::uint64_t hi) const;
  // True if [lo, hi) intersects the bounds of any valid root capability.
  bool intersects_live_root(std::uint64_t lo, std::uint64_t hi) const;

 private:
  struct Node {
    Capability cap;
    std::vector<CapId> children;
  };

  CapId fresh(Capability cap);
  // Conflict set S for an access through id over [lo, hi): live overlapping
  // capabilities outside Ancestors(id), minus the configured policy
  // exclusions.
  std::vector<CapId> conflict_set(CapId id, std::uint64_t lo,
                                  std::uint64_t hi) const;
  bool excluded(CapId accessor, CapId candidate) const;
  // Derived closure over the connected forest, deduplicated.
  std::vector<CapId> derived_closure(const std::vector<CapId>& seeds) const;
  void invalidate(const std::vector<CapId>& closure, std::vector<CapId>& out);

  KernelConfig config_;
  KernelDebugOptions debug_;
  std::vector<Node> nodes_;
  IntervalIndex index_;
  std::uint64_t invalidations_ = 0;
  mutable std::vector<std::uint8_t> visit_marks_;
};

}  // namespace capsim

#endif  // CAPSIM_KERNEL_HPP
