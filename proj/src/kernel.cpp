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

#include "capsim/kernel.hpp"

#include <algorithm>
#include <cassert>

namespace capsim {

Kernel::Kernel(KernelConfig config, KernelDebugOptions debug)
    : config_(config), debug_(debug) {}

CapId Kernel::fresh(Capability cap) {
  nodes_.push_back(Node{cap, {}});
  visit_marks_.push_back(0);
  CapId id = nodes_.size();
  if (cap.parent != kNullCap) {
    nodes_[cap.parent - 1].children.push_back(id);
  }
  index_.insert(id, cap.lo, cap.hi);
  return id;
}

AllocResult Kernel::alloc(std::uint64_t lo, std::uint64_t hi, CapTag tag) {
  if (lo >= hi) return {ViolationKind::EmptyRange, kNullCap};
  CapId id = fresh(Capability{lo, hi, Permission::RW, kNullCap, tag});
  return {ViolationKind::None, id};
}

ViolationKind Kernel::borrow_precheck(CapId src, BorrowKind kind,
                                      std::uint64_t lo,
                                      std::uint64_t hi) const {
  assert(exists(src));
  const Capability& parent = cap(src);
  if (parent.perm == Permission::NA) return ViolationKind::BorrowFromInvalid;
  if (borrow_kind_needs_write(kind) && parent.perm != Permission::RW) {
    return ViolationKind::BorrowMutFromRo;
  }
  if (!(parent.lo <= lo && lo < hi && hi <= parent.hi)) {
    return ViolationKind::BoundsNotSubset;
  }
  return ViolationKind::None;
}

BorrowResult Kernel::borrow(CapId src, BorrowKind kind, std::uint64_t lo,
                            std::uint64_t hi) {
  ViolationKind check = borrow_precheck(src, kind, lo, hi);
  if (check != ViolationKind::None) return {check, kNullCap};
  CapId id = fresh(
      Capability{lo, hi, borrow_kind_perm(kind), src, borrow_kind_tag(kind)});
  return {ViolationKind::None, id};
}

std::vector<CapId> Kernel::parent_chain(CapId id) const {
  std::vector<CapId> chain;
  for (CapId cur = id; cur != kNullCap; cur = cap(cur).parent) {
    chain.push_back(cur);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

bool Kernel::is_ancestor(CapId anc, CapId id) const {
  for (CapId cur = id; cur != kNullCap; cur = cap(cur).parent) {
    if (cur == anc) return true;
  }
  return false;
}

bool Kernel::excluded(CapId accessor, CapId candidate) const {
  const Capability& c = cap(candidate);
  if (config_.raw_pointer_relaxation && c.tag == CapTag::RawPtr &&
      c.parent != kNullCap && is_ancestor(c.parent, accessor)) {
    return true;
  }
  if (config_.cell_relaxation) {
    for (CapId cur = accessor; cur != kNullCap; cur = cap(cur).parent) {
      if (cap(cur).tag == CapTag::Cell && !is_ancestor(cur, candidate)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<CapId> Kernel::conflict_set(CapId id, std::uint64_t lo,
                                        std::uint64_t hi) const {
  std::vector<CapId> candidates;
  index_.overlapping(lo, hi, candidates);
  std::vector<CapId> result;
  for (CapId j : candidates) {
    if (is_ancestor(j, id)) continue;  // Ancestors(id) includes id itself
    if (excluded(id, j)) continue;
    result.push_back(j);
  }
  return result;
}

std::vector<CapId> Kernel::derived_closure(
    const std::vector<CapId>& seeds) const {
  std::vector<CapId> closure;
  std::vector<CapId> stack(seeds);
  while (!stack.empty()) {
    CapId cur = stack.back();
    stack.pop_back();
    if (visit_marks_[cur - 1]) continue;
    visit_marks_[cur - 1] = 1;
    closure.push_back(cur);
    for (CapId child : nodes_[cur - 1].children) stack.push_back(child);
  }
  for (CapId id : closure) visit_marks_[id - 1] = 0;
  std::sort(closure.begin(), closure.end());
  return closure;
}

void Kernel::invalidate(const std::vector<CapId>& closure,
                        std::vector<CapId>& out) {
  for (CapId id : closure) {
    Node& node = nodes_[id - 1];
    bool was_valid = node.cap.valid();
    node.cap.perm = Permission::NA;
    if (was_valid) ++invalidations_;
    if (debug_.skip_disconnection) {
      out.push_back(id);
      continue;
    }
    if (was_valid) out.push_back(id);
    index_.erase(id, node.cap.lo);
  }
  if (debug_.skip_disconnection) return;
  // Detach the invalidated subtrees: each revoked node whose parent survived
  // leaves its parent's child list; revoked nodes drop their own lists.
  for (CapId id : out) {
    Node& node = nodes_[id - 1];
    CapId parent = node.cap.parent;
    if (parent != kNullCap && nodes_[parent - 1].cap.valid()) {
      auto& siblings = nodes_[parent - 1].children;
      siblings.erase(std::remove(siblings.begin(), siblings.end(), id),
                     siblings.end());
    }
    node.children.clear();
  }
}

DropResult Kernel::drop_cap(CapId id) {
  assert(exists(id));
  if (!cap(id).valid()) return {ViolationKind::DropInvalid, {}};
  CapId root = id;
  while (cap(root).parent != kNullCap) root = cap(root).parent;
  DropResult result;
  invalidate(derived_closure({root}), result.revoked);
  return result;
}

AccessResult Kernel::access_store(CapId id, std::uint64_t addr,
                                  std::uint64_t width) {
  assert(exists(id));
  const Capability& c = cap(id);
  if (c.perm == Permission::NA)
    return {ViolationKind::InvalidCapabilityStore, {}};
  if (c.perm != Permission::RW) return {ViolationKind::PermissionStore, {}};
  if (!c.contains(addr, width)) return {ViolationKind::OutOfBoundsStore, {}};
  AccessResult result;
  invalidate(derived_closure(conflict_set(id, addr, addr + width)),
             result.changed);
  return result;
}

AccessResult Kernel::access_load(CapId id, std::uint64_t addr,
                                 std::uint64_t width) {
  assert(exists(id));
  const Capability& c = cap(id);
  if (c.perm == Permission::NA)
    return {ViolationKind::InvalidCapabilityLoad, {}};
  if (!c.contains(addr, width)) return {ViolationKind::OutOfBoundsLoad, {}};
  AccessResult result;
  for (CapId j : derived_closure(conflict_set(id, addr, addr + width))) {
    Node& node = nodes_[j - 1];
    if (node.cap.perm == Permission::RW) {
      node.cap.perm = Permission::RO;
      result.changed.push_back(j);
    }
  }
  return result;
}

std::map<CapId, Capability> Kernel::snapshot() const {
  std::map<CapId, Capability> view;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    view.emplace(static_cast<CapId>(i + 1), nodes_[i].cap);
  }
  return view;
}

std::vector<CapId> Kernel::overlapping_live(std::uint64_t lo,
                                            std::uint64_t hi) const {
  std::vector<CapId> out;
  index_.overlapping(lo, hi, out);
  if (debug_.skip_disconnection) {
    out.erase(std::remove_if(out.begin(), out.end(),
                             [this](CapId id) { return !cap(id).valid(); }),
              out.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Kernel::intersects_live_root(std::uint64_t lo, std::uint64_t hi) const {
  std::vector<CapId> out;
  index_.overlapping(lo, hi, out);
  for (CapId id : out) {
    if (cap(id).parent == kNullCap && cap(id).valid()) return true;
  }
  return false;
}

}  // namespace capsim
