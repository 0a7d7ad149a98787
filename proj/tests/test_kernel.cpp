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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "capsim/kernel.hpp"
#include "capsim/oracle.hpp"

using namespace capsim;

TEST_CASE("alloc creates read-write roots and rejects empty ranges") {
  Kernel k;
  AllocResult a = k.alloc(0x1000, 0x1010);
  REQUIRE(a.ok());
  CHECK(a.id == 1);
  CHECK(k.cap(1).perm == Permission::RW);
  CHECK(k.cap(1).parent == kNullCap);
  CHECK(k.cap(1).tag == CapTag::Ref);

  CHECK(k.alloc(0x2000, 0x2000).kind == ViolationKind::EmptyRange);
  CHECK(k.alloc(0x2010, 0x2000).kind == ViolationKind::EmptyRange);
  CHECK(k.size() == 1);

  AllocResult cell = k.alloc(0x3000, 0x3008, CapTag::Cell);
  REQUIRE(cell.ok());
  CHECK(k.cap(cell.id).tag == CapTag::Cell);
}

TEST_CASE("borrow kinds map to permission and tag") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;

  CapId m = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1040).id;
  CHECK(k.cap(m).perm == Permission::RW);
  CHECK(k.cap(m).tag == CapTag::Ref);

  CapId i = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1040).id;
  CHECK(k.cap(i).perm == Permission::RO);
  CHECK(k.cap(i).tag == CapTag::Ref);

  CapId rm = k.borrow(root, BorrowKind::RawMut, 0x1000, 0x1040).id;
  CHECK(k.cap(rm).perm == Permission::RW);
  CHECK(k.cap(rm).tag == CapTag::RawPtr);

  CapId ri = k.borrow(root, BorrowKind::RawImm, 0x1000, 0x1040).id;
  CHECK(k.cap(ri).perm == Permission::RO);
  CHECK(k.cap(ri).tag == CapTag::RawPtr);

  CapId c = k.borrow(root, BorrowKind::Cell, 0x1000, 0x1040).id;
  CHECK(k.cap(c).perm == Permission::RW);
  CHECK(k.cap(c).tag == CapTag::Cell);

  CHECK(k.parent_chain(m) == std::vector<CapId>{root, m});
}

TEST_CASE("borrow precondition order: validity, then permission, then bounds") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId ro = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1010).id;

  // Shared source cannot hand out write permission, even with bad bounds.
  CHECK(k.borrow_precheck(ro, BorrowKind::Mut, 0x0, 0x1) ==
        ViolationKind::BorrowMutFromRo);
  CHECK(k.borrow_precheck(ro, BorrowKind::Imm, 0x0, 0x1) ==
        ViolationKind::BoundsNotSubset);
  CHECK(k.borrow_precheck(root, BorrowKind::Mut, 0x1000, 0x1020) ==
        ViolationKind::BoundsNotSubset);
  CHECK(k.borrow_precheck(root, BorrowKind::Mut, 0x1008, 0x1008) ==
        ViolationKind::BoundsNotSubset);

  k.drop_cap(root);
  // Invalidity dominates everything else.
  CHECK(k.borrow_precheck(ro, BorrowKind::Mut, 0x0, 0x1) ==
        ViolationKind::BorrowFromInvalid);
}

TEST_CASE("drop invalidates the whole tree from the root") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;
  CapId child = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1020).id;
  CapId grandchild = k.borrow(child, BorrowKind::Imm, 0x1000, 0x1010).id;
  CapId other_root = k.alloc(0x2000, 0x2010).id;

  DropResult r = k.drop_cap(grandchild);  // drop through a leaf
  REQUIRE(r.ok());
  CHECK(r.revoked == std::vector<CapId>{root, child, grandchild});
  CHECK(k.cap(root).perm == Permission::NA);
  CHECK(k.cap(child).perm == Permission::NA);
  CHECK(k.cap(other_root).perm == Permission::RW);

  CHECK(k.drop_cap(root).kind == ViolationKind::DropInvalid);
  CHECK(k.drop_cap(child).kind == ViolationKind::DropInvalid);
  CHECK(k.invalidation_count() == 3);
}

TEST_CASE("store revokes overlapping non-ancestors and their subtrees") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;       // 1
  CapId left = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1020).id;   // 2
  CapId leaf = k.borrow(left, BorrowKind::Imm, 0x1000, 0x1010).id;   // 3
  CapId right = k.borrow(root, BorrowKind::Imm, 0x1030, 0x1040).id;  // 4

  // Store through the root over the left half: left subtree dies, the
  // disjoint right sibling survives.
  AccessResult r = k.access_store(root, 0x1008, 8);
  REQUIRE(r.ok());
  CHECK(r.changed == std::vector<CapId>{left, leaf});
  CHECK(k.cap(left).perm == Permission::NA);
  CHECK(k.cap(leaf).perm == Permission::NA);
  CHECK(k.cap(right).perm == Permission::RO);
  CHECK(k.cap(root).perm == Permission::RW);
}

TEST_CASE("store never invalidates the accessor or its ancestors") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;
  CapId mid = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1040).id;
  CapId leaf = k.borrow(mid, BorrowKind::Mut, 0x1000, 0x1040).id;

  AccessResult r = k.access_store(leaf, 0x1000, 8);
  REQUIRE(r.ok());
  CHECK(r.changed.empty());
  CHECK(k.cap(root).perm == Permission::RW);
  CHECK(k.cap(mid).perm == Permission::RW);
}

TEST_CASE("store precondition order: validity, then permission, then bounds") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId ro = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1010).id;

  // Shared capability, address out of bounds: permission reported first.
  CHECK(k.access_store(ro, 0x2000, 8).kind == ViolationKind::PermissionStore);
  CHECK(k.access_store(root, 0x2000, 8).kind ==
        ViolationKind::OutOfBoundsStore);
  CHECK(k.access_store(root, 0x100c, 8).kind ==
        ViolationKind::OutOfBoundsStore);

  k.drop_cap(root);
  CHECK(k.access_store(ro, 0x2000, 8).kind ==
        ViolationKind::InvalidCapabilityStore);
  CHECK(k.access_store(root, 0x1000, 8).kind ==
        ViolationKind::InvalidCapabilityStore);
}

TEST_CASE("load demotes conflicting writable capabilities to read-only") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;
  CapId mut_child = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1020).id;
  CapId ro_child = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1020).id;

  AccessResult r = k.access_load(root, 0x1000, 8);
  REQUIRE(r.ok());
  // Only the writable child changes; the read-only one already complies.
  CHECK(r.changed == std::vector<CapId>{mut_child});
  CHECK(k.cap(mut_child).perm == Permission::RO);
  CHECK(k.cap(ro_child).perm == Permission::RO);
  CHECK(k.cap(root).perm == Permission::RW);

  // A read through the demoted child still works.
  CHECK(k.access_load(mut_child, 0x1000, 8).ok());

  k.drop_cap(root);
  CHECK(k.access_load(mut_child, 0x1000, 8).kind ==
        ViolationKind::InvalidCapabilityLoad);
}

TEST_CASE("load bounds checking") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CHECK(k.access_load(root, 0x100c, 8).kind == ViolationKind::OutOfBoundsLoad);
  CHECK(k.access_load(root, 0xfff, 2).kind == ViolationKind::OutOfBoundsLoad);
  CHECK(k.access_load(root, 0x100f, 1).ok());
}

TEST_CASE("raw pointer policy exempts raws derived from the accessor's tree") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId raw_a = k.borrow(root, BorrowKind::RawMut, 0x1000, 0x1010).id;
  CapId raw_b = k.borrow(root, BorrowKind::RawMut, 0x1000, 0x1010).id;

  // Sibling raws interleave freely: each one's parent is an ancestor of
  // the other accessor.
  CHECK(k.access_store(raw_a, 0x1000, 8).changed.empty());
  CHECK(k.access_store(raw_b, 0x1000, 8).changed.empty());
  CHECK(k.access_store(raw_a, 0x1008, 8).changed.empty());
  CHECK(k.cap(raw_a).perm == Permission::RW);
  CHECK(k.cap(raw_b).perm == Permission::RW);

  // The exemption does not cover plain references.
  CapId ref = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1010).id;
  AccessResult r = k.access_store(raw_a, 0x1000, 8);
  CHECK(r.changed == std::vector<CapId>{ref});
}

TEST_CASE("raw pointer policy does not cover raws from foreign trees") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId other = k.alloc(0x1000, 0x1010).id;  // overlapping foreign root
  CapId foreign_raw = k.borrow(other, BorrowKind::RawMut, 0x1000, 0x1010).id;

  AccessResult r = k.access_store(root, 0x1000, 8);
  CHECK(r.changed == std::vector<CapId>{other, foreign_raw});
}

TEST_CASE("raw pointer policy off: sibling raws kill each other") {
  Kernel k(KernelConfig{false, true});
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId raw_a = k.borrow(root, BorrowKind::RawMut, 0x1000, 0x1010).id;
  CapId raw_b = k.borrow(root, BorrowKind::RawMut, 0x1000, 0x1010).id;

  AccessResult r = k.access_store(raw_a, 0x1000, 8);
  CHECK(r.changed == std::vector<CapId>{raw_b});
  CHECK(k.access_store(raw_b, 0x1000, 8).kind ==
        ViolationKind::InvalidCapabilityStore);
}

TEST_CASE("cell policy exempts capabilities outside the cell's subtree") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId cell = k.borrow(root, BorrowKind::Cell, 0x1000, 0x1008).id;
  CapId shared = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1010).id;

  // Stores through the cell leave the unrelated shared view alone.
  CHECK(k.access_store(cell, 0x1000, 8).changed.empty());
  CHECK(k.access_store(cell, 0x1000, 8).changed.empty());
  CHECK(k.cap(shared).perm == Permission::RO);

  // Capabilities inside the cell's own subtree are still revocable.
  CapId inner = k.borrow(cell, BorrowKind::Mut, 0x1000, 0x1008).id;
  CapId inner2 = k.borrow(cell, BorrowKind::Mut, 0x1000, 0x1008).id;
  AccessResult r = k.access_store(inner2, 0x1000, 8);
  CHECK(r.changed == std::vector<CapId>{inner});
}

TEST_CASE("cell policy off: the store revokes the shared sibling") {
  Kernel k(KernelConfig{true, false});
  CapId root = k.alloc(0x1000, 0x1010).id;
  CapId cell = k.borrow(root, BorrowKind::Cell, 0x1000, 0x1008).id;
  CapId shared = k.borrow(root, BorrowKind::Imm, 0x1000, 0x1010).id;

  AccessResult r = k.access_store(cell, 0x1000, 8);
  CHECK(r.changed == std::vector<CapId>{shared});
}

TEST_CASE("worked example: raw pointer store revokes the reborrowed unique") {
  Kernel k;
  CapId owner = k.alloc(0x1000, 0x1008).id;                          // 1
  CHECK(k.access_store(owner, 0x1000, 8).ok());
  CapId raw = k.borrow(owner, BorrowKind::RawMut, 0x1000, 0x1008).id;  // 2
  CapId uniq = k.borrow(raw, BorrowKind::Mut, 0x1000, 0x1008).id;      // 3

  AccessResult r = k.access_store(raw, 0x1000, 8);
  REQUIRE(r.ok());
  CHECK(r.changed == std::vector<CapId>{uniq});
  CHECK(k.cap(owner).perm == Permission::RW);
  CHECK(k.cap(raw).perm == Permission::RW);

  CHECK(k.access_store(uniq, 0x1000, 8).kind ==
        ViolationKind::InvalidCapabilityStore);
  CHECK(k.parent_chain(uniq) == std::vector<CapId>{owner, raw, uniq});
}

TEST_CASE("overlap queries and live-root intersection") {
  Kernel k;
  CapId a = k.alloc(0x1000, 0x1010).id;
  CapId b = k.alloc(0x1008, 0x1020).id;
  CapId child = k.borrow(a, BorrowKind::Imm, 0x1000, 0x1008).id;

  CHECK(k.overlapping_live(0x1008, 0x1010) == std::vector<CapId>{a, b});
  CHECK(k.overlapping_live(0x1000, 0x1004) == std::vector<CapId>{a, child});
  CHECK(k.overlapping_live(0x2000, 0x2008).empty());

  CHECK(k.intersects_live_root(0x100f, 0x1010));
  CHECK_FALSE(k.intersects_live_root(0x1020, 0x1028));
  k.drop_cap(a);
  k.drop_cap(b);
  CHECK_FALSE(k.intersects_live_root(0x1000, 0x1020));
  CHECK(k.overlapping_live(0x1000, 0x1020).empty());
}

TEST_CASE("each capability is invalidated at most once") {
  Kernel k;
  CapId root = k.alloc(0x1000, 0x1040).id;
  CapId c1 = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1020).id;
  CapId c2 = k.borrow(c1, BorrowKind::Mut, 0x1000, 0x1010).id;

  std::set<CapId> seen;
  AccessResult first = k.access_store(root, 0x1000, 8);
  for (CapId id : first.changed) CHECK(seen.insert(id).second);
  CHECK(seen == std::set<CapId>{c1, c2});

  // A second store over the same range finds nothing left to revoke.
  CHECK(k.access_store(root, 0x1000, 8).changed.empty());
  CHECK(k.invalidation_count() == 2);
}

TEST_CASE("skip_disconnection fixture breaks the at-most-once guarantee") {
  Kernel k(KernelConfig{}, KernelDebugOptions{true});
  CapId root = k.alloc(0x1000, 0x1040).id;
  CapId child = k.borrow(root, BorrowKind::Mut, 0x1000, 0x1020).id;

  AccessResult first = k.access_store(root, 0x1000, 8);
  CHECK(first.changed == std::vector<CapId>{child});

  // Without disconnection the dead child is traversed and reported again.
  AccessResult second = k.access_store(root, 0x1000, 8);
  CHECK(second.changed == std::vector<CapId>{child});
}

TEST_CASE("randomized kernel-vs-oracle agreement") {
  std::mt19937_64 rng(20260823);
  auto pick = [&](std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
  };
  static constexpr std::uint64_t kBases[] = {0x1000, 0x1008, 0x1010, 0x2000};

  for (int round = 0; round < 300; ++round) {
    KernelConfig config{(round & 1) != 0, (round & 2) != 0};
    Kernel k(config);
    oracle::OracleState state;
    for (int step = 0; step < 120; ++step) {
      KernelOp op;
      std::uint64_t lo = kBases[pick(4)];
      std::uint64_t span = 8 + pick(4) * 8;
      switch (pick(5)) {
        case 0:
          op = {KernelOp::Kind::Alloc, kNullCap,
                BorrowKind::Mut, pick(8) == 0 ? CapTag::Cell : CapTag::Ref,
                lo, lo + span};
          break;
        case 1: {
          if (k.size() == 0) continue;
          CapId src = 1 + pick(k.size());
          static constexpr BorrowKind kinds[] = {
              BorrowKind::Mut, BorrowKind::Imm, BorrowKind::RawMut,
              BorrowKind::RawImm, BorrowKind::Cell};
          const Capability& parent = k.cap(src);
          std::uint64_t blo = parent.lo;
          std::uint64_t bhi = parent.hi;
          if (pick(2) == 0 && bhi - blo > 8) blo += 8;
          op = {KernelOp::Kind::Borrow, src, kinds[pick(5)], CapTag::Ref,
                blo, bhi};
          break;
        }
        case 2: {
          if (k.size() == 0) continue;
          op = {KernelOp::Kind::Drop, 1 + pick(k.size()), BorrowKind::Mut,
                CapTag::Ref, 0, 0};
          break;
        }
        default: {
          if (k.size() == 0) continue;
          CapId cap = 1 + pick(k.size());
          op = {pick(2) == 0 ? KernelOp::Kind::Load : KernelOp::Kind::Store,
                cap, BorrowKind::Mut, CapTag::Ref, k.cap(cap).lo + pick(3) * 8,
                8};
          break;
        }
      }

      OpOutcome expected = oracle::oracle_step(state, op, config);
      OpOutcome actual;
      switch (op.kind) {
        case KernelOp::Kind::Alloc: {
          AllocResult r = k.alloc(op.a, op.b, op.tag);
          actual = {r.kind, r.id, {}};
          break;
        }
        case KernelOp::Kind::Borrow: {
          BorrowResult r = k.borrow(op.cap, op.bkind, op.a, op.b);
          actual = {r.kind, r.id, {}};
          break;
        }
        case KernelOp::Kind::Drop: {
          DropResult r = k.drop_cap(op.cap);
          actual = {r.kind, kNullCap, r.revoked};
          break;
        }
        case KernelOp::Kind::Load: {
          AccessResult r = k.access_load(op.cap, op.a, op.b);
          actual = {r.kind, kNullCap, r.changed};
          break;
        }
        case KernelOp::Kind::Store: {
          AccessResult r = k.access_store(op.cap, op.a, op.b);
          actual = {r.kind, kNullCap, r.changed};
          break;
        }
      }
      REQUIRE(actual == expected);
    }

    std::map<CapId, Capability> view = k.snapshot();
    REQUIRE(view.size() == state.caps.size());
    for (const auto& [id, cap] : state.caps) {
      const Capability& mine = view.at(id);
      REQUIRE(mine.perm == cap.perm);
      REQUIRE(mine.lo == cap.lo);
      REQUIRE(mine.hi == cap.hi);
      REQUIRE(mine.parent == cap.parent);
      REQUIRE(mine.tag == cap.tag);
    }
  }
}
