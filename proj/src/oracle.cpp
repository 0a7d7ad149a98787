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

#include "capsim/oracle.hpp"

#include <algorithm>

namespace capsim {
namespace oracle {

std::vector<CapId> children_of(const OracleState& state, CapId id) {
  std::vector<CapId> out;
  for (const auto& [other, cap] : state.caps) {
    if (cap.parent == id) out.push_back(other);
  }
  return out;
}

std::vector<CapId> derived_set(const OracleState& state, CapId id) {
  std::vector<CapId> out{id};
  for (CapId child : children_of(state, id)) {
    for (CapId member : derived_set(state, child)) out.push_back(member);
  }
  return out;
}

std::vector<CapId> derived_set(const OracleState& state,
                               const std::vector<CapId>& seeds) {
  std::vector<CapId> out;
  for (CapId seed : seeds) {
    for (CapId member : derived_set(state, seed)) out.push_back(member);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CapId> overlap_set(const OracleState& state, std::uint64_t lo,
                               std::uint64_t hi) {
  std::vector<CapId> out;
  for (const auto& [id, cap] : state.caps) {
    if (cap.overlaps(lo, hi)) out.push_back(id);
  }
  return out;
}

std::vector<CapId> ancestor_set(const OracleState& state, CapId id) {
  std::vector<CapId> out;
  for (CapId cur = id; cur != kNullCap; cur = state.caps.at(cur).parent) {
    out.push_back(cur);
  }
  return out;
}

CapId root_of(const OracleState& state, CapId id) {
  CapId cur = id;
  while (state.caps.at(cur).parent != kNullCap) {
    cur = state.caps.at(cur).parent;
  }
  return cur;
}

bool in_derived(const OracleState& state, CapId anc, CapId id) {
  for (CapId cur = id; cur != kNullCap; cur = state.caps.at(cur).parent) {
    if (cur == anc) return true;
  }
  return false;
}

namespace {

bool excluded(const OracleState& state, const KernelConfig& config,
              CapId accessor, CapId candidate) {
  const Capability& c = state.caps.at(candidate);
  if (config.raw_pointer_relaxation && c.tag == CapTag::RawPtr &&
      c.parent != kNullCap && in_derived(state, c.parent, accessor)) {
    return true;
  }
  if (config.cell_relaxation) {
    for (CapId u : ancestor_set(state, accessor)) {
      if (state.caps.at(u).tag == CapTag::Cell &&
          !in_derived(state, u, candidate)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<CapId> conflict_closure(const OracleState& state,
                                    const KernelConfig& config, CapId accessor,
                                    std::uint64_t lo, std::uint64_t hi) {
  std::vector<CapId> conflict;
  for (CapId j : overlap_set(state, lo, hi)) {
    if (in_derived(state, j, accessor)) continue;  // j in Ancestors(accessor)
    if (excluded(state, config, accessor, j)) continue;
    conflict.push_back(j);
  }
  return derived_set(state, conflict);
}

OpOutcome revoke(OracleState& state, const std::vector<CapId>& closure) {
  OpOutcome out;
  for (CapId id : closure) {
    Capability& cap = state.caps.at(id);
    if (cap.perm != Permission::NA) {
      cap.perm = Permission::NA;
      out.changed.push_back(id);
    }
  }
  std::sort(out.changed.begin(), out.changed.end());
  return out;
}

}  // namespace

OpOutcome oracle_step(OracleState& state, const KernelOp& op,
                      const KernelConfig& config) {
  auto known = [&](CapId id) { return state.caps.count(id) != 0; };
  switch (op.kind) {
    case KernelOp::Kind::Alloc: {
      if (op.a >= op.b) return {ViolationKind::EmptyRange, kNullCap, {}};
      CapId id = state.next_id++;
      state.caps.emplace(
          id, Capability{op.a, op.b, Permission::RW, kNullCap, op.tag});
      return {ViolationKind::None, id, {}};
    }
    case KernelOp::Kind::Borrow: {
      if (!known(op.cap)) return {ViolationKind::MalformedEvent, kNullCap, {}};
      const Capability& src = state.caps.at(op.cap);
      if (src.perm == Permission::NA) {
        return {ViolationKind::BorrowFromInvalid, kNullCap, {}};
      }
      if (borrow_kind_needs_write(op.bkind) && src.perm != Permission::RW) {
        return {ViolationKind::BorrowMutFromRo, kNullCap, {}};
      }
      if (!(src.lo <= op.a && op.a < op.b && op.b <= src.hi)) {
        return {ViolationKind::BoundsNotSubset, kNullCap, {}};
      }
      CapId id = state.next_id++;
      state.caps.emplace(id, Capability{op.a, op.b, borrow_kind_perm(op.bkind),
                                        op.cap, borrow_kind_tag(op.bkind)});
      return {ViolationKind::None, id, {}};
    }
    case KernelOp::Kind::Drop: {
      if (!known(op.cap)) return {ViolationKind::MalformedEvent, kNullCap, {}};
      if (state.caps.at(op.cap).perm == Permission::NA) {
        return {ViolationKind::DropInvalid, kNullCap, {}};
      }
      return revoke(state, derived_set(state, root_of(state, op.cap)));
    }
    case KernelOp::Kind::Store: {
      if (!known(op.cap) || op.b == 0) {
        return {ViolationKind::MalformedEvent, kNullCap, {}};
      }
      const Capability& cap = state.caps.at(op.cap);
      if (cap.perm == Permission::NA) {
        return {ViolationKind::InvalidCapabilityStore, kNullCap, {}};
      }
      if (cap.perm != Permission::RW) {
        return {ViolationKind::PermissionStore, kNullCap, {}};
      }
      if (!cap.contains(op.a, op.b)) {
        return {ViolationKind::OutOfBoundsStore, kNullCap, {}};
      }
      return revoke(state, conflict_closure(state, config, op.cap, op.a,
                                            op.a + op.b));
    }
    case KernelOp::Kind::Load: {
      if (!known(op.cap) || op.b == 0) {
        return {ViolationKind::MalformedEvent, kNullCap, {}};
      }
      const Capability& cap = state.caps.at(op.cap);
      if (cap.perm == Permission::NA) {
        return {ViolationKind::InvalidCapabilityLoad, kNullCap, {}};
      }
      if (!cap.contains(op.a, op.b)) {
        return {ViolationKind::OutOfBoundsLoad, kNullCap, {}};
      }
      OpOutcome out;
      for (CapId id : conflict_closure(state, config, op.cap, op.a,
                                       op.a + op.b)) {
        Capability& member = state.caps.at(id);
        if (member.perm == Permission::RW) {
          member.perm = Permission::RO;
          out.changed.push_back(id);
        }
      }
      std::sort(out.changed.begin(), out.changed.end());
      return out;
    }
  }
  return {ViolationKind::MalformedEvent, kNullCap, {}};
}

std::vector<CapId> check_well_nested(const OracleState& state) {
  std::vector<CapId> violations;
  for (const auto& [id, cap] : state.caps) {
    if (cap.perm == Permission::NA || cap.parent == kNullCap) continue;
    auto parent = state.caps.find(cap.parent);
    if (parent == state.caps.end() ||
        parent->second.perm == Permission::NA) {
      violations.push_back(id);
    }
  }
  return violations;
}

ReplayedLog replay(const std::vector<KernelOp>& ops,
                   const KernelConfig& config) {
  ReplayedLog log;
  for (std::size_t step = 0; step < ops.size(); ++step) {
    const KernelOp& op = ops[step];
    OpOutcome outcome = oracle_step(log.final_state, op, config);
    if (outcome.created != kNullCap) {
      CapHistory h;
      h.parent = op.kind == KernelOp::Kind::Borrow ? op.cap : kNullCap;
      h.tag = log.final_state.caps.at(outcome.created).tag;
      h.created_step = step;
      log.history.emplace(outcome.created, h);
    }
    bool invalidating = op.kind == KernelOp::Kind::Drop ||
                        op.kind == KernelOp::Kind::Store;
    if (invalidating) {
      for (CapId id : outcome.changed) {
        log.history.at(id).invalidated_step = step;
      }
    }
    if ((op.kind == KernelOp::Kind::Load ||
         op.kind == KernelOp::Kind::Store) &&
        outcome.verdict == ViolationKind::None) {
      log.accesses.push_back(AccessRecord{step,
                                          op.kind == KernelOp::Kind::Store,
                                          op.cap, op.a, op.a + op.b});
    }
    log.outcomes.push_back(std::move(outcome));
  }
  return log;
}

namespace {

std::vector<CapId> static_ancestors(const std::map<CapId, CapHistory>& history,
                                    CapId id) {
  std::vector<CapId> out;
  for (CapId cur = id; cur != kNullCap; cur = history.at(cur).parent) {
    out.push_back(cur);
  }
  return out;
}

bool contains(const std::vector<CapId>& xs, CapId x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

}  // namespace

std::vector<std::pair<std::uint64_t, std::uint64_t>> check_exclusive_access(
    const std::vector<AccessRecord>& log,
    const std::map<CapId, CapHistory>& history, const KernelConfig& config) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> violations;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const AccessRecord& first = log[i];
    std::vector<CapId> first_anc = static_ancestors(history, first.cap);
    bool first_has_cell = false;
    if (config.cell_relaxation) {
      for (CapId u : first_anc) {
        if (history.at(u).tag == CapTag::Cell) first_has_cell = true;
      }
    }
    for (std::size_t j = i + 1; j < log.size(); ++j) {
      const AccessRecord& second = log[j];
      if (!(first.lo < second.hi && second.lo < first.hi)) continue;
      // Directions: store-then-anything, load-then-store.
      if (!first.is_store && !second.is_store) continue;
      std::vector<CapId> second_anc = static_ancestors(history, second.cap);
      bool violated = false;
      for (CapId c : second_anc) {
        if (contains(first_anc, c)) continue;  // first access inside D(c)
        const CapHistory& h = history.at(c);
        if (h.created_step > first.step) continue;
        if (h.invalidated_step <= second.step) continue;
        if (config.raw_pointer_relaxation && h.tag == CapTag::RawPtr &&
            h.parent != kNullCap && contains(first_anc, h.parent)) {
          continue;
        }
        if (first_has_cell) {
          bool exempt = false;
          for (CapId u : first_anc) {
            if (history.at(u).tag == CapTag::Cell &&
                !contains(static_ancestors(history, c), u)) {
              exempt = true;
              break;
            }
          }
          if (exempt) continue;
        }
        violated = true;
        break;
      }
      if (violated) violations.emplace_back(first.step, second.step);
    }
  }
  return violations;
}

}  // namespace oracle
}  // namespace capsim
