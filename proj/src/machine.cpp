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

#include "capsim/machine.hpp"

#include <algorithm>
#include <sstream>

namespace capsim {

namespace {

std::uint64_t slot_base(std::uint64_t addr) { return addr & ~std::uint64_t{7}; }

bool slot_aligned(std::uint64_t addr, std::uint64_t width) {
  return width == 8 && (addr & 7) == 0;
}

}  // namespace

Machine::Machine(MachineConfig config)
    : config_(config),
      kernel_(config.kernel, config.kernel_debug),
      regs_(kNumRegisters) {}

void Machine::write_reg(int rd, std::uint64_t value,
                        std::vector<CapId> provenance) {
  if (rd == 0) return;  // r0 is hard-wired
  regs_[rd].value = value;
  regs_[rd].provenance = std::move(provenance);
}

std::vector<CapId> Machine::merged_provenance(const std::vector<CapId>& a,
                                              const std::vector<CapId>& b,
                                              std::size_t event_index,
                                              RunResult& result) {
  std::vector<CapId> merged;
  for (const std::vector<CapId>* src : {&a, &b}) {
    for (CapId id : *src) {
      if (std::find(merged.begin(), merged.end(), id) == merged.end()) {
        merged.push_back(id);
      }
    }
  }
  if (merged.size() > config_.provenance_bound) {
    std::size_t dropped = merged.size() - config_.provenance_bound;
    merged.erase(merged.begin(), merged.begin() + dropped);
    std::ostringstream msg;
    msg << "provenance list exceeded bound " << config_.provenance_bound
        << "; dropped " << dropped << " oldest entries";
    result.diagnostics.push_back(
        Diagnostic{event_index, DiagnosticKind::ProvenanceTruncated,
                   msg.str()});
  }
  return merged;
}

CapId Machine::resolve_provenance(int reg_index, std::uint64_t lo,
                                  std::uint64_t hi, std::size_t event_index,
                                  RunResult& result) {
  Register& reg = regs_[reg_index];
  if (hi <= lo) return kNullCap;
  std::uint64_t width = hi - lo;
  CapId best_valid = kNullCap;
  CapId best_any = kNullCap;
  int valid_count = 0;
  for (CapId id : reg.provenance) {
    const Capability& cap = kernel_.cap(id);
    if (!cap.contains(lo, width)) continue;
    if (id > best_any) best_any = id;
    if (cap.valid()) {
      ++valid_count;
      if (id > best_valid) best_valid = id;
    }
  }
  CapId chosen = best_valid != kNullCap ? best_valid : best_any;
  if (chosen == kNullCap) return kNullCap;
  if (valid_count > 1) {
    std::ostringstream msg;
    msg << "several valid capabilities cover the access; keeping "
        << chosen;
    result.diagnostics.push_back(Diagnostic{
        event_index, DiagnosticKind::ProvenanceAmbiguous, msg.str()});
  }
  if (reg_index != 0) reg.provenance = {chosen};
  return chosen;
}

bool Machine::acquire_slot(CapId id, RunResult& result) {
  if (slot_holders_.size() >= config_.pool_size) {
    std::size_t freed = reclaim_metadata();
    result.slots_reclaimed += freed;
    if (freed == 0) return false;
  }
  slot_holders_.insert(id);
  return true;
}

std::size_t Machine::reclaim_metadata() {
  std::unordered_set<CapId> in_registers;
  for (const Register& reg : regs_) {
    for (CapId id : reg.provenance) in_registers.insert(id);
  }
  std::size_t freed = 0;
  for (auto it = slot_holders_.begin(); it != slot_holders_.end();) {
    CapId id = *it;
    auto rc = refcount_.find(id);
    bool referenced = rc != refcount_.end() && rc->second > 0;
    if (!kernel_.cap(id).valid() && !referenced &&
        in_registers.count(id) == 0) {
      it = slot_holders_.erase(it);
      ++freed;
    } else {
      ++it;
    }
  }
  return freed;
}

std::vector<CapId> Machine::reclaim_eligible() const {
  std::unordered_set<CapId> in_registers;
  for (const Register& reg : regs_) {
    for (CapId id : reg.provenance) in_registers.insert(id);
  }
  std::vector<CapId> out;
  for (CapId id : slot_holders_) {
    auto rc = refcount_.find(id);
    bool referenced = rc != refcount_.end() && rc->second > 0;
    if (!kernel_.cap(id).valid() && !referenced &&
        in_registers.count(id) == 0) {
      out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Machine::set_shadow(std::uint64_t slot,
                         const std::vector<CapId>& provenance) {
  auto it = shadow_.find(slot);
  if (it != shadow_.end()) {
    for (CapId id : it->second) --refcount_[id];
    shadow_.erase(it);
  }
  if (!provenance.empty()) {
    for (CapId id : provenance) ++refcount_[id];
    shadow_.emplace(slot, provenance);
  }
}

void Machine::clear_shadow_range(std::uint64_t addr, std::uint64_t width) {
  for (std::uint64_t slot = slot_base(addr); slot <= slot_base(addr + width - 1);
       slot += 8) {
    set_shadow(slot, {});
    if (slot > ~std::uint64_t{0} - 8) break;
  }
}

std::uint64_t Machine::refcount(CapId id) const {
  auto it = refcount_.find(id);
  return it == refcount_.end() ? 0 : it->second;
}

bool Machine::audit_refcounts(std::string* message) const {
  std::unordered_map<CapId, std::uint64_t> recount;
  for (const auto& [slot, provenance] : shadow_) {
    for (CapId id : provenance) ++recount[id];
  }
  for (const auto& [id, count] : refcount_) {
    if (count != 0 && recount[id] != count) {
      if (message) {
        std::ostringstream msg;
        msg << "capability " << id << ": refcount " << count
            << " but " << recount[id] << " shadow slots hold it";
        *message = msg.str();
      }
      return false;
    }
  }
  for (const auto& [id, count] : recount) {
    auto it = refcount_.find(id);
    std::uint64_t recorded = it == refcount_.end() ? 0 : it->second;
    if (recorded != count) {
      if (message) {
        std::ostringstream msg;
        msg << "capability " << id << ": " << count
            << " shadow slots but refcount " << recorded;
        *message = msg.str();
      }
      return false;
    }
  }
  return true;
}

Violation Machine::make_violation(std::size_t index, ViolationKind kind,
                                  CapId cap, std::uint64_t addr,
                                  std::uint64_t width) {
  Violation v;
  v.event_index = index;
  v.kind = kind;
  v.cap = cap;
  if (cap != kNullCap) v.parents = kernel_.parent_chain(cap);
  v.addr = addr;
  v.width = width;
  std::ostringstream msg;
  msg << to_string(kind);
  if (cap != kNullCap) {
    const Capability& c = kernel_.cap(cap);
    msg << ": capability " << cap << " [" << std::hex << "0x" << c.lo
        << ", 0x" << c.hi << std::dec << ") perm " << to_string(c.perm)
        << " tag " << to_string(c.tag);
  }
  v.message = msg.str();
  return v;
}

Machine::StepOutcome Machine::exec(const TraceEvent& ev, std::size_t index,
                                   RunResult& result) {
  auto violation = [&](ViolationKind kind, CapId cap, std::uint64_t addr,
                       std::uint64_t width,
                       int strip_reg = -1) -> StepOutcome {
    result.violations.push_back(
        make_violation(index, kind, cap, addr, width));
    if (!config_.halt_on_violation && strip_reg > 0) {
      regs_[strip_reg].provenance.clear();
    }
    return {kind, config_.halt_on_violation};
  };

  switch (ev.op) {
    case Opcode::Li:
      write_reg(ev.rd, ev.imm, {});
      return {};
    case Opcode::Mv:
      write_reg(ev.rd, regs_[ev.rs1].value, regs_[ev.rs1].provenance);
      return {};
    case Opcode::Addi:
      write_reg(ev.rd, regs_[ev.rs1].value + ev.imm,
                regs_[ev.rs1].provenance);
      return {};
    case Opcode::Add:
      write_reg(ev.rd, regs_[ev.rs1].value + regs_[ev.rs2].value,
                merged_provenance(regs_[ev.rs1].provenance,
                                  regs_[ev.rs2].provenance, index, result));
      return {};
    case Opcode::Alloc: {
      std::uint64_t lo = ev.imm;
      std::uint64_t hi = ev.imm + ev.len;
      if (lo >= hi) {
        // Let the kernel reject it so both engines see the same op.
        op_log_.push_back(
            KernelOp{KernelOp::Kind::Alloc, kNullCap, BorrowKind::Mut,
                     ev.alloc_tag, lo, hi});
        kernel_.alloc(lo, hi, ev.alloc_tag);
        op_outcomes_.push_back({ViolationKind::EmptyRange, kNullCap, {}});
        return violation(ViolationKind::EmptyRange, kNullCap, lo, ev.len);
      }
      CapId placeholder = kernel_.size() + 1;
      if (!acquire_slot(placeholder, result)) {
        return violation(ViolationKind::PoolExhausted, kNullCap, lo, ev.len);
      }
      op_log_.push_back(KernelOp{KernelOp::Kind::Alloc, kNullCap,
                                 BorrowKind::Mut, ev.alloc_tag, lo, hi});
      AllocResult r = kernel_.alloc(lo, hi, ev.alloc_tag);
      op_outcomes_.push_back({ViolationKind::None, r.id, {}});
      ++result.caps_created;
      write_reg(ev.rd, lo, {r.id});
      return {};
    }
    case Opcode::Borrow: {
      std::uint64_t ptr = regs_[ev.rs1].value;
      CapId src = resolve_provenance(ev.rs1, ptr, ptr + 1, index, result);
      if (src == kNullCap) {
        return violation(ViolationKind::UntrackedAccess, kNullCap, ptr, 1,
                         ev.rs1);
      }
      std::uint64_t lo = ev.has_bounds ? ev.lo : kernel_.cap(src).lo;
      std::uint64_t hi = ev.has_bounds ? ev.hi : kernel_.cap(src).hi;
      op_log_.push_back(
          KernelOp{KernelOp::Kind::Borrow, src, ev.bkind, CapTag::Ref, lo,
                   hi});
      ViolationKind check = kernel_.borrow_precheck(src, ev.bkind, lo, hi);
      if (check != ViolationKind::None) {
        op_outcomes_.push_back({check, kNullCap, {}});
        return violation(check, src, lo, hi - lo, ev.rs1);
      }
      if (!acquire_slot(kernel_.size() + 1, result)) {
        op_log_.pop_back();  // the kernel never saw this one
        return violation(ViolationKind::PoolExhausted, src, lo, hi - lo);
      }
      BorrowResult r = kernel_.borrow(src, ev.bkind, lo, hi);
      op_outcomes_.push_back({ViolationKind::None, r.id, {}});
      ++result.caps_created;
      write_reg(ev.rd, ptr, {r.id});
      return {};
    }
    case Opcode::Drop: {
      std::uint64_t ptr = regs_[ev.rs1].value;
      CapId target = resolve_provenance(ev.rs1, ptr, ptr + 1, index, result);
      if (target == kNullCap) {
        return violation(ViolationKind::UntrackedAccess, kNullCap, ptr, 1,
                         ev.rs1);
      }
      op_log_.push_back(KernelOp{KernelOp::Kind::Drop, target,
                                 BorrowKind::Mut, CapTag::Ref, 0, 0});
      DropResult r = kernel_.drop_cap(target);
      op_outcomes_.push_back({r.kind, kNullCap, r.revoked});
      if (!r.ok()) {
        return violation(r.kind, target, 0, 0, ev.rs1);
      }
      result.caps_invalidated += r.revoked.size();
      return {};
    }
    case Opcode::Ld:
    case Opcode::Sd: {
      bool is_store = ev.op == Opcode::Sd;
      std::uint64_t addr =
          regs_[ev.rs1].value + static_cast<std::uint64_t>(ev.off);
      std::uint64_t width = ev.width;
      std::uint64_t end = addr + width;
      if (end < addr) {
        // Wrapped range: no capability can contain it; treat as untracked
        // in strict terms.
        return violation(ViolationKind::UntrackedAccess, kNullCap, addr,
                         width, ev.rs1);
      }
      CapId cap = resolve_provenance(ev.rs1, addr, end, index, result);
      if (cap == kNullCap) {
        bool tracked_region = kernel_.intersects_live_root(addr, end);
        if (config_.strict || tracked_region) {
          return violation(ViolationKind::UntrackedAccess, kNullCap, addr,
                           width, ev.rs1);
        }
        // Untracked foreign memory in compat mode: plain data movement.
      } else {
        KernelOp op{is_store ? KernelOp::Kind::Store : KernelOp::Kind::Load,
                    cap, BorrowKind::Mut, CapTag::Ref, addr, width};
        op_log_.push_back(op);
        AccessResult r = is_store ? kernel_.access_store(cap, addr, width)
                                  : kernel_.access_load(cap, addr, width);
        op_outcomes_.push_back({r.kind, kNullCap, r.changed});
        if (!r.ok()) {
          return violation(r.kind, cap, addr, width, ev.rs1);
        }
        if (is_store) result.caps_invalidated += r.changed.size();
        access_log_.push_back(
            oracle::AccessRecord{step_, is_store, cap, addr, end});
      }
      if (is_store) {
        std::uint64_t value = regs_[ev.rs2].value;
        for (std::uint64_t i = 0; i < width; ++i) {
          memory_[addr + i] = static_cast<std::uint8_t>(value >> (8 * i));
        }
        if (slot_aligned(addr, width)) {
          set_shadow(addr, regs_[ev.rs2].provenance);
        } else {
          clear_shadow_range(addr, width);
        }
      } else {
        std::uint64_t value = 0;
        for (std::uint64_t i = 0; i < width; ++i) {
          auto it = memory_.find(addr + i);
          std::uint64_t byte = it == memory_.end() ? 0 : it->second;
          value |= byte << (8 * i);
        }
        std::vector<CapId> provenance;
        if (slot_aligned(addr, width)) {
          auto it = shadow_.find(addr);
          if (it != shadow_.end()) provenance = it->second;
        }
        write_reg(ev.rd, value, std::move(provenance));
      }
      return {};
    }
    case Opcode::Halt:
      return {ViolationKind::None, true};
  }
  return {};
}

RunResult Machine::run(const TraceProgram& program) {
  RunResult result;
  for (std::size_t i = 0; i < program.events.size(); ++i) {
    ++step_;
    StepOutcome outcome = exec(program.events[i], i, result);
    result.event_verdicts.push_back(outcome.verdict);
    ++result.steps;
    if (config_.audit_interval != 0 && step_ % config_.audit_interval == 0) {
      std::string message;
      if (!audit_refcounts(&message)) {
        result.audit_failures.push_back(message);
      }
    }
    if (outcome.halt) {
      result.halted = program.events[i].op == Opcode::Halt;
      break;
    }
  }
  std::string message;
  if (!audit_refcounts(&message)) result.audit_failures.push_back(message);
  return result;
}

}  // namespace capsim
