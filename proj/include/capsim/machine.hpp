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

#ifndef CAPSIM_MACHINE_HPP
#define CAPSIM_MACHINE_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "capsim/kernel.hpp"
#include "capsim/ops.hpp"
#include "capsim/oracle.hpp"
#include "capsim/trace.hpp"
#include "capsim/types.hpp"

namespace capsim {

inline constexpr int kNumRegisters = 32;

struct Register {
  std::uint64_t value = 0;
  std::vector<CapId> provenance;  // oldest first, bounded
};

struct MachineConfig {
  KernelConfig kernel;
  KernelDebugOptions kernel_debug;
  bool strict = false;             // reject all untracked accesses
  bool halt_on_violation = true;   // else continue with provenance stripped
  std::size_t pool_size = 65536;
  std::size_t provenance_bound = 8;
  // When nonzero, a full refcount audit runs every N steps; a mismatch is
  // reported through RunResult::audit_failures.
  std::size_t audit_interval = 0;
};

struct Violation {
  std::size_t event_index = 0;
  ViolationKind kind = ViolationKind::None;
  CapId cap = kNullCap;
  std::vector<CapId> parents;  // root..cap
  std::uint64_t addr = 0;
  std::uint64_t width = 0;
  std::string message;
};

enum class DiagnosticKind : std::uint8_t {
  ProvenanceAmbiguous,
  ProvenanceTruncated,
};

struct Diagnostic {
  std::size_t event_index = 0;
  DiagnosticKind kind = DiagnosticKind::ProvenanceAmbiguous;
  std::string message;
};

struct RunResult {
  std::vector<Violation> violations;
  std::vector<Diagnostic> diagnostics;
  std::vector<ViolationKind> event_verdicts;  // one per executed event
  std::vector<std::string> audit_failures;
  bool halted = false;
  std::size_t steps = 0;
  std::size_t caps_created = 0;
  std::size_t caps_invalidated = 0;
  std::size_t slots_reclaimed = 0;
};

// Register/memory machine with shadow capability metadata. Executes parsed
// trace programs against a semantics kernel, resolving value provenance at
// first memory use and recycling metadata slots by reference counting.
class Machine {
 public:
  explicit Machine(MachineConfig config = {});

  // Executes the whole program per the configured violation policy.
  RunResult run(const TraceProgram& program);

  const Kernel& kernel() const { return kernel_; }
  const std::vector<KernelOp>& op_log() const { return op_log_; }
  // One outcome per logged op, as observed by the kernel.
  const std::vector<OpOutcome>& op_outcomes() const { return op_outcomes_; }
  const std::vector<oracle::AccessRecord>& access_log() const {
    return access_log_;
  }
  const Register& reg(int index) const { return regs_[index]; }
  std::uint64_t step_count() const { return step_; }

  // Shadow/metadata introspection for audits and tests.
  std::uint64_t refcount(CapId id) const;
  const std::unordered_map<std::uint64_t, std::vector<CapId>>& shadow() const {
    return shadow_;
  }
  std::size_t pool_in_use() const { return slot_holders_.size(); }
  std::size_t pool_capacity() const { return config_.pool_size; }
  bool holds_slot(CapId id) const { return slot_holders_.count(id) != 0; }

  // Recounts shadow slots against the reference counts; returns true when
  // they agree exactly, otherwise fills message.
  bool audit_refcounts(std::string* message) const;

  // The set of capabilities a reclamation pass would free right now:
  // invalid, refcount zero, and absent from every register.
  std::vector<CapId> reclaim_eligible() const;

 private:
  struct StepOutcome {
    ViolationKind verdict = ViolationKind::None;
    bool halt = false;
  };

  StepOutcome exec(const TraceEvent& ev, std::size_t index,
                   RunResult& result);
  void write_reg(int rd, std::uint64_t value, std::vector<CapId> provenance);
  // Resolves a register's provenance for an access over [lo, hi). Returns
  // kNullCap when nothing tracks the range; collapses the register to the
  // chosen id otherwise.
  CapId resolve_provenance(int reg_index, std::uint64_t lo, std::uint64_t hi,
                           std::size_t event_index, RunResult& result);
  std::vector<CapId> merged_provenance(const std::vector<CapId>& a,
                                       const std::vector<CapId>& b,
                                       std::size_t event_index,
                                       RunResult& result);
  // Acquires a metadata slot for a new capability, reclaiming if exhausted.
  bool acquire_slot(CapId id, RunResult& result);
  std::size_t reclaim_metadata();
  void set_shadow(std::uint64_t slot, const std::vector<CapId>& provenance);
  void clear_shadow_range(std::uint64_t addr, std::uint64_t width);
  Violation make_violation(std::size_t index, ViolationKind kind, CapId cap,
                           std::uint64_t addr, std::uint64_t width);

  MachineConfig config_;
  Kernel kernel_;
  std::vector<Register> regs_;
  std::unordered_map<std::uint64_t, std::uint8_t> memory_;
  std::unordered_map<std::uint64_t, std::vector<CapId>> shadow_;
  std::unordered_map<CapId, std::uint64_t> refcount_;
  std::unordered_set<CapId> slot_holders_;
  std::vector<KernelOp> op_log_;
  std::vector<OpOutcome> op_outcomes_;
  std::vector<oracle::AccessRecord> access_log_;
  std::uint64_t step_ = 0;
};

}  // namespace capsim

#endif  // CAPSIM_MACHINE_HPP
