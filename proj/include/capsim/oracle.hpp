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

#ifndef CAPSIM_ORACLE_HPP
#define CAPSIM_ORACLE_HPP

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "capsim/ops.hpp"
#include "capsim/types.hpp"

namespace capsim {
namespace oracle {

// Flat capability map with no indexes and no disconnection. Invalidated
// entries are retained forever. All queries recompute from scratch.
struct OracleState {
  std::map<CapId, Capability> caps;
  CapId next_id = 1;
};

// Auxiliary set queries, recomputed by full scans / recursion each call.
std::vector<CapId> children_of(const OracleState& state, CapId id);
std::vector<CapId> derived_set(const OracleState& state, CapId id);
std::vector<CapId> derived_set(const OracleState& state,
                               const std::vector<CapId>& seeds);
std::vector<CapId> overlap_set(const OracleState& state, std::uint64_t lo,
                               std::uint64_t hi);
std::vector<CapId> ancestor_set(const OracleState& state, CapId id);
CapId root_of(const OracleState& state, CapId id);
bool in_derived(const OracleState& state, CapId anc, CapId id);

// Applies one kernel-level operation to the state and returns the verdict
// plus the created id / changed set. Total: every well-formed event yields
// exactly one verdict; malformed inputs (width 0, unknown capability) yield
// MalformedEvent.
OpOutcome oracle_step(OracleState& state, const KernelOp& op,
                      const KernelConfig& config);

// Returns every valid capability whose parent is missing or invalid.
std::vector<CapId> check_well_nested(const OracleState& state);

// --- Exclusive-access checking over event logs ---

// A successful capability-checked memory access.
struct AccessRecord {
  std::uint64_t step = 0;
  bool is_store = false;
  CapId cap = kNullCap;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

// Per-capability lifetime facts. Parent links and tags are immutable after
// creation, so one record per capability suffices.
struct CapHistory {
  CapId parent = kNullCap;
  CapTag tag = CapTag::Ref;
  std::uint64_t created_step = 0;
  std::uint64_t invalidated_step = kNeverInvalidated;

  static constexpr std::uint64_t kNeverInvalidated = ~std::uint64_t{0};
};

struct ReplayedLog {
  std::vector<AccessRecord> accesses;
  std::map<CapId, CapHistory> history;
  std::vector<OpOutcome> outcomes;
  OracleState final_state;
};

// Reconstructs access log and capability histories by replaying the op
// stream (steps are op indices).
ReplayedLog replay(const std::vector<KernelOp>& ops,
                   const KernelConfig& config);

// Returns every pair (t1, t2) of access steps violating the exclusive
// access invariant: within the validity window of some capability c, an
// aliasing store (resp. load) from outside D(c) at t1 followed by any
// access (resp. a store) from inside D(c) at t2. The policy relaxations
// that exempt conflicts in the engine exempt the matching pairs here.
std::vector<std::pair<std::uint64_t, std::uint64_t>> check_exclusive_access(
    const std::vector<AccessRecord>& log,
    const std::map<CapId, CapHistory>& history, const KernelConfig& config);

}  // namespace oracle
}  // namespace capsim

#endif  // CAPSIM_ORACLE_HPP
