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

#ifndef CAPSIM_FUZZ_HPP
#define CAPSIM_FUZZ_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capsim/machine.hpp"
#include "capsim/trace.hpp"
#include "capsim/types.hpp"

namespace capsim {
namespace fuzz {

// Relative weights for the event classes the generator draws from.
struct OpWeights {
  int alloc = 8;
  int borrow = 16;
  int drop = 5;
  int load = 13;
  int store = 17;
  int spill = 7;
  int reload = 7;
  int plain = 8;    // li/mv/addi on data registers
  int merge = 3;    // add-based provenance merges
  int recipe = 12;  // targeted violation patterns
};

struct FuzzConfig {
  std::uint64_t seed = 42;
  std::size_t events_per_trace = 128;
  std::size_t trace_count = 1000;
  OpWeights weights;
  KernelConfig kernel;
  KernelDebugOptions kernel_debug;
  std::vector<std::uint64_t> address_pool = {0x1000,  0x2000,  0x3000,
                                             0x4000,  0x10000, 0x20000};
  std::size_t pool_size = 65536;
  std::size_t audit_interval = 1000;
  std::size_t jobs = 1;
  // Also replays every trace through the independent naive machine and
  // compares per-event verdicts (end-to-end mode).
  bool end_to_end = false;
};

struct Discrepancy {
  std::uint64_t seed = 0;
  std::size_t trace_index = 0;
  std::size_t step = 0;
  std::string description;
  TraceProgram trace;
  TraceProgram shrunk;
};

struct DifferentialReport {
  std::vector<Discrepancy> discrepancies;
  std::map<ViolationKind, std::size_t> verdict_counts;
  std::size_t traces_run = 0;
  std::size_t traces_with_rejection = 0;
  std::size_t total_caps_created = 0;
  std::size_t total_caps_invalidated = 0;
  std::size_t total_events = 0;

  bool clean() const { return discrepancies.empty(); }
};

// Deterministic function of (config.seed, trace_index).
TraceProgram generate(const FuzzConfig& config, std::size_t trace_index);

// Runs one trace through the machine, replays the kernel-op stream on the
// oracle with per-step invariant checks, audits the work bound and the
// exclusive-access log. Returns a description of the first problem found.
struct TraceCheckOutcome {
  std::optional<std::string> failure;
  std::size_t failure_step = 0;
  RunResult machine_result;
};
TraceCheckOutcome check_trace(const FuzzConfig& config,
                              const TraceProgram& program);

DifferentialReport run_differential(const FuzzConfig& config);

// Greedy trace minimization: event deletion then operand simplification,
// repeated to a fixed point. predicate(trace) must hold on entry and holds
// on the result.
TraceProgram shrink(const TraceProgram& trace,
                    const std::function<bool(const TraceProgram&)>& predicate);

// Independent naive re-execution of the trace language used for end-to-end
// comparison: flat maps, oracle-backed capability semantics, no pooling.
std::vector<ViolationKind> naive_run(const FuzzConfig& config,
                                     const TraceProgram& program);

}  // namespace fuzz
}  // namespace capsim

#endif  // CAPSIM_FUZZ_HPP
