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

#ifndef CAPSIM_TRACE_HPP
#define CAPSIM_TRACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "capsim/types.hpp"

namespace capsim {

enum class Opcode : std::uint8_t {
  Li,
  Mv,
  Add,
  Addi,
  Alloc,
  Borrow,
  Drop,
  Ld,
  Sd,
  Halt,
};

const char* to_string(Opcode op);

// Expectation directive attached to the following event.
struct Expectation {
  bool expect_ok = true;
  ViolationKind kind = ViolationKind::None;  // meaningful when !expect_ok
  int line = 0;

  friend bool operator==(const Expectation& a, const Expectation& b) {
    return a.expect_ok == b.expect_ok && a.kind == b.kind;
  }
};

struct TraceEvent {
  Opcode op = Opcode::Halt;
  int rd = -1;
  int rs1 = -1;
  int rs2 = -1;
  std::uint64_t imm = 0;   // li value, addi immediate, alloc base address
  std::uint64_t len = 0;   // alloc length
  std::uint64_t lo = 0;    // explicit borrow bounds
  std::uint64_t hi = 0;
  bool has_bounds = false;
  BorrowKind bkind = BorrowKind::Mut;
  CapTag alloc_tag = CapTag::Ref;
  std::int64_t off = 0;    // ld/sd offset
  std::uint8_t width = 8;  // ld/sd width, one of {1,2,4,8}
  std::optional<Expectation> expect;
  int line = 0;

  friend bool operator==(const TraceEvent& a, const TraceEvent& b) {
    return a.op == b.op && a.rd == b.rd && a.rs1 == b.rs1 && a.rs2 == b.rs2 &&
           a.imm == b.imm && a.len == b.len && a.lo == b.lo && a.hi == b.hi &&
           a.has_bounds == b.has_bounds && a.bkind == b.bkind &&
           a.alloc_tag == b.alloc_tag && a.off == b.off &&
           a.width == b.width && a.expect == b.expect;
  }
};

struct TraceProgram {
  std::vector<TraceEvent> events;

  friend bool operator==(const TraceProgram& a, const TraceProgram& b) {
    return a.events == b.events;
  }
};

struct ParseError {
  int line = 0;
  int column = 0;
  std::string message;
};

// Parses the .cap textual format. Every input either parses or yields a
// located error; no exceptions escape.
std::variant<TraceProgram, ParseError> parse_trace(std::string_view text);

// Canonical text: one event per line, single spaces, lowercase hex
// addresses, directives immediately before their event. A fixed point of
// parse-then-serialize.
std::string serialize_trace(const TraceProgram& program);

}  // namespace capsim

#endif  // CAPSIM_TRACE_HPP
