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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <variant>

#include "capsim/fuzz.hpp"
#include "capsim/trace.hpp"

using namespace capsim;

namespace {

TraceProgram parse_ok(const std::string& text) {
  auto result = parse_trace(text);
  auto* error = std::get_if<ParseError>(&result);
  if (error) {
    FAIL(error->line << ":" << error->column << ": " << error->message);
  }
  return std::get<TraceProgram>(result);
}

ParseError parse_err(const std::string& text) {
  auto result = parse_trace(text);
  REQUIRE(std::holds_alternative<ParseError>(result));
  return std::get<ParseError>(result);
}

}  // namespace

TEST_CASE("every opcode parses") {
  TraceProgram p = parse_ok(
      "li r1, 42\n"
      "mv r2, r1\n"
      "add r3, r1, r2\n"
      "addi r4, r3, 16\n"
      "alloc r5, 0x1000, 64\n"
      "alloc r6, 0x2000, 8, kind=cell\n"
      "borrow r7, r5, mut\n"
      "borrow r8, r5, raw-imm, 0x1000, 0x1020\n"
      "drop r5\n"
      "ld r9, 8(r7), 4\n"
      "sd r9, -8(r7), 2\n"
      "halt\n");
  REQUIRE(p.events.size() == 12);
  CHECK(p.events[0].op == Opcode::Li);
  CHECK(p.events[0].imm == 42);
  CHECK(p.events[2].rs2 == 2);
  CHECK(p.events[4].imm == 0x1000);
  CHECK(p.events[4].len == 64);
  CHECK(p.events[5].alloc_tag == CapTag::Cell);
  CHECK(p.events[6].bkind == BorrowKind::Mut);
  CHECK_FALSE(p.events[6].has_bounds);
  CHECK(p.events[7].bkind == BorrowKind::RawImm);
  CHECK(p.events[7].has_bounds);
  CHECK(p.events[7].lo == 0x1000);
  CHECK(p.events[7].hi == 0x1020);
  CHECK(p.events[9].op == Opcode::Ld);
  CHECK(p.events[9].rd == 9);
  CHECK(p.events[9].rs1 == 7);
  CHECK(p.events[9].off == 8);
  CHECK(p.events[9].width == 4);
  CHECK(p.events[10].op == Opcode::Sd);
  CHECK(p.events[10].rs2 == 9);
  CHECK(p.events[10].off == -8);
  CHECK(p.events[11].op == Opcode::Halt);
}

TEST_CASE("expectation directives attach to the next event") {
  TraceProgram p = parse_ok(
      "alloc r1, 0x1000, 8\n"
      "expect ok\n"
      "sd r0, 0(r1), 8\n"
      "expect violation out-of-bounds-store\n"
      "sd r0, 64(r1), 8\n");
  REQUIRE(p.events.size() == 3);
  CHECK_FALSE(p.events[0].expect.has_value());
  REQUIRE(p.events[1].expect.has_value());
  CHECK(p.events[1].expect->expect_ok);
  REQUIRE(p.events[2].expect.has_value());
  CHECK_FALSE(p.events[2].expect->expect_ok);
  CHECK(p.events[2].expect->kind == ViolationKind::OutOfBoundsStore);
}

TEST_CASE("comments and blank lines are skipped") {
  TraceProgram p = parse_ok(
      "# a comment\n"
      "\n"
      "alloc r1, 0x1000, 8  # trailing comment\n"
      "   \t  \n"
      "halt\n");
  CHECK(p.events.size() == 2);
  CHECK(p.events[0].line == 3);
}

TEST_CASE("parse errors carry line and column") {
  CHECK(parse_err("alloc r1, 0x1000\n").line == 1);           // missing arity
  CHECK(parse_err("alloc r1 0x1000, 8\n").line == 1);         // missing comma
  CHECK(parse_err("frobnicate r1\n").line == 1);              // unknown opcode
  CHECK(parse_err("li r1, 1\nld r2, 0(r1), 3\n").line == 2);  // bad width
  CHECK(parse_err("li r99, 1\n").line == 1);                  // bad register
  CHECK(parse_err("li r1, zork\n").line == 1);                // bad number
  CHECK(parse_err("borrow r1, r2, shared\n").line == 1);      // bad kind
  CHECK(parse_err("alloc r1, 0x1000, 8, kind=weird\n").line == 1);
  CHECK(parse_err("halt extra\n").line == 1);                 // trailing input
  CHECK(parse_err("expect violation no-such-kind\nhalt\n").line == 1);
  CHECK(parse_err("expect ok\nexpect ok\nhalt\n").line == 2);  // duplicate
  CHECK(parse_err("halt\nexpect ok\n").line == 2);  // dangling directive

  ParseError e = parse_err("li r1, 1\nli r2,\n");
  CHECK(e.line == 2);
  CHECK(e.column > 1);
}

TEST_CASE("serialization is a fixed point of parsing") {
  const std::string text =
      "expect ok\n"
      "alloc r1, 0x1000, 64, kind=cell\n"
      "borrow r2, r1, raw-mut, 0x1000, 0x1008\n"
      "sd r0, -16(r2), 8\n"
      "expect violation drop-invalid\n"
      "drop r2\n"
      "halt\n";
  TraceProgram p = parse_ok(text);
  std::string canonical = serialize_trace(p);
  TraceProgram q = parse_ok(canonical);
  CHECK(p == q);
  CHECK(serialize_trace(q) == canonical);
}

TEST_CASE("generated programs round-trip through the text form") {
  fuzz::FuzzConfig config;
  config.events_per_trace = 96;
  for (std::size_t i = 0; i < 200; ++i) {
    TraceProgram p = fuzz::generate(config, i);
    std::string text = serialize_trace(p);
    TraceProgram q = parse_ok(text);
    REQUIRE(p == q);
    REQUIRE(serialize_trace(q) == text);
  }
}

TEST_CASE("scenario corpus is canonical-stable") {
  namespace fs = std::filesystem;
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(CAPSIM_SCENARIO_DIR)) {
    if (entry.path().extension() != ".cap") continue;
    ++seen;
    std::ifstream in(entry.path());
    std::stringstream buffer;
    buffer << in.rdbuf();
    TraceProgram p = parse_ok(buffer.str());
    CHECK(p == parse_ok(serialize_trace(p)));
  }
  CHECK(seen >= 11);
}

TEST_CASE("the parser is total over arbitrary bytes") {
  std::mt19937_64 rng(7);
  const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyz0123456789 ,()=#\n\t-rx";
  for (int round = 0; round < 2000; ++round) {
    std::string text;
    std::size_t len = rng() % 200;
    for (std::size_t i = 0; i < len; ++i) {
      text.push_back(alphabet[rng() % alphabet.size()]);
    }
    auto result = parse_trace(text);  // must not crash or throw
    if (auto* program = std::get_if<TraceProgram>(&result)) {
      // Whatever parses must also round-trip.
      CHECK(*program == parse_ok(serialize_trace(*program)));
    }
  }
}
