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

#include "capsim/trace.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace capsim {

const char* to_string(Opcode op) {
  switch (op) {
    case Opcode::Li:
      return "li";
    case Opcode::Mv:
      return "mv";
    case Opcode::Add:
      return "add";
    case Opcode::Addi:
      return "addi";
    case Opcode::Alloc:
      return "alloc";
    case Opcode::Borrow:
      return "borrow";
    case Opcode::Drop:
      return "drop";
    case Opcode::Ld:
      return "ld";
    case Opcode::Sd:
      return "sd";
    case Opcode::Halt:
      return "halt";
  }
  return "unknown";
}

namespace {

// Cursor over a single line. Columns are 1-based for diagnostics.
class LineCursor {
 public:
  LineCursor(std::string_view line, int line_no)
      : line_(line), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t'))
      ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= line_.size();
  }

  ParseError error(std::string message) const {
    return ParseError{line_no_, static_cast<int>(pos_) + 1,
                      std::move(message)};
  }

  std::optional<ParseError> expect_char(char c) {
    skip_ws();
    if (pos_ >= line_.size() || line_[pos_] != c) {
      return error(std::string("expected '") + c + "'");
    }
    ++pos_;
    return std::nullopt;
  }

  std::string_view word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(
                                      line_[pos_])) &&
           line_[pos_] != ',' && line_[pos_] != '(' && line_[pos_] != ')' &&
           line_[pos_] != '=') {
      ++pos_;
    }
    return line_.substr(start, pos_ - start);
  }

  // Parses a register token r0..r31.
  std::variant<int, ParseError> reg() {
    skip_ws();
    std::string_view tok = word();
    if (tok.size() < 2 || tok[0] != 'r') {
      return error("expected register");
    }
    unsigned value = 0;
    auto [ptr, ec] =
        std::from_chars(tok.data() + 1, tok.data() + tok.size(), value, 10);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || value > 31) {
      return error("expected register r0..r31");
    }
    return static_cast<int>(value);
  }

  // Decimal or 0x-hex, optional leading '-' (two's complement wrap).
  std::variant<std::uint64_t, ParseError> number() {
    skip_ws();
    std::string_view tok = word();
    if (tok.empty()) return error("expected number");
    bool negative = false;
    std::string_view digits = tok;
    if (digits.front() == '-') {
      negative = true;
      digits.remove_prefix(1);
    }
    int base = 10;
    if (digits.size() > 2 && digits[0] == '0' &&
        (digits[1] == 'x' || digits[1] == 'X')) {
      base = 16;
      digits.remove_prefix(2);
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(),
                                     digits.data() + digits.size(), value,
                                     base);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() ||
        digits.empty()) {
      return error("malformed number '" + std::string(tok) + "'");
    }
    return negative ? ~value + 1 : value;
  }

  std::size_t pos() const { return pos_; }
  std::string_view rest() const { return line_.substr(pos_); }

 private:
  std::string_view line_;
  std::size_t pos_ = 0;
  int line_no_;
};

#define CAPSIM_TAKE(var, expr)                       \
  do {                                               \
    auto result_ = (expr);                           \
    if (auto* err_ = std::get_if<ParseError>(&result_)) return *err_; \
    var = std::get<0>(result_);                      \
  } while (0)

#define CAPSIM_EXPECT(expr)                 \
  do {                                      \
    if (auto err_ = (expr)) return *err_;   \
  } while (0)

std::variant<TraceEvent, ParseError> parse_event(std::string_view opcode,
                                                 LineCursor& cur,
                                                 int line_no) {
  TraceEvent ev;
  ev.line = line_no;
  if (opcode == "li") {
    ev.op = Opcode::Li;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.imm, cur.number());
  } else if (opcode == "mv") {
    ev.op = Opcode::Mv;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.rs1, cur.reg());
  } else if (opcode == "add") {
    ev.op = Opcode::Add;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.rs1, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.rs2, cur.reg());
  } else if (opcode == "addi") {
    ev.op = Opcode::Addi;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.rs1, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.imm, cur.number());
  } else if (opcode == "alloc") {
    ev.op = Opcode::Alloc;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.imm, cur.number());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.len, cur.number());
    if (!cur.at_end()) {
      CAPSIM_EXPECT(cur.expect_char(','));
      std::string_view key = cur.word();
      if (key != "kind") return cur.error("expected 'kind=...'");
      CAPSIM_EXPECT(cur.expect_char('='));
      std::string_view kind = cur.word();
      if (kind == "cell") {
        ev.alloc_tag = CapTag::Cell;
      } else if (kind == "ref") {
        ev.alloc_tag = CapTag::Ref;
      } else {
        return cur.error("unknown alloc kind '" + std::string(kind) + "'");
      }
    }
  } else if (opcode == "borrow") {
    ev.op = Opcode::Borrow;
    CAPSIM_TAKE(ev.rd, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    CAPSIM_TAKE(ev.rs1, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    std::string_view kind = cur.word();
    auto bkind = borrow_kind_from_string(kind);
    if (!bkind) {
      return cur.error("unknown borrow kind '" + std::string(kind) + "'");
    }
    ev.bkind = *bkind;
    if (!cur.at_end()) {
      CAPSIM_EXPECT(cur.expect_char(','));
      CAPSIM_TAKE(ev.lo, cur.number());
      CAPSIM_EXPECT(cur.expect_char(','));
      CAPSIM_TAKE(ev.hi, cur.number());
      ev.has_bounds = true;
    }
  } else if (opcode == "drop") {
    ev.op = Opcode::Drop;
    CAPSIM_TAKE(ev.rs1, cur.reg());
  } else if (opcode == "ld" || opcode == "sd") {
    ev.op = opcode == "ld" ? Opcode::Ld : Opcode::Sd;
    int data_reg = -1;
    CAPSIM_TAKE(data_reg, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(','));
    std::uint64_t off = 0;
    CAPSIM_TAKE(off, cur.number());
    ev.off = static_cast<std::int64_t>(off);
    CAPSIM_EXPECT(cur.expect_char('('));
    int base_reg = -1;
    CAPSIM_TAKE(base_reg, cur.reg());
    CAPSIM_EXPECT(cur.expect_char(')'));
    CAPSIM_EXPECT(cur.expect_char(','));
    std::uint64_t width = 0;
    CAPSIM_TAKE(width, cur.number());
    if (width != 1 && width != 2 && width != 4 && width != 8) {
      return cur.error("width must be one of 1, 2, 4, 8");
    }
    ev.width = static_cast<std::uint8_t>(width);
    if (ev.op == Opcode::Ld) {
      ev.rd = data_reg;
      ev.rs1 = base_reg;
    } else {
      ev.rs2 = data_reg;
      ev.rs1 = base_reg;
    }
  } else if (opcode == "halt") {
    ev.op = Opcode::Halt;
  } else {
    return cur.error("unknown opcode '" + std::string(opcode) + "'");
  }
  if (!cur.at_end()) {
    return cur.error("trailing input after event");
  }
  return ev;
}

std::variant<Expectation, ParseError> parse_directive(LineCursor& cur,
                                                      int line_no) {
  Expectation ex;
  ex.line = line_no;
  std::string_view what = cur.word();
  if (what == "ok") {
    ex.expect_ok = true;
  } else if (what == "violation") {
    ex.expect_ok = false;
    std::string_view kind = cur.word();
    auto parsed = violation_kind_from_string(kind);
    if (!parsed || *parsed == ViolationKind::None) {
      return cur.error("unknown violation kind '" + std::string(kind) + "'");
    }
    ex.kind = *parsed;
  } else {
    return cur.error("expected 'ok' or 'violation <kind>'");
  }
  if (!cur.at_end()) {
    return cur.error("trailing input after directive");
  }
  return ex;
}

}  // namespace

std::variant<TraceProgram, ParseError> parse_trace(std::string_view text) {
  TraceProgram program;
  std::optional<Expectation> pending;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (pos == text.size() && line_no > 0) break;
    std::size_t eol = text.find('\n', pos);
    std::string_view line = eol == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    LineCursor cur(line, line_no);
    if (cur.at_end()) {
      if (eol == std::string_view::npos) break;
      continue;
    }
    std::string_view opcode = cur.word();
    if (opcode == "expect") {
      if (pending) {
        return cur.error("duplicate expect directive");
      }
      auto directive = parse_directive(cur, line_no);
      if (auto* err = std::get_if<ParseError>(&directive)) return *err;
      pending = std::get<Expectation>(directive);
    } else {
      auto event = parse_event(opcode, cur, line_no);
      if (auto* err = std::get_if<ParseError>(&event)) return *err;
      TraceEvent ev = std::get<TraceEvent>(event);
      ev.expect = pending;
      pending.reset();
      program.events.push_back(ev);
    }
    if (eol == std::string_view::npos) break;
  }
  if (pending) {
    return ParseError{pending->line, 1,
                      "expect directive with no following event"};
  }
  return program;
}

namespace {

std::string hex(std::uint64_t value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::string dec(std::uint64_t value) { return std::to_string(value); }

}  // namespace

std::string serialize_trace(const TraceProgram& program) {
  std::ostringstream out;
  for (const TraceEvent& ev : program.events) {
    if (ev.expect) {
      if (ev.expect->expect_ok) {
        out << "expect ok\n";
      } else {
        out << "expect violation " << to_string(ev.expect->kind) << "\n";
      }
    }
    switch (ev.op) {
      case Opcode::Li:
        out << "li r" << ev.rd << ", " << dec(ev.imm);
        break;
      case Opcode::Mv:
        out << "mv r" << ev.rd << ", r" << ev.rs1;
        break;
      case Opcode::Add:
        out << "add r" << ev.rd << ", r" << ev.rs1 << ", r" << ev.rs2;
        break;
      case Opcode::Addi:
        out << "addi r" << ev.rd << ", r" << ev.rs1 << ", " << dec(ev.imm);
        break;
      case Opcode::Alloc:
        out << "alloc r" << ev.rd << ", " << hex(ev.imm) << ", "
            << dec(ev.len);
        if (ev.alloc_tag == CapTag::Cell) out << ", kind=cell";
        break;
      case Opcode::Borrow:
        out << "borrow r" << ev.rd << ", r" << ev.rs1 << ", "
            << to_string(ev.bkind);
        if (ev.has_bounds) {
          out << ", " << hex(ev.lo) << ", " << hex(ev.hi);
        }
        break;
      case Opcode::Drop:
        out << "drop r" << ev.rs1;
        break;
      case Opcode::Ld:
        out << "ld r" << ev.rd << ", " << ev.off << "(r" << ev.rs1 << "), "
            << static_cast<int>(ev.width);
        break;
      case Opcode::Sd:
        out << "sd r" << ev.rs2 << ", " << ev.off << "(r" << ev.rs1 << "), "
            << static_cast<int>(ev.width);
        break;
      case Opcode::Halt:
        out << "halt";
        break;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace capsim
