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

#include "capsim/fuzz.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "capsim/oracle.hpp"

namespace capsim {
namespace fuzz {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Register conventions inside generated traces: r1..r23 hold pointers,
// r24..r30 hold plain data, r31 is the spill frame pointer.
constexpr int kFirstPtrReg = 1;
constexpr int kLastPtrReg = 23;
constexpr int kFirstDataReg = 24;
constexpr int kLastDataReg = 30;
constexpr int kFrameReg = 31;
constexpr std::uint64_t kFrameBase = 0x200000;
constexpr std::uint64_t kFrameSize = 256;

// What the generator knows about a register. Bounds are the generator's
// view and may be stale after revocations; the engines decide the truth.
struct RegModel {
  bool pointer = false;
  std::uint64_t value = 0;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

class Generator {
 public:
  Generator(const FuzzConfig& config, std::uint64_t stream)
      : config_(config), rng_(splitmix(config.seed ^ splitmix(stream))) {}

  TraceProgram run() {
    emit_alloc_at(kFrameReg, kFrameBase, kFrameSize, CapTag::Ref);
    // A couple of seed allocations so early accesses have targets.
    emit_alloc(ptr_reg());
    emit_alloc(ptr_reg());
    while (program_.events.size() < config_.events_per_trace) {
      step();
    }
    TraceEvent halt;
    halt.op = Opcode::Halt;
    program_.events.push_back(halt);
    return std::move(program_);
  }

 private:
  std::uint64_t uniform(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_);
  }
  bool chance(int percent) { return uniform(100) < std::uint64_t(percent); }

  int ptr_reg() {
    return kFirstPtrReg +
           static_cast<int>(uniform(kLastPtrReg - kFirstPtrReg + 1));
  }
  int data_reg() {
    return kFirstDataReg +
           static_cast<int>(uniform(kLastDataReg - kFirstDataReg + 1));
  }
  // A pointer register the generator still believes in, or -1.
  int live_ptr_reg() {
    std::vector<int> candidates;
    for (int r = kFirstPtrReg; r <= kLastPtrReg; ++r) {
      if (regs_[r].pointer) candidates.push_back(r);
    }
    if (candidates.empty()) return -1;
    return candidates[uniform(candidates.size())];
  }

  std::uint8_t pick_width() {
    // Provenance rides only on aligned width-8 transfers, so favor 8.
    static constexpr std::uint8_t widths[] = {8, 8, 8, 8, 4, 2, 1};
    return widths[uniform(7)];
  }

  void emit(TraceEvent ev) { program_.events.push_back(ev); }

  void emit_alloc_at(int rd, std::uint64_t base, std::uint64_t len,
                     CapTag tag) {
    TraceEvent ev;
    ev.op = Opcode::Alloc;
    ev.rd = rd;
    ev.imm = base;
    ev.len = len;
    ev.alloc_tag = tag;
    emit(ev);
    regs_[rd] = RegModel{true, base, base, base + len};
  }

  void emit_alloc(int rd) {
    std::uint64_t base =
        config_.address_pool[uniform(config_.address_pool.size())] +
        uniform(8) * 16;
    std::uint64_t len = 8 + uniform(16) * 8;
    CapTag tag = chance(10) ? CapTag::Cell : CapTag::Ref;
    emit_alloc_at(rd, base, len, tag);
  }

  void emit_borrow(int rd, int rs, BorrowKind kind, bool sub_bounds) {
    TraceEvent ev;
    ev.op = Opcode::Borrow;
    ev.rd = rd;
    ev.rs1 = rs;
    ev.bkind = kind;
    RegModel model = regs_[rs];
    if (sub_bounds && model.hi - model.lo >= 16) {
      std::uint64_t span = model.hi - model.lo;
      std::uint64_t lo = model.lo + uniform(span / 8) * 8;
      std::uint64_t hi = lo + 8 + uniform((model.hi - lo) / 8) * 8;
      if (hi > model.hi) hi = model.hi;
      ev.has_bounds = true;
      ev.lo = lo;
      ev.hi = hi;
      // The register value stays the source pointer; offsets are computed
      // against it when accessing through the narrowed capability.
      model.lo = lo;
      model.hi = hi;
    }
    emit(ev);
    regs_[rd] = model;
  }

  void emit_access(bool is_store, int base_reg, std::int64_t off,
                   std::uint8_t width, int other_reg) {
    TraceEvent ev;
    ev.op = is_store ? Opcode::Sd : Opcode::Ld;
    ev.rs1 = base_reg;
    ev.off = off;
    ev.width = width;
    if (is_store) {
      ev.rs2 = other_reg;
    } else {
      ev.rd = other_reg;
      regs_[other_reg] = RegModel{};  // reloaded value, unknown to us
    }
    emit(ev);
  }

  // In-bounds offset for the generator's view of the register, aligned to
  // the access width.
  std::int64_t in_bounds_off(const RegModel& model, std::uint8_t width) {
    std::uint64_t span = model.hi - model.lo;
    if (span < width) return 0;
    std::uint64_t slots = (span - width) / width + 1;
    std::uint64_t slot = uniform(slots);
    return static_cast<std::int64_t>(model.lo + slot * width - model.value);
  }

  void random_store() {
    int rs = live_ptr_reg();
    if (rs < 0) return;
    std::uint8_t width = pick_width();
    emit_access(true, rs, in_bounds_off(regs_[rs], width), width, data_reg());
  }

  void random_load() {
    int rs = live_ptr_reg();
    if (rs < 0) return;
    std::uint8_t width = pick_width();
    emit_access(false, rs, in_bounds_off(regs_[rs], width), width,
                data_reg());
  }

  void random_spill_reload() {
    int rs = live_ptr_reg();
    if (rs < 0) return;
    std::int64_t frame_off = static_cast<std::int64_t>(uniform(kFrameSize / 8) * 8);
    emit_access(true, kFrameReg, frame_off, 8, rs);
    if (chance(70)) {
      int rd = ptr_reg();
      emit_access(false, kFrameReg, frame_off, 8, rd);
      regs_[rd] = regs_[rs];  // provenance follows the spilled value
      regs_[rd].pointer = regs_[rs].pointer;
    }
  }

  void random_plain() {
    int rd = data_reg();
    TraceEvent ev;
    switch (uniform(3)) {
      case 0:
        ev.op = Opcode::Li;
        ev.rd = rd;
        ev.imm = uniform(1 << 20);
        break;
      case 1:
        ev.op = Opcode::Mv;
        ev.rd = rd;
        ev.rs1 = data_reg();
        break;
      default:
        ev.op = Opcode::Addi;
        ev.rd = rd;
        ev.rs1 = data_reg();
        ev.imm = uniform(64);
        break;
    }
    emit(ev);
  }

  void random_merge() {
    // add rd, rs1, r0 keeps the pointer value while exercising the merged
    // provenance path; adding two live pointers would produce a junk value.
    int rs = live_ptr_reg();
    if (rs < 0) return;
    int rd = ptr_reg();
    TraceEvent ev;
    ev.op = Opcode::Add;
    ev.rd = rd;
    ev.rs1 = rs;
    ev.rs2 = 0;
    emit(ev);
    regs_[rd] = regs_[rs];
  }

  void random_drop() {
    int rs = live_ptr_reg();
    if (rs < 0) return;
    TraceEvent ev;
    ev.op = Opcode::Drop;
    ev.rs1 = rs;
    emit(ev);
    // The whole tree dies; the generator forgets every register that could
    // alias it conservatively by keeping values but accepting rejections.
  }

  void random_borrow() {
    int rs = live_ptr_reg();
    if (rs < 0) return;
    static constexpr BorrowKind kinds[] = {BorrowKind::Mut, BorrowKind::Imm,
                                           BorrowKind::RawMut,
                                           BorrowKind::RawImm,
                                           BorrowKind::Cell};
    emit_borrow(ptr_reg(), rs, kinds[uniform(5)], chance(40));
  }

  // Targeted patterns that end in each rejection class.
  void recipe() {
    int rs = live_ptr_reg();
    switch (uniform(9)) {
      case 0: {  // use after free
        int rd = ptr_reg();
        emit_alloc(rd);
        emit_access(true, rd, 0, 8, data_reg());
        TraceEvent ev;
        ev.op = Opcode::Drop;
        ev.rs1 = rd;
        emit(ev);
        emit_access(true, rd, 0, 8, data_reg());
        break;
      }
      case 1: {  // double drop
        int rd = ptr_reg();
        emit_alloc(rd);
        TraceEvent ev;
        ev.op = Opcode::Drop;
        ev.rs1 = rd;
        emit(ev);
        emit(ev);
        break;
      }
      case 2: {  // store through a shared borrow
        if (rs < 0) break;
        int rd = ptr_reg();
        emit_borrow(rd, rs, BorrowKind::Imm, false);
        emit_access(true, rd, 0, 8, data_reg());
        break;
      }
      case 3: {  // unique borrow from a shared one
        if (rs < 0) break;
        int mid = ptr_reg();
        emit_borrow(mid, rs, BorrowKind::Imm, false);
        emit_borrow(ptr_reg(), mid, BorrowKind::Mut, false);
        break;
      }
      case 4: {  // borrow bounds outside the parent
        if (rs < 0) break;
        TraceEvent ev;
        ev.op = Opcode::Borrow;
        ev.rd = ptr_reg();
        ev.rs1 = rs;
        ev.bkind = BorrowKind::Mut;
        ev.has_bounds = true;
        ev.lo = regs_[rs].lo;
        ev.hi = regs_[rs].hi + 32;
        emit(ev);
        break;
      }
      case 5: {  // empty allocation
        TraceEvent ev;
        ev.op = Opcode::Alloc;
        ev.rd = ptr_reg();
        ev.imm = 0x9000;
        ev.len = 0;
        emit(ev);
        break;
      }
      case 6: {  // out-of-bounds access
        if (rs < 0) break;
        std::int64_t past = static_cast<std::int64_t>(
            regs_[rs].hi - regs_[rs].value + uniform(16));
        emit_access(chance(50), rs, past, 8, data_reg());
        break;
      }
      case 7: {  // untracked pointer into a tracked region
        if (rs < 0) break;
        int rd = data_reg();
        TraceEvent li;
        li.op = Opcode::Li;
        li.rd = rd;
        li.imm = regs_[rs].lo;
        emit(li);
        emit_access(true, rd, 0, 8, data_reg());
        break;
      }
      default: {  // sibling conflict: parent store kills the borrow
        if (rs < 0) break;
        int rd = ptr_reg();
        emit_borrow(rd, rs, BorrowKind::Mut, false);
        emit_access(true, rs, in_bounds_off(regs_[rs], 8), 8, data_reg());
        emit_access(true, rd, 0, 8, data_reg());
        break;
      }
    }
  }

  void step() {
    const OpWeights& w = config_.weights;
    int total = w.alloc + w.borrow + w.drop + w.load + w.store + w.spill +
                w.reload + w.plain + w.merge + w.recipe;
    int pick = static_cast<int>(uniform(total));
    if ((pick -= w.alloc) < 0) return emit_alloc(ptr_reg());
    if ((pick -= w.borrow) < 0) return random_borrow();
    if ((pick -= w.drop) < 0) return random_drop();
    if ((pick -= w.load) < 0) return random_load();
    if ((pick -= w.store) < 0) return random_store();
    if ((pick -= w.spill + w.reload) < 0) return random_spill_reload();
    if ((pick -= w.plain) < 0) return random_plain();
    if ((pick -= w.merge) < 0) return random_merge();
    recipe();
  }

  const FuzzConfig& config_;
  std::mt19937_64 rng_;
  TraceProgram program_;
  RegModel regs_[kNumRegisters];
};

std::string describe_outcome(const OpOutcome& o) {
  std::ostringstream out;
  out << to_string(o.verdict) << " created=" << o.created << " changed={";
  for (std::size_t i = 0; i < o.changed.size(); ++i) {
    if (i) out << ",";
    out << o.changed[i];
  }
  out << "}";
  return out.str();
}

MachineConfig machine_config(const FuzzConfig& config) {
  MachineConfig mc;
  mc.kernel = config.kernel;
  mc.kernel_debug = config.kernel_debug;
  mc.halt_on_violation = false;
  mc.pool_size = config.pool_size;
  mc.audit_interval = config.audit_interval;
  return mc;
}

}  // namespace

TraceProgram generate(const FuzzConfig& config, std::size_t trace_index) {
  Generator gen(config, static_cast<std::uint64_t>(trace_index));
  return gen.run();
}

TraceCheckOutcome check_trace(const FuzzConfig& config,
                              const TraceProgram& program) {
  TraceCheckOutcome out;
  Machine machine(machine_config(config));
  out.machine_result = machine.run(program);

  auto fail = [&](std::size_t step, std::string message) {
    out.failure = std::move(message);
    out.failure_step = step;
  };

  if (!out.machine_result.audit_failures.empty()) {
    fail(0, "refcount audit: " + out.machine_result.audit_failures.front());
    return out;
  }

  const std::vector<KernelOp>& ops = machine.op_log();
  const std::vector<OpOutcome>& machine_outcomes = machine.op_outcomes();
  if (ops.size() != machine_outcomes.size()) {
    fail(0, "op log and outcome stream lengths differ");
    return out;
  }

  oracle::OracleState state;
  std::map<CapId, oracle::CapHistory> history;
  std::vector<oracle::AccessRecord> accesses;
  std::set<CapId> ever_invalidated;
  std::set<CapId> ever_demoted;

  for (std::size_t step = 0; step < ops.size(); ++step) {
    const KernelOp& op = ops[step];
    OpOutcome oracle_outcome = oracle::oracle_step(state, op, config.kernel);
    if (!(oracle_outcome == machine_outcomes[step])) {
      fail(step, "engines disagree at op " + std::to_string(step) +
                     ": machine " + describe_outcome(machine_outcomes[step]) +
                     " vs reference " + describe_outcome(oracle_outcome));
      return out;
    }
    if (oracle_outcome.created != kNullCap) {
      oracle::CapHistory h;
      h.parent = op.kind == KernelOp::Kind::Borrow ? op.cap : kNullCap;
      h.tag = state.caps.at(oracle_outcome.created).tag;
      h.created_step = step;
      history.emplace(oracle_outcome.created, h);
    }
    if (op.kind == KernelOp::Kind::Drop || op.kind == KernelOp::Kind::Store) {
      for (CapId id : oracle_outcome.changed) {
        history.at(id).invalidated_step = step;
        if (!ever_invalidated.insert(id).second) {
          fail(step, "capability " + std::to_string(id) +
                         " invalidated twice (work bound breached)");
          return out;
        }
      }
    } else if (op.kind == KernelOp::Kind::Load) {
      for (CapId id : oracle_outcome.changed) {
        if (!ever_demoted.insert(id).second) {
          fail(step, "capability " + std::to_string(id) +
                         " demoted twice (work bound breached)");
          return out;
        }
      }
    }
    if ((op.kind == KernelOp::Kind::Load ||
         op.kind == KernelOp::Kind::Store) &&
        oracle_outcome.verdict == ViolationKind::None) {
      accesses.push_back(oracle::AccessRecord{
          step, op.kind == KernelOp::Kind::Store, op.cap, op.a, op.a + op.b});
    }
    std::vector<CapId> dangling = oracle::check_well_nested(state);
    if (!dangling.empty()) {
      fail(step, "well-nestedness breached at op " + std::to_string(step) +
                     ": capability " + std::to_string(dangling.front()) +
                     " is valid under an invalid parent");
      return out;
    }
  }

  // Final state comparison: every capability, bounds, permission, parent.
  std::map<CapId, Capability> machine_caps = machine.kernel().snapshot();
  if (machine_caps.size() != state.caps.size()) {
    fail(ops.size(), "engines track different capability counts");
    return out;
  }
  for (const auto& [id, cap] : state.caps) {
    auto it = machine_caps.find(id);
    if (it == machine_caps.end() || it->second.lo != cap.lo ||
        it->second.hi != cap.hi || it->second.perm != cap.perm ||
        it->second.parent != cap.parent || it->second.tag != cap.tag) {
      fail(ops.size(),
           "final state mismatch on capability " + std::to_string(id));
      return out;
    }
  }

  auto exclusive = oracle::check_exclusive_access(accesses, history,
                                                  config.kernel);
  if (!exclusive.empty()) {
    fail(static_cast<std::size_t>(exclusive.front().second),
         "exclusive access breached by steps " +
             std::to_string(exclusive.front().first) + " and " +
             std::to_string(exclusive.front().second));
    return out;
  }

  if (config.end_to_end) {
    std::vector<ViolationKind> naive = naive_run(config, program);
    if (naive != out.machine_result.event_verdicts) {
      std::size_t step = 0;
      while (step < naive.size() &&
             step < out.machine_result.event_verdicts.size() &&
             naive[step] == out.machine_result.event_verdicts[step]) {
        ++step;
      }
      fail(step, "end-to-end verdicts diverge at event " +
                     std::to_string(step));
      return out;
    }
  }
  return out;
}

DifferentialReport run_differential(const FuzzConfig& config) {
  DifferentialReport report;
  std::size_t jobs = std::max<std::size_t>(1, config.jobs);
  jobs = std::min(jobs, std::max<std::size_t>(1, config.trace_count));
  std::vector<DifferentialReport> partials(jobs);

  auto worker = [&](std::size_t worker_index) {
    DifferentialReport& local = partials[worker_index];
    for (std::size_t i = worker_index; i < config.trace_count; i += jobs) {
      TraceProgram program = generate(config, i);
      TraceCheckOutcome outcome = check_trace(config, program);
      ++local.traces_run;
      local.total_events += outcome.machine_result.steps;
      local.total_caps_created += outcome.machine_result.caps_created;
      local.total_caps_invalidated += outcome.machine_result.caps_invalidated;
      bool rejected = false;
      for (ViolationKind v : outcome.machine_result.event_verdicts) {
        if (v == ViolationKind::None) continue;
        ++local.verdict_counts[v];
        rejected = true;
      }
      if (rejected) ++local.traces_with_rejection;
      if (outcome.failure) {
        Discrepancy d;
        d.seed = config.seed;
        d.trace_index = i;
        d.step = outcome.failure_step;
        d.description = *outcome.failure;
        d.trace = program;
        d.shrunk = shrink(program, [&](const TraceProgram& t) {
          return check_trace(config, t).failure.has_value();
        });
        local.discrepancies.push_back(std::move(d));
      }
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
    for (std::thread& t : threads) t.join();
  }

  for (DifferentialReport& local : partials) {
    report.traces_run += local.traces_run;
    report.traces_with_rejection += local.traces_with_rejection;
    report.total_events += local.total_events;
    report.total_caps_created += local.total_caps_created;
    report.total_caps_invalidated += local.total_caps_invalidated;
    for (const auto& [kind, count] : local.verdict_counts) {
      report.verdict_counts[kind] += count;
    }
    for (Discrepancy& d : local.discrepancies) {
      report.discrepancies.push_back(std::move(d));
    }
  }
  std::sort(report.discrepancies.begin(), report.discrepancies.end(),
            [](const Discrepancy& a, const Discrepancy& b) {
              return a.trace_index < b.trace_index;
            });
  return report;
}

namespace {

// Operand simplifications tried per event, cheapest first.
std::vector<TraceEvent> simplified_variants(const TraceEvent& ev) {
  std::vector<TraceEvent> variants;
  auto push = [&](TraceEvent v) { variants.push_back(v); };
  if (ev.off != 0) {
    TraceEvent v = ev;
    v.off = 0;
    push(v);
  }
  if ((ev.op == Opcode::Ld || ev.op == Opcode::Sd) && ev.width != 8) {
    TraceEvent v = ev;
    v.width = 8;
    push(v);
  }
  if (ev.op == Opcode::Borrow && ev.has_bounds) {
    TraceEvent v = ev;
    v.has_bounds = false;
    v.lo = 0;
    v.hi = 0;
    push(v);
  }
  if (ev.op == Opcode::Alloc && ev.len > 8) {
    TraceEvent v = ev;
    v.len = 8;
    push(v);
  }
  if (ev.op == Opcode::Li && ev.imm != 0) {
    TraceEvent v = ev;
    v.imm = 0;
    push(v);
  }
  if (ev.expect) {
    TraceEvent v = ev;
    v.expect.reset();
    push(v);
  }
  return variants;
}

}  // namespace

TraceProgram shrink(
    const TraceProgram& trace,
    const std::function<bool(const TraceProgram&)>& predicate) {
  TraceProgram current = trace;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < current.events.size();) {
      TraceProgram candidate = current;
      candidate.events.erase(candidate.events.begin() +
                             static_cast<std::ptrdiff_t>(i));
      if (predicate(candidate)) {
        current = std::move(candidate);
        progress = true;
      } else {
        ++i;
      }
    }
    for (std::size_t i = 0; i < current.events.size(); ++i) {
      for (const TraceEvent& variant : simplified_variants(current.events[i])) {
        TraceProgram candidate = current;
        candidate.events[i] = variant;
        if (predicate(candidate)) {
          current = std::move(candidate);
          progress = true;
          break;
        }
      }
    }
  }
  return current;
}

namespace {

// Naive trace interpreter sharing nothing with Machine beyond the public
// data types. Flat maps everywhere, no metadata pool, no interval index.
class NaiveMachine {
 public:
  explicit NaiveMachine(const FuzzConfig& config)
      : config_(config), regs_(kNumRegisters) {}

  std::vector<ViolationKind> run(const TraceProgram& program) {
    std::vector<ViolationKind> verdicts;
    for (const TraceEvent& ev : program.events) {
      if (ev.op == Opcode::Halt) {
        verdicts.push_back(ViolationKind::None);
        break;
      }
      verdicts.push_back(exec(ev));
    }
    return verdicts;
  }

 private:
  struct Slot {
    std::uint64_t value = 0;
    std::vector<CapId> provenance;
  };

  void write_reg(int rd, std::uint64_t value, std::vector<CapId> provenance) {
    if (rd == 0) return;
    if (provenance.size() > 8) {
      provenance.erase(provenance.begin(),
                       provenance.end() - 8);
    }
    regs_[rd].value = value;
    regs_[rd].provenance = std::move(provenance);
  }

  CapId resolve(int reg_index, std::uint64_t lo, std::uint64_t hi) {
    CapId best_valid = kNullCap;
    CapId best_any = kNullCap;
    for (CapId id : regs_[reg_index].provenance) {
      const Capability& cap = state_.caps.at(id);
      if (!(cap.lo <= lo && hi <= cap.hi)) continue;
      if (id > best_any) best_any = id;
      if (cap.perm != Permission::NA && id > best_valid) best_valid = id;
    }
    CapId chosen = best_valid != kNullCap ? best_valid : best_any;
    if (chosen != kNullCap && reg_index != 0) {
      regs_[reg_index].provenance = {chosen};
    }
    return chosen;
  }

  bool hits_live_root(std::uint64_t lo, std::uint64_t hi) const {
    for (const auto& [id, cap] : state_.caps) {
      if (cap.parent == kNullCap && cap.perm != Permission::NA &&
          cap.overlaps(lo, hi)) {
        return true;
      }
    }
    return false;
  }

  ViolationKind exec(const TraceEvent& ev) {
    switch (ev.op) {
      case Opcode::Li:
        write_reg(ev.rd, ev.imm, {});
        return ViolationKind::None;
      case Opcode::Mv:
        write_reg(ev.rd, regs_[ev.rs1].value, regs_[ev.rs1].provenance);
        return ViolationKind::None;
      case Opcode::Addi:
        write_reg(ev.rd, regs_[ev.rs1].value + ev.imm,
                  regs_[ev.rs1].provenance);
        return ViolationKind::None;
      case Opcode::Add: {
        std::vector<CapId> merged = regs_[ev.rs1].provenance;
        for (CapId id : regs_[ev.rs2].provenance) {
          if (std::find(merged.begin(), merged.end(), id) == merged.end()) {
            merged.push_back(id);
          }
        }
        write_reg(ev.rd, regs_[ev.rs1].value + regs_[ev.rs2].value,
                  std::move(merged));
        return ViolationKind::None;
      }
      case Opcode::Alloc: {
        KernelOp op{KernelOp::Kind::Alloc, kNullCap, BorrowKind::Mut,
                    ev.alloc_tag, ev.imm, ev.imm + ev.len};
        OpOutcome out = oracle::oracle_step(state_, op, config_.kernel);
        if (out.verdict != ViolationKind::None) return out.verdict;
        write_reg(ev.rd, ev.imm, {out.created});
        return ViolationKind::None;
      }
      case Opcode::Borrow: {
        std::uint64_t ptr = regs_[ev.rs1].value;
        CapId src = resolve(ev.rs1, ptr, ptr + 1);
        if (src == kNullCap) {
          strip(ev.rs1);
          return ViolationKind::UntrackedAccess;
        }
        const Capability& parent = state_.caps.at(src);
        std::uint64_t lo = ev.has_bounds ? ev.lo : parent.lo;
        std::uint64_t hi = ev.has_bounds ? ev.hi : parent.hi;
        KernelOp op{KernelOp::Kind::Borrow, src, ev.bkind, CapTag::Ref, lo,
                    hi};
        OpOutcome out = oracle::oracle_step(state_, op, config_.kernel);
        if (out.verdict != ViolationKind::None) {
          strip(ev.rs1);
          return out.verdict;
        }
        write_reg(ev.rd, ptr, {out.created});
        return ViolationKind::None;
      }
      case Opcode::Drop: {
        std::uint64_t ptr = regs_[ev.rs1].value;
        CapId target = resolve(ev.rs1, ptr, ptr + 1);
        if (target == kNullCap) {
          strip(ev.rs1);
          return ViolationKind::UntrackedAccess;
        }
        KernelOp op{KernelOp::Kind::Drop, target, BorrowKind::Mut,
                    CapTag::Ref, 0, 0};
        OpOutcome out = oracle::oracle_step(state_, op, config_.kernel);
        if (out.verdict != ViolationKind::None) strip(ev.rs1);
        return out.verdict;
      }
      case Opcode::Ld:
      case Opcode::Sd: {
        bool is_store = ev.op == Opcode::Sd;
        std::uint64_t addr =
            regs_[ev.rs1].value + static_cast<std::uint64_t>(ev.off);
        std::uint64_t end = addr + ev.width;
        if (end < addr) {
          strip(ev.rs1);
          return ViolationKind::UntrackedAccess;
        }
        CapId cap = resolve(ev.rs1, addr, end);
        if (cap == kNullCap) {
          if (hits_live_root(addr, end)) {
            strip(ev.rs1);
            return ViolationKind::UntrackedAccess;
          }
        } else {
          KernelOp op{is_store ? KernelOp::Kind::Store : KernelOp::Kind::Load,
                      cap, BorrowKind::Mut, CapTag::Ref, addr, ev.width};
          OpOutcome out = oracle::oracle_step(state_, op, config_.kernel);
          if (out.verdict != ViolationKind::None) {
            strip(ev.rs1);
            return out.verdict;
          }
        }
        if (is_store) {
          for (std::uint64_t i = 0; i < ev.width; ++i) {
            bytes_[addr + i] =
                static_cast<std::uint8_t>(regs_[ev.rs2].value >> (8 * i));
          }
          if (ev.width == 8 && (addr & 7) == 0) {
            shadow_[addr] = regs_[ev.rs2].provenance;
          } else {
            std::uint64_t first = addr & ~std::uint64_t{7};
            std::uint64_t last = (addr + ev.width - 1) & ~std::uint64_t{7};
            for (std::uint64_t slot = first; slot <= last; slot += 8) {
              shadow_.erase(slot);
              if (slot > ~std::uint64_t{0} - 8) break;
            }
          }
        } else {
          std::uint64_t value = 0;
          for (std::uint64_t i = 0; i < ev.width; ++i) {
            auto it = bytes_.find(addr + i);
            if (it != bytes_.end()) {
              value |= std::uint64_t(it->second) << (8 * i);
            }
          }
          std::vector<CapId> provenance;
          if (ev.width == 8 && (addr & 7) == 0) {
            auto it = shadow_.find(addr);
            if (it != shadow_.end()) provenance = it->second;
          }
          write_reg(ev.rd, value, std::move(provenance));
        }
        return ViolationKind::None;
      }
      case Opcode::Halt:
        return ViolationKind::None;
    }
    return ViolationKind::None;
  }

  void strip(int reg_index) {
    if (reg_index > 0) regs_[reg_index].provenance.clear();
  }

  const FuzzConfig& config_;
  std::vector<Slot> regs_;
  oracle::OracleState state_;
  std::unordered_map<std::uint64_t, std::uint8_t> bytes_;
  std::unordered_map<std::uint64_t, std::vector<CapId>> shadow_;
};

}  // namespace

std::vector<ViolationKind> naive_run(const FuzzConfig& config,
                                     const TraceProgram& program) {
  NaiveMachine naive(config);
  return naive.run(program);
}

}  // namespace fuzz
}  // namespace capsim
