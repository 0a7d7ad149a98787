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

#include "capsim/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <variant>

#include "json.hpp"

#include "capsim/fuzz.hpp"
#include "capsim/machine.hpp"
#include "capsim/trace.hpp"

namespace capsim {
namespace cli {

namespace {

constexpr int kReportVersion = 1;

std::variant<TraceProgram, std::string> load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "cannot open " + path;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto parsed = parse_trace(buffer.str());
  if (auto* error = std::get_if<ParseError>(&parsed)) {
    std::ostringstream msg;
    msg << path << ":" << error->line << ":" << error->column << ": "
        << error->message;
    return msg.str();
  }
  return std::get<TraceProgram>(std::move(parsed));
}

nlohmann::json violation_json(const Violation& v) {
  return nlohmann::json{{"event_index", v.event_index},
                        {"kind", to_string(v.kind)},
                        {"cap", v.cap},
                        {"parents", v.parents},
                        {"addr", v.addr},
                        {"width", v.width},
                        {"message", v.message}};
}

nlohmann::json run_report_json(const std::string& path,
                               const TraceProgram& program,
                               const RunResult& result) {
  nlohmann::json violations = nlohmann::json::array();
  for (const Violation& v : result.violations) {
    violations.push_back(violation_json(v));
  }
  return nlohmann::json{
      {"version", kReportVersion},
      {"trace", path},
      {"events", result.steps},
      {"violations", violations},
      {"stats",
       {{"caps_created", result.caps_created},
        {"caps_invalidated", result.caps_invalidated}}}};
}

void print_run_text(std::ostream& out, const std::string& path,
                    const RunResult& result) {
  out << path << ": " << result.steps << " events, "
      << result.caps_created << " capabilities created, "
      << result.caps_invalidated << " invalidated\n";
  for (const Violation& v : result.violations) {
    out << "  event " << v.event_index << ": " << v.message << "\n";
  }
  for (const Diagnostic& d : result.diagnostics) {
    out << "  event " << d.event_index << " (note): " << d.message << "\n";
  }
  out << (result.violations.empty() ? "clean\n" : "violations detected\n");
}

MachineConfig to_machine_config(bool strict, bool halt,
                                std::size_t pool_size, bool raw_relax,
                                bool cell_relax) {
  MachineConfig config;
  config.strict = strict;
  config.halt_on_violation = halt;
  config.pool_size = pool_size;
  config.kernel.raw_pointer_relaxation = raw_relax;
  config.kernel.cell_relaxation = cell_relax;
  return config;
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  auto loaded = load_trace(options.trace_path);
  if (auto* error = std::get_if<std::string>(&loaded)) {
    err << *error << "\n";
    return kExitError;
  }
  const TraceProgram& program = std::get<TraceProgram>(loaded);
  Machine machine(to_machine_config(options.strict,
                                    options.halt_on_violation,
                                    options.pool_size,
                                    options.raw_pointer_relaxation,
                                    options.cell_relaxation));
  RunResult result = machine.run(program);
  if (options.json) {
    out << run_report_json(options.trace_path, program, result).dump(2)
        << "\n";
  } else {
    print_run_text(out, options.trace_path, result);
  }
  if (!result.audit_failures.empty()) {
    err << "internal audit failure: " << result.audit_failures.front()
        << "\n";
    return kExitError;
  }
  return result.violations.empty() ? kExitOk : kExitViolation;
}

int cmd_check(const CheckOptions& options, std::ostream& out,
              std::ostream& err) {
  auto loaded = load_trace(options.trace_path);
  if (auto* error = std::get_if<std::string>(&loaded)) {
    err << *error << "\n";
    return kExitError;
  }
  const TraceProgram& program = std::get<TraceProgram>(loaded);
  // Continue past violations so every expectation gets evaluated.
  Machine machine(to_machine_config(options.strict, false,
                                    options.pool_size,
                                    options.raw_pointer_relaxation,
                                    options.cell_relaxation));
  RunResult result = machine.run(program);

  std::size_t checked = 0;
  std::size_t mismatches = 0;
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < program.events.size(); ++i) {
    const TraceEvent& ev = program.events[i];
    if (!ev.expect) continue;
    ++checked;
    ViolationKind actual = i < result.event_verdicts.size()
                               ? result.event_verdicts[i]
                               : ViolationKind::None;
    ViolationKind wanted =
        ev.expect->expect_ok ? ViolationKind::None : ev.expect->kind;
    bool match = actual == wanted;
    if (!match) ++mismatches;
    if (options.json) {
      entries.push_back(nlohmann::json{{"event_index", i},
                                       {"line", ev.line},
                                       {"expected", to_string(wanted)},
                                       {"actual", to_string(actual)},
                                       {"match", match}});
    } else {
      out << (match ? "ok      " : "MISMATCH") << "  line " << ev.line
          << ": expected " << to_string(wanted) << ", got "
          << to_string(actual) << "\n";
    }
  }
  if (options.json) {
    out << nlohmann::json{{"version", kReportVersion},
                          {"trace", options.trace_path},
                          {"checked", checked},
                          {"mismatches", mismatches},
                          {"expectations", entries}}
               .dump(2)
        << "\n";
  } else {
    out << checked << " expectations, " << mismatches << " mismatches\n";
  }
  if (!result.audit_failures.empty()) {
    err << "internal audit failure: " << result.audit_failures.front()
        << "\n";
    return kExitError;
  }
  return mismatches == 0 ? kExitOk : kExitViolation;
}

int cmd_fuzz(const FuzzOptions& options, std::ostream& out,
             std::ostream& err) {
  fuzz::FuzzConfig config;
  config.seed = options.seed;
  if (const char* env = std::getenv("CAPSIM_SEED")) {
    char* end = nullptr;
    std::uint64_t parsed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      err << "CAPSIM_SEED is not a number: " << env << "\n";
      return kExitError;
    }
    config.seed = parsed;
  }
  config.trace_count = options.traces;
  config.events_per_trace = options.events;
  config.jobs = options.jobs;
  config.end_to_end = options.end_to_end;
  config.kernel.raw_pointer_relaxation = options.raw_pointer_relaxation;
  config.kernel.cell_relaxation = options.cell_relaxation;

  fuzz::DifferentialReport report = fuzz::run_differential(config);
  out << "seed " << config.seed << ": " << report.traces_run << " traces, "
      << report.total_events << " events, " << report.traces_with_rejection
      << " traces with rejections, " << report.discrepancies.size()
      << " discrepancies\n";
  for (const auto& [kind, count] : report.verdict_counts) {
    out << "  " << to_string(kind) << ": " << count << "\n";
  }
  for (const fuzz::Discrepancy& d : report.discrepancies) {
    out << "discrepancy in trace " << d.trace_index << " at step " << d.step
        << ": " << d.description << "\n";
  }
  if (!report.discrepancies.empty() && !options.out_path.empty()) {
    std::ofstream repro(options.out_path, std::ios::binary);
    if (!repro) {
      err << "cannot write " << options.out_path << "\n";
      return kExitError;
    }
    repro << serialize_trace(report.discrepancies.front().shrunk);
    out << "shrunk repro written to " << options.out_path << "\n";
  }
  return report.clean() ? kExitOk : kExitViolation;
}

}  // namespace cli
}  // namespace capsim
