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

#ifndef CAPSIM_CLI_HPP
#define CAPSIM_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

namespace capsim {
namespace cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;      // usage, parse, or internal error
inline constexpr int kExitViolation = 2;  // violation, mismatch, discrepancy

struct RunOptions {
  std::string trace_path;
  bool strict = false;             // mode: strict vs compat
  bool halt_on_violation = true;   // on-violation: halt vs continue
  bool json = false;               // report: json vs text
  std::size_t pool_size = 65536;
  bool raw_pointer_relaxation = true;
  bool cell_relaxation = true;
};

struct CheckOptions {
  std::string trace_path;
  bool strict = false;
  bool json = false;
  std::size_t pool_size = 65536;
  bool raw_pointer_relaxation = true;
  bool cell_relaxation = true;
};

struct FuzzOptions {
  std::uint64_t seed = 42;
  std::size_t traces = 1000;
  std::size_t events = 128;
  std::size_t jobs = 1;
  bool end_to_end = false;
  bool raw_pointer_relaxation = true;
  bool cell_relaxation = true;
  std::string out_path;  // shrunk repro traces land here when nonempty
};

// Executes a trace and reports violations. Returns kExitOk when the trace
// runs clean, kExitViolation when any violation fires, kExitError on parse
// or I/O failure.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

// Replays a trace in continue mode and compares every expectation directive
// against the observed verdict.
int cmd_check(const CheckOptions& options, std::ostream& out,
              std::ostream& err);

// Generates random traces and cross-checks the machine against the
// reference oracle. The CAPSIM_SEED environment variable overrides the
// configured seed.
int cmd_fuzz(const FuzzOptions& options, std::ostream& out,
             std::ostream& err);

}  // namespace cli
}  // namespace capsim

#endif  // CAPSIM_CLI_HPP
