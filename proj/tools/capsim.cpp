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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "capsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"capability trace simulator"};
  app.require_subcommand(1);

  std::string mode = "compat";
  std::string on_violation = "halt";
  std::string report = "text";
  std::map<std::string, std::string> mode_values{{"compat", "compat"},
                                                 {"strict", "strict"}};

  capsim::cli::RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "execute a trace");
  run->add_option("trace", run_opts.trace_path, "trace file (.cap)")
      ->required();
  run->add_option("--mode", mode, "compat or strict")
      ->check(CLI::IsMember({"compat", "strict"}));
  run->add_option("--on-violation", on_violation, "halt or continue")
      ->check(CLI::IsMember({"halt", "continue"}));
  run->add_option("--report", report, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  run->add_option("--pool-size", run_opts.pool_size,
                  "metadata pool capacity");
  run->add_flag("--no-raw-relax",
                [&](std::int64_t) { run_opts.raw_pointer_relaxation = false; },
                "disable the raw pointer policy exclusion");
  run->add_flag("--no-cell-relax",
                [&](std::int64_t) { run_opts.cell_relaxation = false; },
                "disable the interior mutability policy exclusion");

  capsim::cli::CheckOptions check_opts;
  CLI::App* check =
      app.add_subcommand("check", "verify expectation directives");
  check->add_option("trace", check_opts.trace_path, "trace file (.cap)")
      ->required();
  check->add_option("--mode", mode, "compat or strict")
      ->check(CLI::IsMember({"compat", "strict"}));
  check->add_option("--report", report, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  check->add_option("--pool-size", check_opts.pool_size,
                    "metadata pool capacity");
  check->add_flag(
      "--no-raw-relax",
      [&](std::int64_t) { check_opts.raw_pointer_relaxation = false; },
      "disable the raw pointer policy exclusion");
  check->add_flag("--no-cell-relax",
                  [&](std::int64_t) { check_opts.cell_relaxation = false; },
                  "disable the interior mutability policy exclusion");

  capsim::cli::FuzzOptions fuzz_opts;
  CLI::App* fuzz =
      app.add_subcommand("fuzz", "differential testing against the oracle");
  fuzz->add_option("--seed", fuzz_opts.seed,
                   "base seed (CAPSIM_SEED overrides)");
  fuzz->add_option("--traces", fuzz_opts.traces, "number of traces");
  fuzz->add_option("--events", fuzz_opts.events, "events per trace");
  fuzz->add_option("--jobs", fuzz_opts.jobs, "worker threads");
  fuzz->add_flag("--end-to-end", fuzz_opts.end_to_end,
                 "also compare against the naive interpreter");
  fuzz->add_flag("--no-raw-relax",
                 [&](std::int64_t) { fuzz_opts.raw_pointer_relaxation = false; },
                 "disable the raw pointer policy exclusion");
  fuzz->add_flag("--no-cell-relax",
                 [&](std::int64_t) { fuzz_opts.cell_relaxation = false; },
                 "disable the interior mutability policy exclusion");
  fuzz->add_option("--out", fuzz_opts.out_path,
                   "write the first shrunk repro trace here");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    run_opts.strict = mode == "strict";
    run_opts.halt_on_violation = on_violation == "halt";
    run_opts.json = report == "json";
    return capsim::cli::cmd_run(run_opts, std::cout, std::cerr);
  }
  if (check->parsed()) {
    check_opts.strict = mode == "strict";
    check_opts.json = report == "json";
    return capsim::cli::cmd_check(check_opts, std::cout, std::cerr);
  }
  return capsim::cli::cmd_fuzz(fuzz_opts, std::cout, std::cerr);
}
