// masvm - run mini-assembly search programs under pluggable strategies and
// benchmark them.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "masvm/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"masvm - constraint-logic bytecode VM with explicit search trees"};
  app.require_subcommand(1);

  masvm::RunConfig cfg;
  auto* run = app.add_subcommand("run", "run a .mas program and report its solutions");
  run->add_option("file", cfg.program_path, "program file")->required();
  run->add_option("--strategy", cfg.strategy, "dfs|bfs|iddfs")
      ->check(CLI::IsMember({"dfs", "bfs", "iddfs"}));
  run->add_option("--max-solutions", cfg.max_solutions, "stop after this many solutions");
  run->add_option("--max-steps", cfg.max_steps, "stop after this many VM steps");
  double time_limit = 0;
  auto* tl = run->add_option("--time-limit", time_limit, "wall-clock limit in milliseconds");
  run->add_option("--iddfs-start", cfg.iddfs_start, "initial ID-DFS depth bound")
      ->check(CLI::PositiveNumber);
  run->add_option("--iddfs-inc", cfg.iddfs_increment, "ID-DFS bound increment")
      ->check(CLI::PositiveNumber);
  run->add_option("--dump-tree", cfg.dot_output, "write the search tree as DOT");
  run->add_option("--format", cfg.format, "text|json")->check(CLI::IsMember({"text", "json"}));
  run->add_flag("--strict-revert", cfg.strict_revert,
                "return to the root after every solution instead of parking at the leaf");

  std::string bench_dir;
  int reps = 20;
  int drop = 15;
  std::string bench_format = "text";
  auto* bench = app.add_subcommand("bench", "run a benchmark suite directory");
  bench->add_option("dir", bench_dir, "directory with .mas files and suite.json")->required();
  bench->add_option("--reps", reps, "repetitions per program/strategy")->check(CLI::PositiveNumber);
  bench->add_option("--drop", drop, "warmup runs to drop")->check(CLI::NonNegativeNumber);
  bench->add_option("--format", bench_format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (tl->count()) cfg.time_limit_ms = time_limit;
    masvm::RunOutcome out = masvm::cmd_run(cfg);
    if (out.exit_code == 1) {
      std::cerr << out.error << "\n";
      return 1;
    }
    if (cfg.format == "json") std::cout << masvm::report_to_json(out.report).dump(2) << "\n";
    else std::cout << masvm::report_to_text(out.report);
    return out.exit_code;
  }

  if (bench->parsed()) {
    if (drop >= reps) {
      std::cerr << "--drop must be smaller than --reps\n";
      return 1;
    }
    std::string error;
    auto rows = masvm::cmd_bench(bench_dir, reps, drop, error);
    if (!error.empty()) {
      std::cerr << error << "\n";
      return 1;
    }
    if (bench_format == "json") std::cout << masvm::bench_to_json(rows).dump(2) << "\n";
    else std::cout << masvm::bench_to_text(rows);
    return 0;
  }
  return 0;
}
