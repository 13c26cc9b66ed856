#pragma once

// Command-line front-end logic: run a program under a chosen strategy with
// budgets and reports, or execute a benchmark suite with warmup dropping.
// Kept header-side so the CLI binary stays a thin argument parser and tests
// can drive everything in-process.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "masvm/engine.hpp"
#include "masvm/ir.hpp"
#include "masvm/search_tree.hpp"
#include "masvm/strategies.hpp"

namespace masvm {

struct RunConfig {
  std::string program_path;
  std::string strategy = "dfs";
  uint64_t max_solutions = 1'000'000;
  uint64_t max_steps = 10'000'000;
  std::optional<double> time_limit_ms;
  int iddfs_start = 3;
  int iddfs_increment = 2;
  std::string dot_output;       // empty: no tree dump
  std::string format = "text";  // text | json
  bool strict_revert = false;
};

struct ReportSolution {
  std::string kind;  // "value" | "exception"
  int32_t payload = 0;
  std::string message;
  // one entry per free variable on the path: (debug name, var id, value)
  struct Var {
    std::string name;
    int32_t id = 0;
    int32_t value = 0;
    friend bool operator==(const Var&, const Var&) = default;
  };
  std::vector<Var> binding;
  friend bool operator==(const ReportSolution&, const ReportSolution&) = default;
};

struct RunReport {
  std::string program;
  std::string strategy;
  std::vector<ReportSolution> solutions;
  uint64_t steps = 0;
  uint64_t choices = 0;
  uint64_t nodes_value = 0;
  uint64_t nodes_exception = 0;
  uint64_t nodes_fail = 0;
  uint64_t nodes_choice = 0;
  uint64_t nodes_unevaluated = 0;
  double wall_ms = 0.0;
  bool truncated = false;
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

inline ReportSolution describe_solution(const Solution& s) {
  ReportSolution out;
  out.kind = s.kind == Solution::Kind::Value ? "value" : "exception";
  out.payload = s.payload;
  out.message = s.message;
  for (auto& [var, value] : s.binding) {
    auto it = s.names.find(var);
    out.binding.push_back(
        {it != s.names.end() ? it->second : default_var_name(var), var.id, value});
  }
  return out;
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["program"] = r.program;
  j["strategy"] = r.strategy;
  j["steps"] = r.steps;
  j["choices"] = r.choices;
  j["wall_ms"] = r.wall_ms;
  j["truncated"] = r.truncated;
  j["nodes"] = {{"value", r.nodes_value},
                {"exception", r.nodes_exception},
                {"fail", r.nodes_fail},
                {"choice", r.nodes_choice},
                {"unevaluated", r.nodes_unevaluated}};
  j["solutions"] = nlohmann::json::array();
  for (auto& s : r.solutions) {
    nlohmann::json js;
    js["kind"] = s.kind;
    js["payload"] = s.payload;
    js["message"] = s.message;
    js["binding"] = nlohmann::json::array();
    for (auto& v : s.binding)
      js["binding"].push_back({{"name", v.name}, {"id", v.id}, {"value", v.value}});
    j["solutions"].push_back(std::move(js));
  }
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.program = j.at("program").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.steps = j.at("steps").get<uint64_t>();
  r.choices = j.at("choices").get<uint64_t>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.truncated = j.at("truncated").get<bool>();
  r.nodes_value = j.at("nodes").at("value").get<uint64_t>();
  r.nodes_exception = j.at("nodes").at("exception").get<uint64_t>();
  r.nodes_fail = j.at("nodes").at("fail").get<uint64_t>();
  r.nodes_choice = j.at("nodes").at("choice").get<uint64_t>();
  r.nodes_unevaluated = j.at("nodes").at("unevaluated").get<uint64_t>();
  for (auto& js : j.at("solutions")) {
    ReportSolution s;
    s.kind = js.at("kind").get<std::string>();
    s.payload = js.at("payload").get<int32_t>();
    s.message = js.at("message").get<std::string>();
    for (auto& jv : js.at("binding"))
      s.binding.push_back({jv.at("name").get<std::string>(), jv.at("id").get<int32_t>(),
                           jv.at("value").get<int32_t>()});
    r.solutions.push_back(std::move(s));
  }
  return r;
}

inline std::string report_to_text(const RunReport& r) {
  std::ostringstream os;
  os << "program:   " << r.program << "\n"
     << "strategy:  " << r.strategy << "\n"
     << "solutions: " << r.solutions.size() << (r.truncated ? " (budget exceeded)" : "") << "\n";
  for (size_t i = 0; i < r.solutions.size(); ++i) {
    const ReportSolution& s = r.solutions[i];
    os << "  [" << i << "] " << s.kind << " ";
    if (s.kind == "value") os << s.payload;
    else os << '"' << s.message << '"';
    if (!s.binding.empty()) {
      os << "  {";
      for (size_t k = 0; k < s.binding.size(); ++k) {
        if (k) os << ", ";
        os << s.binding[k].name << "=" << s.binding[k].value;
      }
      os << "}";
    }
    os << "\n";
  }
  os << "steps:     " << r.steps << "\n"
     << "choices:   " << r.choices << "\n"
     << "nodes:     value=" << r.nodes_value << " exception=" << r.nodes_exception
     << " fail=" << r.nodes_fail << " choice=" << r.nodes_choice
     << " unevaluated=" << r.nodes_unevaluated << "\n"
     << "wall:      " << r.wall_ms << " ms\n";
  return os.str();
}

struct RunOutcome {
  int exit_code = 0;  // 0 clean, 1 parse/validate error, 2 budget truncation
  std::string error;  // parse/validate diagnostics when exit_code == 1
  RunReport report;
  std::string dot;  // rendered tree when requested
};

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs one program per the config. Never touches the filesystem except for
// reading the program and (optionally) writing the DOT dump.
inline RunOutcome cmd_run(const RunConfig& config) {
  RunOutcome out;
  out.report.program = config.program_path;
  out.report.strategy = config.strategy;

  auto text = read_file(config.program_path);
  if (!text) {
    out.exit_code = 1;
    out.error = "cannot read " + config.program_path;
    return out;
  }
  ParseResult parsed = parse_program(*text);
  if (std::holds_alternative<ParseError>(parsed)) {
    out.exit_code = 1;
    out.error = std::get<ParseError>(parsed).to_string();
    return out;
  }
  Program program = std::get<Program>(std::move(parsed));
  auto diags = validate(program);
  if (!diags.empty()) {
    out.exit_code = 1;
    for (auto& d : diags) out.error += d + "\n";
    return out;
  }
  auto strategy = strategy_from_name(config.strategy);
  if (!strategy) {
    out.exit_code = 1;
    out.error = "unknown strategy '" + config.strategy + "'";
    return out;
  }

  SearchBudget budget;
  budget.max_steps = config.max_steps;
  budget.max_solutions = config.max_solutions;
  budget.wall_time_ms = config.time_limit_ms;
  IddfsParams iddfs{config.iddfs_start, config.iddfs_increment};
  StreamOptions options;
  options.strict_revert = config.strict_revert;

  auto t0 = std::chrono::steady_clock::now();
  SolutionStream stream(program, *strategy, budget, iddfs, options);
  CollectResult collected = collect_all(stream, config.max_solutions);
  auto t1 = std::chrono::steady_clock::now();

  for (const Solution& s : collected.solutions)
    out.report.solutions.push_back(describe_solution(s));
  out.report.steps = stream.engine().vm().steps;
  out.report.choices = stream.engine().choices_created();
  const SearchTree& tree = stream.engine().tree();
  out.report.nodes_value = tree.count(NodeKind::Value);
  out.report.nodes_exception = tree.count(NodeKind::Exception);
  out.report.nodes_fail = tree.count(NodeKind::Fail);
  out.report.nodes_choice = tree.count(NodeKind::Choice);
  out.report.nodes_unevaluated = tree.count(NodeKind::Unevaluated);
  out.report.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  out.report.truncated = collected.truncated;

  if (!config.dot_output.empty()) {
    out.dot = export_dot(tree, stream.engine().vm().namer());
    std::ofstream dot(config.dot_output, std::ios::binary);
    if (!dot) {
      out.exit_code = 1;
      out.error = "cannot write " + config.dot_output;
      return out;
    }
    dot << out.dot;
  }

  out.exit_code = out.report.truncated ? 2 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark suite

struct BenchEntry {
  std::string file;
  uint64_t max_steps = 10'000'000;
  uint64_t max_solutions = 1'000'000;
  std::optional<double> time_limit_ms;
  std::vector<std::string> strategies{"dfs", "bfs", "iddfs"};
};

struct BenchRow {
  std::string program;
  std::string strategy;
  uint64_t solutions = 0;
  uint64_t steps = 0;
  bool truncated = false;
  bool failed = false;      // program did not parse/validate
  std::string error;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  int samples = 0;
};

// Reads <dir>/suite.json: {"programs":[{"file":..., "max_steps":...,
// "max_solutions":..., "time_limit_ms":..., "strategies":[...]}]}.
inline std::optional<std::vector<BenchEntry>> load_suite(const std::string& dir,
                                                         std::string& error) {
  auto text = read_file(dir + "/suite.json");
  if (!text) {
    error = "cannot read " + dir + "/suite.json";
    return std::nullopt;
  }
  std::vector<BenchEntry> entries;
  try {
    nlohmann::json j = nlohmann::json::parse(*text);
    for (auto& jp : j.at("programs")) {
      BenchEntry e;
      e.file = jp.at("file").get<std::string>();
      if (jp.contains("max_steps")) e.max_steps = jp["max_steps"].get<uint64_t>();
      if (jp.contains("max_solutions")) e.max_solutions = jp["max_solutions"].get<uint64_t>();
      if (jp.contains("time_limit_ms")) e.time_limit_ms = jp["time_limit_ms"].get<double>();
      if (jp.contains("strategies")) {
        e.strategies.clear();
        for (auto& s : jp["strategies"]) e.strategies.push_back(s.get<std::string>());
      }
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    error = std::string("bad suite.json: ") + ex.what();
    return std::nullopt;
  }
  return entries;
}

// Runs every program/strategy combination `repetitions` times, drops the
// first `warmup_drop` timings, and reports mean/median wall time over the
// remaining samples. Per-file failures are reported; the suite continues.
inline std::vector<BenchRow> cmd_bench(const std::string& dir, int repetitions, int warmup_drop,
                                       std::string& error) {
  std::vector<BenchRow> rows;
  auto suite = load_suite(dir, error);
  if (!suite) return rows;

  for (const BenchEntry& entry : *suite) {
    for (const std::string& strat : entry.strategies) {
      BenchRow row;
      row.program = entry.file;
      row.strategy = strat;

      RunConfig cfg;
      cfg.program_path = dir + "/" + entry.file;
      cfg.strategy = strat;
      cfg.max_steps = entry.max_steps;
      cfg.max_solutions = entry.max_solutions;
      cfg.time_limit_ms = entry.time_limit_ms;

      std::vector<double> kept;
      for (int rep = 0; rep < repetitions; ++rep) {
        RunOutcome res = cmd_run(cfg);
        if (res.exit_code == 1) {
          row.failed = true;
          row.error = res.error;
          break;
        }
        if (rep >= warmup_drop) kept.push_back(res.report.wall_ms);
        row.solutions = res.report.solutions.size();
        row.steps = res.report.steps;
        row.truncated = res.report.truncated;
      }
      if (!row.failed && !kept.empty()) {
        std::vector<double> sorted = kept;
        std::sort(sorted.begin(), sorted.end());
        double sum = 0;
        for (double v : kept) sum += v;
        row.mean_ms = sum / double(kept.size());
        row.median_ms = sorted.size() % 2 == 1
                            ? sorted[sorted.size() / 2]
                            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        row.samples = int(kept.size());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline nlohmann::json bench_to_json(const std::vector<BenchRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (auto& r : rows) {
    nlohmann::json jr;
    jr["program"] = r.program;
    jr["strategy"] = r.strategy;
    jr["solutions"] = r.solutions;
    jr["steps"] = r.steps;
    jr["truncated"] = r.truncated;
    jr["failed"] = r.failed;
    jr["error"] = r.error;
    jr["mean_ms"] = r.mean_ms;
    jr["median_ms"] = r.median_ms;
    jr["samples"] = r.samples;
    j.push_back(std::move(jr));
  }
  return j;
}

inline std::string bench_to_text(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "program                 strategy  solutions      steps  mean_ms  median_ms  samples\n";
  for (auto& r : rows) {
    if (r.failed) {
      os << r.program << "  " << r.strategy << "  FAILED: " << r.error << "\n";
      continue;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-22s  %-8s  %9llu  %9llu  %7.2f  %9.2f  %7d%s\n",
                  r.program.c_str(), r.strategy.c_str(),
                  static_cast<unsigned long long>(r.solutions),
                  static_cast<unsigned long long>(r.steps), r.mean_ms, r.median_ms, r.samples,
                  r.truncated ? "  (truncated)" : "");
    os << buf;
  }
  return os.str();
}

}  // namespace masvm
