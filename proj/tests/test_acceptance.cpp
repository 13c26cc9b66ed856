// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line and
// fails its doctest case on any violation.

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "generators.hpp"
#include "masvm/engine.hpp"
#include "masvm/oracle.hpp"
#include "masvm/report.hpp"
#include "masvm/strategies.hpp"

using namespace masvm;

namespace {

struct Criterion {
  std::string name;
  bool ok = true;
  std::string detail;

  explicit Criterion(std::string n) : name(std::move(n)) {}

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }

  void finish() const {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, name, ": ", detail);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Program parse_ok(const std::string& text) {
  ParseResult r = parse_program(text);
  if (auto* err = std::get_if<ParseError>(&r)) FAIL(err->to_string());
  return std::get<Program>(std::move(r));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Program corpus(const std::string& name) {
  return parse_ok(slurp(std::string(MASVM_CORPUS_DIR "/") + name));
}

std::string solution_key(const Solution& s) {
  std::string k = s.kind == Solution::Kind::Value ? "v:" + std::to_string(s.payload)
                                                  : "e:" + s.message;
  for (auto& [var, val] : s.binding)
    k += "|" + std::to_string(var.id) + "=" + std::to_string(val);
  return k;
}

std::vector<std::string> sorted_keys(const std::vector<Solution>& sols) {
  std::vector<std::string> ks;
  for (auto& s : sols) ks.push_back(solution_key(s));
  std::sort(ks.begin(), ks.end());
  return ks;
}

}  // namespace

TEST_CASE("criterion 1: fully evaluated flip_two_coins tree") {
  Criterion c("criterion 1: flip_two_coins tree shape, edge constraints, dfs order");
  auto t0 = std::chrono::steady_clock::now();

  Program p = corpus("flip_two_coins.mas");
  SolutionStream s(p, StrategyKind::Dfs);
  CollectResult r = collect_all(s);

  c.expect(r.solutions.size() == 2, "expected exactly 2 solutions");
  if (r.solutions.size() == 2) {
    c.expect(r.solutions[0].kind == Solution::Kind::Value && r.solutions[0].payload == 1,
             "first solution must be true (1)");
    c.expect(r.solutions[1].kind == Solution::Kind::Value && r.solutions[1].payload == 0,
             "second solution must be false (0)");
  }

  const SearchTree& tree = s.engine().tree();
  c.expect(tree.count(NodeKind::Choice) == 2, "expected 2 choice nodes");
  c.expect(tree.count(NodeKind::Value) == 2, "expected 2 value nodes");
  c.expect(tree.count(NodeKind::Fail) == 1, "expected 1 fail node");
  c.expect(tree.count(NodeKind::Unevaluated) == 0, "expected full evaluation");

  std::multiset<std::string> edges;
  VarNameFn namer = s.engine().vm().namer();
  tree.for_each([&](const STNode& n) {
    if (n.constraint) edges.insert(expr_to_string(*n.constraint, namer));
  });
  std::multiset<std::string> expected{"coin1 != 0", "coin1 == 0", "coin2 != 0", "coin2 == 0"};
  c.expect(edges == expected, "edge constraints differ from the expected four");

  double secs = seconds_since(t0);
  c.expect(secs < 1.0, "took " + std::to_string(secs) + "s, budget 1s");
  c.finish();
}

TEST_CASE("criterion 2: strategy behaviour on the infinite program") {
  Criterion c("criterion 2: non_terminating_coin at 10^6 steps: dfs 0, bfs/iddfs >= 100");
  Program p = corpus("non_terminating_coin.mas");
  const uint64_t kSteps = 1'000'000;

  auto run = [&](StrategyKind k) {
    SearchBudget b;
    b.max_steps = kSteps;
    SolutionStream s(p, k, b);
    auto t0 = std::chrono::steady_clock::now();
    CollectResult r = collect_all(s);
    return std::pair<size_t, double>(r.solutions.size(), seconds_since(t0));
  };

  auto [dfs_count, dfs_secs] = run(StrategyKind::Dfs);
  auto [bfs_count, bfs_secs] = run(StrategyKind::Bfs);
  auto [id_count, id_secs] = run(StrategyKind::Iddfs);

  c.expect(dfs_count == 0, "dfs found " + std::to_string(dfs_count) + " solutions, expected 0");
  c.expect(bfs_count >= 100, "bfs found " + std::to_string(bfs_count) + ", expected >= 100");
  c.expect(id_count >= 100, "iddfs found " + std::to_string(id_count) + ", expected >= 100");
  c.expect(double(id_count) >= 0.9 * double(bfs_count),
           "iddfs (" + std::to_string(id_count) + ") below 90% of bfs (" +
               std::to_string(bfs_count) + ")");
  for (auto [name, secs] : {std::pair{"dfs", dfs_secs}, {"bfs", bfs_secs}, {"iddfs", id_secs}})
    c.expect(secs < 10.0, std::string(name) + " took " + std::to_string(secs) + "s, budget 10s");
  c.detail = "dfs=" + std::to_string(dfs_count) + " bfs=" + std::to_string(bfs_count) +
             " iddfs=" + std::to_string(id_count) + (c.detail.empty() ? "" : "; " + c.detail);
  if (!c.ok) c.detail = "FAILED: " + c.detail;
  c.finish();
}

TEST_CASE("criterion 3: trail round trip over 1000 randomized runs") {
  Criterion c("criterion 3: navigation round trip restores state hashes (1000 runs)");
  std::mt19937 rng(0xA11CE);
  uint64_t nodes_checked = 0;
  uint64_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    Program p = testgen::random_finite_program(rng);
    Engine eng(p);
    STNode* root = eng.tree().root();
    std::vector<STNode*> pending{root};
    while (!pending.empty()) {
      STNode* n = pending.back();
      pending.pop_back();
      eng.goto_node(n);
      if (eng.evaluate_node(n, 20000) != EvalStatus::Evaluated) continue;
      if (n != root) {
        uint64_t h = eng.cursor_state_hash();
        eng.goto_node(root);
        eng.goto_node(n);
        ++nodes_checked;
        if (eng.cursor_state_hash() != h) ++mismatches;
      }
      if (n->kind == NodeKind::Choice)
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
          pending.push_back(*it);
    }
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " hash mismatches");
  c.expect(nodes_checked >= 1000, "only " + std::to_string(nodes_checked) + " nodes exercised");
  c.detail = std::to_string(nodes_checked) + " nodes round-tripped" +
             (c.detail.empty() ? "" : "; " + c.detail);
  if (!c.ok) c.detail = "FAILED: " + c.detail;
  c.finish();
}

TEST_CASE("criterion 4: oracle equivalence on 50 generated programs") {
  Criterion c("criterion 4: dfs equals run_oracle; bfs/iddfs multisets match (50 programs)");
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(0x5EED);
  int compared = 0;
  int generated = 0;
  int mismatches = 0;
  while (compared < 50 && generated < 200) {
    ++generated;
    Program p = testgen::random_finite_program(rng);
    OracleReport oracle = run_oracle(p, 200000);
    if (oracle.truncated) continue;
    ++compared;

    SearchBudget b;
    b.max_steps = 400000;
    SolutionStream dfs(p, StrategyKind::Dfs, b);
    CollectResult tree = collect_all(dfs);
    bool same = !tree.truncated && tree.solutions.size() == oracle.solutions.size();
    if (same)
      for (size_t k = 0; k < tree.solutions.size(); ++k)
        same &= tree.solutions[k] == oracle.solutions[k];
    mismatches += !same;

    SolutionStream bfs(p, StrategyKind::Bfs, b);
    SolutionStream id(p, StrategyKind::Iddfs, b);
    mismatches += sorted_keys(collect_all(bfs).solutions) != sorted_keys(tree.solutions);
    mismatches += sorted_keys(collect_all(id).solutions) != sorted_keys(tree.solutions);
  }
  c.expect(compared == 50, "only " + std::to_string(compared) + " comparable programs of " +
                               std::to_string(generated) + " generated");
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  double secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + std::to_string(secs) + "s, budget 30s");
  c.finish();
}

TEST_CASE("criterion 5: common-ancestor oracle on a 10000-node tree") {
  Criterion c("criterion 5: find_common_ancestor matches root-path intersection (10000 pairs)");
  std::mt19937 rng(0xCAFE);
  SearchTree tree;
  STNode* root = tree.make_root(0);
  std::vector<STNode*> nodes{root};
  auto dummy = ConstraintExpr::rel(Cond::Eq, t_var(VarId{0}), t_const(0));
  while (nodes.size() < 10000) {
    STNode* parent = nodes[rng() % nodes.size()];
    nodes.push_back(tree.add_child(parent, dummy, 0, 0));
  }
  auto root_path = [](STNode* n) {
    std::vector<STNode*> path;
    for (; n; n = n->parent) path.push_back(n);
    std::reverse(path.begin(), path.end());
    return path;
  };
  uint64_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    STNode* a = nodes[rng() % nodes.size()];
    STNode* b = nodes[rng() % nodes.size()];
    auto pa = root_path(a), pb = root_path(b);
    STNode* expected = nullptr;
    for (size_t k = 0; k < pa.size() && k < pb.size() && pa[k] == pb[k]; ++k) expected = pa[k];
    mismatches += find_common_ancestor(a, b) != expected;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  c.finish();
}

TEST_CASE("criterion 6: send more money has the single known solution") {
  Criterion c("criterion 6: send_more_money dfs finds S9 E5 N6 D7 M1 O0 R8 Y2 exactly once");
  auto t0 = std::chrono::steady_clock::now();

  // brute-force digit oracle: enumerate distinct digit assignments directly
  std::vector<std::array<int, 8>> models;  // s e n d m o r y
  for (int s = 1; s <= 9; ++s)
    for (int e = 0; e <= 9; ++e) {
      if (e == s) continue;
      for (int n = 0; n <= 9; ++n) {
        if (n == s || n == e) continue;
        for (int d = 0; d <= 9; ++d) {
          if (d == s || d == e || d == n) continue;
          for (int m = 1; m <= 9; ++m) {
            if (m == s || m == e || m == n || m == d) continue;
            for (int o = 0; o <= 9; ++o) {
              if (o == s || o == e || o == n || o == d || o == m) continue;
              for (int r = 0; r <= 9; ++r) {
                if (r == s || r == e || r == n || r == d || r == m || r == o) continue;
                for (int y = 0; y <= 9; ++y) {
                  if (y == s || y == e || y == n || y == d || y == m || y == o || y == r)
                    continue;
                  int send = 1000 * s + 100 * e + 10 * n + d;
                  int more = 1000 * m + 100 * o + 10 * r + e;
                  int money = 10000 * m + 1000 * o + 100 * n + 10 * e + y;
                  if (send + more == money) models.push_back({s, e, n, d, m, o, r, y});
                }
              }
            }
          }
        }
      }
    }
  c.expect(models.size() == 1, "digit oracle found " + std::to_string(models.size()) +
                                   " models, expected 1");
  std::array<int, 8> want{9, 5, 6, 7, 1, 0, 8, 2};
  c.expect(!models.empty() && models[0] == want, "digit oracle disagrees with the known digits");

  Program p = corpus("send_more_money.mas");
  SolutionStream s(p, StrategyKind::Dfs);
  CollectResult r = collect_all(s, 10);
  c.expect(r.solutions.size() == 1,
           "dfs found " + std::to_string(r.solutions.size()) + " solutions, expected 1");
  if (r.solutions.size() == 1) {
    std::map<std::string, int32_t> by_name;
    for (auto& [var, val] : r.solutions[0].binding) by_name[r.solutions[0].names[var]] = val;
    const char* names[] = {"s", "e", "n", "d", "m", "o", "r", "y"};
    for (int i = 0; i < 8; ++i)
      c.expect(by_name[names[i]] == want[size_t(i)],
               std::string(names[i]) + "=" + std::to_string(by_name[names[i]]) + ", expected " +
                   std::to_string(want[size_t(i)]));
  }
  double secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + std::to_string(secs) + "s, budget 60s");
  c.finish();
}

TEST_CASE("criterion 7: constraint soundness sweep over 500 systems") {
  Criterion c("criterion 7: inconsistent verdicts and label results match brute force (500)");
  std::mt19937 rng(0x7A57E);
  int violations = 0;
  int inconsistent_seen = 0;
  for (int round = 0; round < 500; ++round) {
    auto sys = testgen::random_constraint_system(rng, 3, 4);
    ConstraintStack st;
    bool any_inconsistent = false;
    for (const auto& e : sys.exprs)
      any_inconsistent |= st.impose(e) == ConsistencyVerdict::Inconsistent;
    bool brute = testgen::brute_force_has_model(sys);
    if (any_inconsistent) {
      ++inconsistent_seen;
      violations += brute;  // claimed unsat but a model exists
    }
    std::vector<VarId> vars;
    for (int i = 0; i < sys.nvars; ++i) vars.push_back(VarId{i});
    LabelResult lr = st.label(vars);
    if (lr.status == LabelStatus::Exhausted) {
      violations += 1;  // boxed systems must label within budget
      continue;
    }
    violations += (lr.status == LabelStatus::Found) != brute;
    if (lr.status == LabelStatus::Found)
      for (const auto& e : sys.exprs) violations += !constraint_holds(e, lr.binding);
  }
  c.expect(violations == 0, std::to_string(violations) + " soundness violations");
  c.expect(inconsistent_seen > 10, "sweep produced too few inconsistent systems (" +
                                       std::to_string(inconsistent_seen) + ")");
  c.detail = std::to_string(inconsistent_seen) + " inconsistent systems cross-checked" +
             (c.detail.empty() ? "" : "; " + c.detail);
  if (!c.ok) c.detail = "FAILED: " + c.detail;
  c.finish();
}

TEST_CASE("criterion 8: tree retention overhead within 3x of the oracle") {
  Criterion c("criterion 8: three_partition dfs within 3x run_oracle wall time (median of 20)");
  Program p = corpus("three_partition.mas");

  auto time_oracle = [&]() {
    auto t0 = std::chrono::steady_clock::now();
    OracleReport r = run_oracle(p, 100'000'000);
    REQUIRE_FALSE(r.truncated);
    REQUIRE(r.solutions.size() > 0);
    return seconds_since(t0);
  };
  auto time_dfs = [&]() {
    SearchBudget b;
    b.max_steps = 100'000'000;
    SolutionStream s(p, StrategyKind::Dfs, b);
    auto t0 = std::chrono::steady_clock::now();
    CollectResult r = collect_all(s);
    REQUIRE_FALSE(r.truncated);
    REQUIRE(r.solutions.size() > 0);
    return seconds_since(t0);
  };

  // warmup, then 20 measured runs each
  for (int i = 0; i < 3; ++i) {
    time_oracle();
    time_dfs();
  }
  std::vector<double> oracle_times, dfs_times;
  for (int i = 0; i < 20; ++i) {
    oracle_times.push_back(time_oracle());
    dfs_times.push_back(time_dfs());
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  double mo = median(oracle_times), md = median(dfs_times);
  c.expect(md <= 3.0 * mo, "dfs median " + std::to_string(md) + "s vs oracle median " +
                               std::to_string(mo) + "s exceeds 3x");
  char buf[128];
  std::snprintf(buf, sizeof buf, "oracle median %.3fms, dfs median %.3fms, ratio %.2fx",
                mo * 1e3, md * 1e3, md / mo);
  c.detail = std::string(buf) + (c.detail.empty() ? "" : "; " + c.detail);
  if (!c.ok) c.detail = "FAILED: " + c.detail;
  c.finish();
}
