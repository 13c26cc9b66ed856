#pragma once

// Pluggable traversal strategies over the explicit search tree and the
// pull-based encapsulated solution stream.

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "masvm/engine.hpp"
#include "masvm/solution.hpp"

namespace masvm {

enum class StrategyKind { Dfs, Bfs, Iddfs };

inline std::optional<StrategyKind> strategy_from_name(const std::string& s) {
  if (s == "dfs") return StrategyKind::Dfs;
  if (s == "bfs") return StrategyKind::Bfs;
  if (s == "iddfs") return StrategyKind::Iddfs;
  return std::nullopt;
}

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Dfs: return "dfs";
    case StrategyKind::Bfs: return "bfs";
    case StrategyKind::Iddfs: return "iddfs";
  }
  return "?";
}

struct SearchBudget {
  uint64_t max_steps = UINT64_MAX;
  uint64_t max_solutions = UINT64_MAX;
  std::optional<double> wall_time_ms;
};

struct IddfsParams {
  int start_depth = 3;
  int increment = 2;
};

struct StreamOptions {
  // After a solution, revert all the way to the root instead of parking the
  // cursor at the emitted leaf. Same solutions, more trail work.
  bool strict_revert = false;
};

// A single-consumer, pull-based stream of solutions. Pulling when exhausted
// stays exhausted; a budget-exceeded stream resumes if its budget is raised.
class SolutionStream {
 public:
  struct Pull {
    enum class Tag { Solution, Exhausted, BudgetExceeded };
    Tag tag = Tag::Exhausted;
    Solution solution;
  };

  SolutionStream(const Program& program, StrategyKind strategy, SearchBudget budget = {},
                 IddfsParams iddfs = {}, StreamOptions options = {}, EngineConfig config = {})
      : engine_(program, config),
        strategy_(strategy),
        budget_(budget),
        iddfs_(iddfs),
        options_(options),
        depth_bound_(iddfs.start_depth) {
    // lazily seeded: no instruction runs until the first pull
    push_source(engine_.tree().root());
  }

  Engine& engine() { return engine_; }
  SearchBudget& budget() { return budget_; }
  uint64_t solutions_emitted() const { return emitted_; }

  Pull next_solution() {
    if (emitted_ >= budget_.max_solutions) return Pull{Pull::Tag::Exhausted, {}};
    if (!started_) {
      started_ = true;
      start_time_ = std::chrono::steady_clock::now();
    }
    for (;;) {
      STNode* n = pop_source();
      if (!n) return Pull{Pull::Tag::Exhausted, {}};
      if (budget_spent()) {
        push_source_front(n);
        return Pull{Pull::Tag::BudgetExceeded, {}};
      }
      engine_.goto_node(n);
      EvalStatus st = engine_.evaluate_node(n, budget_.max_steps);
      if (st != EvalStatus::Evaluated) {
        push_source_front(n);  // cursor parked at the parent by the engine
        return Pull{Pull::Tag::BudgetExceeded, {}};
      }
      switch (n->kind) {
        case NodeKind::Choice: {
          if (strategy_ == StrategyKind::Bfs) {
            for (STNode* c : n->children) queue_.push_back(c);
          } else {
            // stack order: push reversed so child 0 is evaluated first
            for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
              stack_.push_back(*it);
          }
          break;
        }
        case NodeKind::Value:
        case NodeKind::Exception: {
          ++emitted_;
          Pull p;
          p.tag = Pull::Tag::Solution;
          p.solution.kind = n->kind == NodeKind::Value ? Solution::Kind::Value
                                                       : Solution::Kind::Exception;
          p.solution.payload = n->value.k;
          p.solution.message = n->message;
          p.solution.binding = n->binding;
          p.solution.names = binding_names(engine_.vm(), n->binding);
          if (options_.strict_revert) revert_to_root();
          return p;
        }
        case NodeKind::Fail:
          break;  // nothing to report; continue with the next node
        default:
          throw EngineError("unexpected node kind after evaluation");
      }
    }
  }

 private:
  bool budget_spent() const {
    if (engine_.vm().steps >= budget_.max_steps) return true;
    if (budget_.wall_time_ms) {
      auto elapsed = std::chrono::steady_clock::now() - start_time_;
      double ms = std::chrono::duration<double, std::milli>(elapsed).count();
      if (ms >= *budget_.wall_time_ms) return true;
    }
    return false;
  }

  void push_source(STNode* n) {
    if (strategy_ == StrategyKind::Bfs) queue_.push_back(n);
    else stack_.push_back(n);
  }

  void push_source_front(STNode* n) {
    if (strategy_ == StrategyKind::Bfs) queue_.push_front(n);
    else stack_.push_back(n);
  }

  STNode* pop_source() {
    if (strategy_ == StrategyKind::Bfs) {
      if (queue_.empty()) return nullptr;
      STNode* n = queue_.front();
      queue_.pop_front();
      return n;
    }
    for (;;) {
      if (stack_.empty()) {
        if (strategy_ != StrategyKind::Iddfs || deferred_.empty()) return nullptr;
        // deepen: deferred frontier nodes seed the next round, resuming
        // from retained tree state instead of restarting at the root
        depth_bound_ += iddfs_.increment;
        for (auto it = deferred_.rbegin(); it != deferred_.rend(); ++it) stack_.push_back(*it);
        deferred_.clear();
      }
      STNode* n = stack_.back();
      stack_.pop_back();
      if (strategy_ == StrategyKind::Iddfs && n->choice_depth >= depth_bound_) {
        deferred_.push_back(n);
        continue;
      }
      return n;
    }
  }

  void revert_to_root() {
    // routing through goto_node keeps the cursor bookkeeping consistent;
    // from a leaf the common ancestor with the root is the root itself
    engine_.goto_node(engine_.tree().root());
  }

  Engine engine_;
  StrategyKind strategy_;
  SearchBudget budget_;
  IddfsParams iddfs_;
  StreamOptions options_;
  std::vector<STNode*> stack_;   // DFS / ID-DFS
  std::deque<STNode*> queue_;    // BFS
  std::deque<STNode*> deferred_; // ID-DFS frontier at the current bound
  int depth_bound_;
  uint64_t emitted_ = 0;
  bool started_ = false;
  std::chrono::steady_clock::time_point start_time_{};
};

// Convenience constructor mirroring the stream-opening entry point.
inline SolutionStream open_stream(const Program& program, StrategyKind strategy,
                                  SearchBudget budget = {}, IddfsParams iddfs = {},
                                  StreamOptions options = {}, EngineConfig config = {}) {
  return SolutionStream(program, strategy, budget, iddfs, options, config);
}

struct CollectResult {
  std::vector<Solution> solutions;
  bool truncated = false;  // budget ran out before exhaustion
};

// Pulls until exhaustion, the given limit, or the stream's budget.
inline CollectResult collect_all(SolutionStream& stream, uint64_t limit = UINT64_MAX) {
  CollectResult out;
  while (out.solutions.size() < limit) {
    auto p = stream.next_solution();
    if (p.tag == SolutionStream::Pull::Tag::Solution) {
      out.solutions.push_back(std::move(p.solution));
    } else {
      out.truncated = p.tag == SolutionStream::Pull::Tag::BudgetExceeded;
      break;
    }
  }
  return out;
}

}  // namespace masvm
