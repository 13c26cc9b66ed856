#pragma once

// Differential-testing reference: a naive interpreter that deep-copies the
// whole machine and constraint state at every choice and explores
// alternatives left-to-right. No trails, no tree.

#include <cstdint>
#include <utility>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/ir.hpp"
#include "masvm/solution.hpp"
#include "masvm/vm.hpp"

namespace masvm {

struct OracleReport {
  std::vector<Solution> solutions;  // in encounter order
  bool truncated = false;           // step or labeling budget ran out
  uint64_t steps_used = 0;
};

inline OracleReport run_oracle(const Program& program, uint64_t step_budget,
                               uint64_t max_solutions = UINT64_MAX,
                               uint64_t label_budget = ConstraintStack::kDefaultLabelBudget) {
  OracleReport report;

  struct PendingState {
    VmState vm;
    ConstraintStack cs;
  };
  std::vector<PendingState> pending;
  pending.push_back({VmState::boot(program), ConstraintStack{}});

  while (!pending.empty()) {
    if (report.solutions.size() >= max_solutions) break;
    PendingState st = std::move(pending.back());
    pending.pop_back();

    Trail discard;
    uint64_t before = st.vm.steps;
    uint64_t limit = before + (step_budget - report.steps_used);
    ExecResult res = execute_until_event(st.vm, st.cs, discard, limit);
    report.steps_used += st.vm.steps - before;

    if (res.kind == ExecResult::Kind::BudgetExceeded) {
      report.truncated = true;
      break;
    }
    switch (res.event.kind) {
      case Event::Kind::Choice: {
        // push right-to-left so the first alternative is explored next
        for (auto it = res.event.alternatives.rbegin(); it != res.event.alternatives.rend(); ++it) {
          PendingState copy{st.vm, st.cs};
          copy.vm.active().pc = it->resume_pc;
          copy.cs.impose(it->constraint);
          pending.push_back(std::move(copy));
        }
        break;
      }
      case Event::Kind::ValueReturned: {
        GroundResult g = ground_path(st.cs, &res.event.value, st.vm.fresh_counter, label_budget);
        if (g.status == LabelStatus::Exhausted) report.truncated = true;
        if (g.status == LabelStatus::Found) {
          Solution s;
          s.kind = Solution::Kind::Value;
          s.payload = g.payload;
          s.names = binding_names(st.vm, g.binding);
          s.binding = std::move(g.binding);
          report.solutions.push_back(std::move(s));
        }
        break;
      }
      case Event::Kind::ExceptionThrown: {
        GroundResult g = ground_path(st.cs, nullptr, st.vm.fresh_counter, label_budget);
        if (g.status == LabelStatus::Exhausted) report.truncated = true;
        if (g.status == LabelStatus::Found) {
          Solution s;
          s.kind = Solution::Kind::Exception;
          s.message = res.event.message;
          s.names = binding_names(st.vm, g.binding);
          s.binding = std::move(g.binding);
          report.solutions.push_back(std::move(s));
        }
        break;
      }
      case Event::Kind::Failed:
        break;
    }
  }
  return report;
}

}  // namespace masvm
