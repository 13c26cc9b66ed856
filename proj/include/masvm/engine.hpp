#pragma once

// Glue between the VM, the constraint stack, and the explicit search tree:
// on-demand node evaluation and cursor movement via common-ancestor routing.

#include <cstdint>
#include <string>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/ir.hpp"
#include "masvm/search_tree.hpp"
#include "masvm/solution.hpp"
#include "masvm/vm.hpp"

namespace masvm {

struct EngineConfig {
  uint64_t label_budget = ConstraintStack::kDefaultLabelBudget;
};

enum class EvalStatus {
  Evaluated,       // node replaced by its evaluated variant
  BudgetExceeded,  // step budget ran out mid-segment; node left unevaluated
  LabelExhausted,  // grounding blew the labeling budget; node left unevaluated
};

// One search run: a program, its VM state, the active constraint system, and
// the search tree under construction. The cursor points at the node whose
// state the live VM embodies.
class Engine {
 public:
  explicit Engine(const Program& program, EngineConfig config = {})
      : program_(&program), vm_(VmState::boot(program)), config_(config) {
    cursor_ = tree_.make_root(0);
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const Program& program() const { return *program_; }
  VmState& vm() { return vm_; }
  const VmState& vm() const { return vm_; }
  ConstraintStack& constraints() { return cstack_; }
  SearchTree& tree() { return tree_; }
  const SearchTree& tree() const { return tree_; }
  STNode* cursor() { return cursor_; }
  uint64_t choices_created() const { return choices_created_; }
  uint64_t evaluations() const { return evaluations_; }
  const EngineConfig& config() const { return config_; }

  // Moves the cursor (and the VM state with it) to `n` along the path over
  // the common ancestor. If `n` is unevaluated this ends in its
  // pre-evaluation position with its constraint imposed. The dominant moves
  // of depth-first descent (one hop down or up) skip the ancestor search,
  // which would otherwise walk to the root on every step.
  void goto_node(STNode* n) {
    if (n == cursor_) return;
    STNode* ancestor;
    if (n->parent == cursor_) ancestor = cursor_;
    else if (cursor_->parent == n) ancestor = n;
    else ancestor = find_common_ancestor(cursor_, n);
    navigate_upwards(cursor_, ancestor, vm_, cstack_);
    navigate_downwards(ancestor, n, vm_, cstack_);
    cursor_ = n;
  }

  // Evaluates an unevaluated node the cursor already sits on: runs the
  // search region from the node's resume pc until an event occurs, records
  // the segment as the node's backward trail, and replaces the node variant
  // in place. `step_limit` caps the cumulative VM step counter.
  EvalStatus evaluate_node(STNode* n, uint64_t step_limit = UINT64_MAX) {
    if (n != cursor_) throw EngineError("evaluate_node: cursor is elsewhere");
    if (n->evaluated()) throw EngineError("evaluate_node: node already evaluated");
    ++evaluations_;

    Trail& rec = n->backward_trail;
    if (n->parent) {
      // The hop from the parent's event pc to this node's resume pc is part
      // of this node's segment, so reverting the trail lands exactly on the
      // parent's post-evaluation state.
      Frame& f = vm_.active();
      if (f.frame_id != n->frame_ref)
        throw EngineError("evaluate_node: active frame does not match node");
      TrailElement e{TrailElement::Kind::PcMoved, f.frame_id};
      e.pc = f.pc;
      rec.push_back(std::move(e));
      f.pc = n->pc;
    }

    ExecResult res = execute_until_event(vm_, cstack_, rec, step_limit);
    n->imposed_during_run = res.imposed;

    if (res.kind == ExecResult::Kind::BudgetExceeded)
      return abandon(n, EvalStatus::BudgetExceeded);

    switch (res.event.kind) {
      case Event::Kind::Choice: {
        n->kind = NodeKind::Choice;
        ++choices_created_;
        for (const DecisionAlternative& alt : res.event.alternatives)
          tree_.add_child(n, alt.constraint, vm_.active().frame_id, alt.resume_pc);
        break;
      }
      case Event::Kind::ValueReturned: {
        GroundResult g = ground_path(cstack_, &res.event.value, vm_.fresh_counter,
                                     config_.label_budget);
        if (g.status == LabelStatus::Exhausted) return abandon(n, EvalStatus::LabelExhausted);
        if (g.status == LabelStatus::NoModel) {
          // propagation had answered Unknown somewhere; the path truly has
          // no integer model, so this is a failure
          n->kind = NodeKind::Fail;
        } else {
          n->kind = NodeKind::Value;
          n->value = Value::concrete(g.payload);
          n->binding = std::move(g.binding);
        }
        break;
      }
      case Event::Kind::ExceptionThrown: {
        GroundResult g = ground_path(cstack_, nullptr, vm_.fresh_counter, config_.label_budget);
        if (g.status == LabelStatus::Exhausted) return abandon(n, EvalStatus::LabelExhausted);
        if (g.status == LabelStatus::NoModel) {
          n->kind = NodeKind::Fail;
        } else {
          n->kind = NodeKind::Exception;
          n->message = res.event.message;
          n->binding = std::move(g.binding);
        }
        break;
      }
      case Event::Kind::Failed:
        n->kind = NodeKind::Fail;
        break;
    }

    if (n->parent) {
      STNode* p = n->parent;
      while (p->next_unexplored < p->children.size() &&
             p->children[p->next_unexplored]->evaluated())
        ++p->next_unexplored;
    }
    return EvalStatus::Evaluated;
  }

  // Convenience used by tests and small drivers: move to a node and
  // evaluate it.
  EvalStatus evaluate(STNode* n, uint64_t step_limit = UINT64_MAX) {
    goto_node(n);
    return evaluate_node(n, step_limit);
  }

  // Hash of the live state: VM structure plus the constraint entries.
  uint64_t cursor_state_hash() const {
    return state_hash(vm_) * 0x9e3779b97f4a7c15ull ^ cstack_.entries_hash();
  }

 private:
  // Rolls a partially executed segment back and parks the cursor at the
  // parent, leaving `n` unevaluated and re-runnable.
  EvalStatus abandon(STNode* n, EvalStatus why) {
    for (auto it = n->imposed_during_run.rbegin(); it != n->imposed_during_run.rend(); ++it)
      cstack_.retract();
    n->imposed_during_run.clear();
    Trail discard;
    process_trail(vm_, n->backward_trail, discard);
    if (n->parent) {
      if (n->constraint) cstack_.retract();
      cursor_ = n->parent;
    }
    return why;
  }

  const Program* program_;
  VmState vm_;
  ConstraintStack cstack_;
  SearchTree tree_;
  STNode* cursor_ = nullptr;
  EngineConfig config_;
  uint64_t choices_created_ = 0;
  uint64_t evaluations_ = 0;
};

}  // namespace masvm
