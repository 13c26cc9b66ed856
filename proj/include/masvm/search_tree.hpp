#pragma once

// The explicit, non-strict search tree: five node variants, trail-driven
// upward/downward navigation, common-ancestor routing, and DOT export.

#include <deque>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/vm.hpp"

namespace masvm {

enum class NodeKind { Unevaluated, Value, Exception, Fail, Choice };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Unevaluated: return "unevaluated";
    case NodeKind::Value: return "value";
    case NodeKind::Exception: return "exception";
    case NodeKind::Fail: return "fail";
    case NodeKind::Choice: return "choice";
  }
  return "?";
}

// A search-tree node. Created as Unevaluated with resume coordinates and an
// optional constraint; evaluation fills in one of the four evaluated variants
// in place, so references held by strategies stay valid. The backward trail
// reverts the node's whole execution segment (back to the parent's state);
// the forward trail redoes it. Navigation interconverts the two, so exactly
// one of them is populated at rest.
struct STNode {
  NodeKind kind = NodeKind::Unevaluated;
  STNode* parent = nullptr;
  int id = 0;            // creation index; stable across DOT exports
  int frame_ref = 0;     // frame id at the segment start
  int pc = 0;            // resume pc: where this node's evaluation starts
  int choice_depth = 0;  // number of Choice ancestors
  std::optional<ConstraintExpr> constraint;
  std::vector<ConstraintExpr> imposed_during_run;  // divisor guards etc.
  Trail backward_trail;
  Trail forward_trail;

  Value value;       // Value: grounded payload
  Binding binding;   // Value/Exception: model of the path constraints
  std::string message;  // Exception

  std::vector<STNode*> children;  // Choice, in decision order
  size_t next_unexplored = 0;     // first child index that is still unevaluated

  bool evaluated() const { return kind != NodeKind::Unevaluated; }

  bool is_ancestor_of(const STNode* n) const {
    for (; n; n = n->parent)
      if (n == this) return true;
    return false;
  }
};

class SearchTree {
 public:
  STNode* root() { return root_; }
  const STNode* root() const { return root_; }
  bool empty() const { return arena_.empty(); }
  size_t node_count() const { return arena_.size(); }

  STNode* make_root(int pc) {
    if (root_) throw EngineError("search tree already has a root");
    root_ = new_node();
    root_->pc = pc;
    return root_;
  }

  STNode* add_child(STNode* parent, ConstraintExpr constraint, int frame_ref, int pc) {
    STNode* n = new_node();
    n->parent = parent;
    n->frame_ref = frame_ref;
    n->pc = pc;
    n->constraint = std::move(constraint);
    n->choice_depth = parent->choice_depth + 1;
    parent->children.push_back(n);
    return n;
  }

  size_t count(NodeKind k) const {
    size_t c = 0;
    for (const STNode& n : arena_) c += n.kind == k;
    return c;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const STNode& n : arena_) fn(n);
  }

 private:
  std::deque<STNode> arena_;  // stable addresses
  STNode* root_ = nullptr;

  STNode* new_node() {
    arena_.emplace_back();
    arena_.back().id = int(arena_.size()) - 1;
    return &arena_.back();
  }
};

// Walks parent links from `from` up to `to`, retracting each node's
// constraints and undoing its execution segment. Backward trails turn into
// forward trails along the way. The VM ends in `to`'s post-evaluation state.
inline void navigate_upwards(STNode* from, STNode* to, VmState& vm, ConstraintStack& cs) {
  while (from != to) {
    if (!from) throw EngineError("navigate_upwards: target is not an ancestor");
    for (auto it = from->imposed_during_run.rbegin(); it != from->imposed_during_run.rend(); ++it)
      cs.retract();
    if (from->constraint) cs.retract();
    process_trail(vm, from->backward_trail, from->forward_trail);
    from = from->parent;
  }
}

// Replays the path from `from` down to `to`: redo each node's segment via its
// forward trail (rebuilding the backward trail) and re-impose its
// constraints. `to` itself may be unevaluated; its constraint is imposed and
// its evaluation will start from its resume pc.
inline void navigate_downwards(STNode* from, STNode* to, VmState& vm, ConstraintStack& cs) {
  std::vector<STNode*> path;
  for (STNode* n = to; n != from; n = n->parent) {
    if (!n) throw EngineError("navigate_downwards: source is not an ancestor");
    path.push_back(n);
  }
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    STNode* n = *it;
    process_trail(vm, n->forward_trail, n->backward_trail);
    if (n->constraint) cs.impose(*n->constraint);
    for (const ConstraintExpr& extra : n->imposed_during_run) cs.impose(extra);
  }
}

// Deepest node that is an ancestor-or-self of both. Collects b's ancestor
// set, then walks up from a until membership.
inline STNode* find_common_ancestor(STNode* a, STNode* b) {
  std::unordered_set<const STNode*> seen;
  for (STNode* n = b; n; n = n->parent) seen.insert(n);
  for (STNode* n = a; n; n = n->parent)
    if (seen.count(n)) return n;
  throw EngineError("find_common_ancestor: nodes are in disjoint trees");
}

// Deterministic DOT rendering of the tree. Node ids follow creation order;
// unevaluated nodes render dashed. Edge labels carry the child constraint.
inline std::string export_dot(const SearchTree& tree, const VarNameFn& name = default_var_name) {
  std::string out = "digraph search_tree {\n";
  out += "  node [fontname=\"Helvetica\"];\n";
  auto escape = [](const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r;
  };
  tree.for_each([&](const STNode& n) {
    std::string id = "n" + std::to_string(n.id);
    switch (n.kind) {
      case NodeKind::Unevaluated:
        out += "  " + id + " [label=\"?\", shape=triangle, style=dashed];\n";
        break;
      case NodeKind::Value:
        out += "  " + id + " [label=\"Value(" + escape(value_to_string(n.value, name)) +
               ")\", shape=box];\n";
        break;
      case NodeKind::Exception:
        out += "  " + id + " [label=\"Exception(" + escape(n.message) + ")\", shape=box];\n";
        break;
      case NodeKind::Fail:
        out += "  " + id + " [label=\"Fail\", shape=box];\n";
        break;
      case NodeKind::Choice:
        out += "  " + id + " [label=\"Choice\", shape=ellipse];\n";
        break;
    }
  });
  tree.for_each([&](const STNode& n) {
    for (const STNode* c : n.children) {
      out += "  n" + std::to_string(n.id) + " -> n" + std::to_string(c->id);
      if (c->constraint) out += " [label=\"" + escape(expr_to_string(*c->constraint, name)) + "\"]";
      out += ";\n";
    }
  });
  out += "}\n";
  return out;
}

}  // namespace masvm
