#pragma once

// Solutions of a search region: a returned value or a thrown exception,
// together with a model of the free variables on the solution's path.

#include <cstdint>
#include <string>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/vm.hpp"

namespace masvm {

struct Solution {
  enum class Kind { Value, Exception };
  Kind kind = Kind::Value;
  int32_t payload = 0;   // grounded return value
  std::string message;   // exception text
  Binding binding;       // free variables on the path
  // debug names captured while the VM still sits on the solution's path;
  // a later path may re-mint the same ids under different names
  std::map<VarId, std::string> names;

  friend bool operator==(const Solution& a, const Solution& b) {
    return a.kind == b.kind && a.payload == b.payload && a.message == b.message &&
           a.binding == b.binding && a.names == b.names;
  }
};

inline std::map<VarId, std::string> binding_names(const VmState& vm, const Binding& b) {
  std::map<VarId, std::string> out;
  for (auto& [var, value] : b) out[var] = vm.var_name(var);
  return out;
}

struct GroundResult {
  LabelStatus status = LabelStatus::NoModel;
  Binding binding;
  int32_t payload = 0;
};

// Grounds a path at solution time: labels the variables occurring in the
// returned value first (their smallest model fixes the payload), then every
// other variable minted on the path. Minted variables are exactly the ids
// below the fresh counter, because the counter travels with the trails.
inline GroundResult ground_path(ConstraintStack& cs, const Value* returned, int32_t fresh_counter,
                                uint64_t label_budget) {
  std::vector<VarId> order;
  if (returned && !returned->is_concrete()) term_vars(returned->term, order);
  for (int32_t id = 0; id < fresh_counter; ++id) order.push_back(VarId{id});

  GroundResult out;
  LabelResult lr = cs.label(order, label_budget);
  out.status = lr.status;
  if (lr.status != LabelStatus::Found) return out;
  out.binding = std::move(lr.binding);
  if (returned) {
    auto v = eval_term(returned->as_term(), out.binding);
    if (!v) throw EngineError("grounded value evaluation failed despite divisor guards");
    out.payload = *v;
  }
  return out;
}

}  // namespace masvm
