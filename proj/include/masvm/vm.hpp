#pragma once

// Deterministic execution of instructions over frames and operand stacks with
// full trail recording, plus detection of the four search-relevant events:
// choice, value, exception, failure.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/ir.hpp"

namespace masvm {

// A concrete 32-bit integer or a symbolic term. Symbolic constants are
// normalized away: Symbolic(Const k) and Concrete(k) are the same value.
struct Value {
  int32_t k = 0;
  TermPtr term;  // null means concrete

  bool is_concrete() const { return term == nullptr; }

  static Value concrete(int32_t v) { return Value{v, nullptr}; }
  static Value symbolic(TermPtr t) {
    if (t->kind == TermNode::Kind::Const) return concrete(t->value);
    return Value{0, std::move(t)};
  }

  TermPtr as_term() const { return term ? term : t_const(k); }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.is_concrete() != b.is_concrete()) return false;
    return a.is_concrete() ? a.k == b.k : term_equal(a.term, b.term);
  }
};

inline uint64_t value_hash(const Value& v) {
  return v.is_concrete() ? 0x2545f4914f6cdd1dull * uint64_t(uint32_t(v.k)) + 1
                         : term_hash(v.term);
}

inline std::string value_to_string(const Value& v, const VarNameFn& name = default_var_name) {
  return v.is_concrete() ? std::to_string(v.k) : term_to_string(v.term, name);
}

struct Frame {
  const Function* fn = nullptr;
  int pc = 0;
  std::vector<Value> locals;
  std::vector<Value> operands;
  int frame_id = 0;  // position in the frame stack
};

struct VmState {
  const Program* program = nullptr;
  std::vector<Frame> frames;
  uint64_t steps = 0;           // monotone; never reverted by trails
  int32_t fresh_counter = 0;    // next VarId to mint
  std::vector<std::string> var_names;  // debug names by var id

  Frame& active() {
    if (frames.empty()) throw EngineError("no active frame");
    return frames.back();
  }
  const Frame& active() const {
    if (frames.empty()) throw EngineError("no active frame");
    return frames.back();
  }

  std::string var_name(VarId v) const {
    if (v.id >= 0 && size_t(v.id) < var_names.size() && !var_names[size_t(v.id)].empty())
      return var_names[size_t(v.id)];
    return default_var_name(v);
  }
  VarNameFn namer() const {
    return [this](VarId v) { return var_name(v); };
  }

  static VmState boot(const Program& prog) {
    VmState vm;
    vm.program = &prog;
    const Function* entry = prog.find(prog.entry);
    if (!entry) throw EngineError("program has no entry function");
    Frame f;
    f.fn = entry;
    f.pc = 0;
    f.locals.assign(size_t(entry->locals_count), Value::concrete(0));
    f.frame_id = 0;
    vm.frames.push_back(std::move(f));
    return vm;
  }
};

// Structural hash over frames, locals, operand stacks, pcs, and the
// fresh-variable counter. Step counts and derived interval data excluded.
inline uint64_t state_hash(const VmState& vm) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](uint64_t x) { h = (h ^ x) * 0x100000001b3ull; };
  mix(vm.frames.size());
  for (const Frame& f : vm.frames) {
    mix(std::hash<std::string>{}(f.fn->name));
    mix(uint64_t(uint32_t(f.pc)));
    mix(uint64_t(uint32_t(f.frame_id)));
    mix(f.locals.size());
    for (const Value& v : f.locals) mix(value_hash(v));
    mix(f.operands.size());
    for (const Value& v : f.operands) mix(value_hash(v));
  }
  mix(uint64_t(uint32_t(vm.fresh_counter)));
  return h;
}

// ---------------------------------------------------------------------------
// Trails

// One reversible delta of VM state. Applying an element undoes the change it
// records and yields the element that redoes it. The popped-frame payload
// lives behind a pointer so that the common element kinds stay small.
struct TrailElement {
  enum class Kind {
    LocalWritten,   // locals[slot] held `value`
    OperandPushed,  // a value was pushed; undo pops it
    OperandPopped,  // `value` was popped; undo pushes it back
    FramePushed,    // a frame was pushed; undo pops it
    FramePopped,    // `*frame` was popped; undo restores it
    PcMoved,        // pc was `pc` before the move
    VarMinted,      // fresh-variable counter crossed var.id
  };
  Kind kind = Kind::PcMoved;
  int frame_id = 0;
  int slot = 0;
  int pc = 0;
  VarId var;
  Value value;
  std::unique_ptr<Frame> frame;

  TrailElement() = default;
  TrailElement(Kind k, int fid) : kind(k), frame_id(fid) {}
};

// Stack of trail elements; back() is the top.
using Trail = std::vector<TrailElement>;

inline TrailElement apply_element(VmState& vm, TrailElement e) {
  using K = TrailElement::Kind;
  auto frame_at = [&](int id) -> Frame& {
    if (id < 0 || size_t(id) >= vm.frames.size())
      throw EngineError("trail references missing frame " + std::to_string(id));
    return vm.frames[size_t(id)];
  };
  switch (e.kind) {
    case K::LocalWritten: {
      Frame& f = frame_at(e.frame_id);
      if (e.slot < 0 || size_t(e.slot) >= f.locals.size())
        throw EngineError("trail references missing local slot");
      std::swap(f.locals[size_t(e.slot)], e.value);
      return e;
    }
    case K::OperandPushed: {
      Frame& f = frame_at(e.frame_id);
      if (f.operands.empty()) throw EngineError("trail pop from empty operand stack");
      e.kind = K::OperandPopped;
      e.value = std::move(f.operands.back());
      f.operands.pop_back();
      return e;
    }
    case K::OperandPopped: {
      Frame& f = frame_at(e.frame_id);
      f.operands.push_back(std::move(e.value));
      e.kind = K::OperandPushed;
      e.value = Value{};
      return e;
    }
    case K::FramePushed: {
      if (vm.frames.empty()) throw EngineError("trail pop from empty frame stack");
      e.kind = K::FramePopped;
      e.frame = std::make_unique<Frame>(std::move(vm.frames.back()));
      vm.frames.pop_back();
      return e;
    }
    case K::FramePopped: {
      if (!e.frame || int(vm.frames.size()) != e.frame->frame_id)
        throw EngineError("trail frame restore out of position");
      vm.frames.push_back(std::move(*e.frame));
      e.kind = K::FramePushed;
      e.frame.reset();
      return e;
    }
    case K::PcMoved: {
      Frame& f = frame_at(e.frame_id);
      std::swap(f.pc, e.pc);
      return e;
    }
    case K::VarMinted: {
      if (vm.fresh_counter == e.var.id + 1) vm.fresh_counter = e.var.id;
      else if (vm.fresh_counter == e.var.id) vm.fresh_counter = e.var.id + 1;
      else throw EngineError("trail var counter out of sync");
      return e;  // self-inverse toggle
    }
  }
  throw EngineError("unknown trail element");
}

// Applies `source` top-down (undoing or redoing a segment), moving the
// inverse of each element onto `dest`.
inline void process_trail(VmState& vm, Trail& source, Trail& dest) {
  while (!source.empty()) {
    TrailElement e = std::move(source.back());
    source.pop_back();
    dest.push_back(apply_element(vm, std::move(e)));
  }
}

// Applies a whole trail and returns the inverse trail.
inline Trail apply_trail(VmState& vm, Trail t) {
  Trail inv;
  inv.reserve(t.size());
  process_trail(vm, t, inv);
  return inv;
}

// ---------------------------------------------------------------------------
// Events

struct DecisionAlternative {
  ConstraintExpr constraint;
  int resume_pc = 0;
};

struct Event {
  enum class Kind { Choice, ValueReturned, ExceptionThrown, Failed };
  Kind kind = Kind::Failed;
  std::vector<DecisionAlternative> alternatives;  // Choice: >= 2 feasible entries
  Value value;                                    // ValueReturned
  std::string message;                            // ExceptionThrown
};

struct ExecResult {
  enum class Kind { Event, BudgetExceeded };
  Kind kind = Kind::Event;
  Event event;
  // divisor-guard constraints imposed during this segment, in push order;
  // they are already on the constraint stack
  std::vector<ConstraintExpr> imposed;
};

// Raw decision alternatives of a branching instruction over symbolic
// operands, before feasibility filtering. Branch-taken alternatives come
// first; switch cases stay in listed order with the default last.
inline std::vector<DecisionAlternative> decide_alternatives(const Instruction& ins, int pc,
                                                            const std::vector<Value>& operands) {
  std::vector<DecisionAlternative> alts;
  switch (ins.op) {
    case OpCode::IfZero: {
      TermPtr a = operands.at(0).as_term();
      alts.push_back({ConstraintExpr::rel(ins.cond, a, t_const(0)), ins.target});
      alts.push_back({ConstraintExpr::rel(negate(ins.cond), a, t_const(0)), pc + 1});
      break;
    }
    case OpCode::IfCmp: {
      TermPtr a = operands.at(0).as_term();
      TermPtr b = operands.at(1).as_term();
      alts.push_back({ConstraintExpr::rel(ins.cond, a, b), ins.target});
      alts.push_back({ConstraintExpr::rel(negate(ins.cond), a, b), pc + 1});
      break;
    }
    case OpCode::TableSwitch: {
      TermPtr x = operands.at(0).as_term();
      for (int64_t k = ins.lo; k <= ins.hi; ++k)
        alts.push_back({ConstraintExpr::rel(Cond::Eq, x, t_const(int32_t(k))),
                        ins.targets[size_t(k - ins.lo)]});
      alts.push_back({ConstraintExpr::or_two(Cond::Lt, x, t_const(ins.lo),
                                             Cond::Gt, x, t_const(ins.hi)),
                      ins.target});
      break;
    }
    case OpCode::LookupSwitch: {
      TermPtr x = operands.at(0).as_term();
      std::vector<int32_t> keys;
      for (auto& [k, target] : ins.pairs) {
        alts.push_back({ConstraintExpr::rel(Cond::Eq, x, t_const(k)), target});
        keys.push_back(k);
      }
      alts.push_back({ConstraintExpr::none_of(x, std::move(keys)), ins.target});
      break;
    }
    default:
      throw EngineError("decide_alternatives: not a branching instruction");
  }
  return alts;
}

// Drops alternatives that are already inconsistent with the current stack.
inline std::vector<DecisionAlternative> filter_feasible(std::vector<DecisionAlternative> alts,
                                                        ConstraintStack& cs) {
  std::vector<DecisionAlternative> out;
  for (auto& alt : alts) {
    ConsistencyVerdict v = cs.impose(alt.constraint);
    cs.retract();
    if (v != ConsistencyVerdict::Inconsistent) out.push_back(std::move(alt));
  }
  return out;
}

// Runs the active frame deterministically until an event occurs, recording
// every state mutation onto `recorder`. Symbolic branches whose constraint
// stack already forces one alternative continue without imposing anything.
inline ExecResult execute_until_event(VmState& vm, ConstraintStack& cs, Trail& recorder,
                                      uint64_t step_limit) {
  ExecResult result;

  auto push_op = [&](const Value& v) {
    Frame& f = vm.active();
    f.operands.push_back(v);
    recorder.push_back({TrailElement::Kind::OperandPushed, f.frame_id});
  };
  auto pop_op = [&]() -> Value {
    Frame& f = vm.active();
    if (f.operands.empty()) throw EngineError("operand stack underflow");
    Value v = f.operands.back();
    f.operands.pop_back();
    TrailElement e{TrailElement::Kind::OperandPopped, f.frame_id};
    e.value = v;
    recorder.push_back(std::move(e));
    return v;
  };
  auto set_pc = [&](int target) {
    Frame& f = vm.active();
    TrailElement e{TrailElement::Kind::PcMoved, f.frame_id};
    e.pc = f.pc;
    recorder.push_back(std::move(e));
    f.pc = target;
  };
  auto write_local = [&](int slot, const Value& v) {
    Frame& f = vm.active();
    if (slot < 0 || size_t(slot) >= f.locals.size())
      throw EngineError("local slot out of range");
    TrailElement e{TrailElement::Kind::LocalWritten, f.frame_id};
    e.slot = slot;
    e.value = f.locals[size_t(slot)];
    recorder.push_back(std::move(e));
    f.locals[size_t(slot)] = v;
  };

  auto event = [&](Event ev) {
    result.kind = ExecResult::Kind::Event;
    result.event = std::move(ev);
    return result;
  };

  for (;;) {
    if (vm.steps >= step_limit) {
      result.kind = ExecResult::Kind::BudgetExceeded;
      return result;
    }
    Frame& f = vm.active();
    if (f.pc < 0 || size_t(f.pc) >= f.fn->body.size())
      throw EngineError("pc out of range in function " + f.fn->name);
    const Instruction& ins = f.fn->body[size_t(f.pc)];
    const int pc = f.pc;
    ++vm.steps;

    switch (ins.op) {
      case OpCode::Const:
        push_op(Value::concrete(ins.value));
        set_pc(pc + 1);
        break;
      case OpCode::Load:
        if (ins.slot < 0 || size_t(ins.slot) >= f.locals.size())
          throw EngineError("local slot out of range");
        push_op(f.locals[size_t(ins.slot)]);
        set_pc(pc + 1);
        break;
      case OpCode::Store: {
        Value v = pop_op();
        write_local(ins.slot, v);
        set_pc(pc + 1);
        break;
      }
      case OpCode::Free: {
        VarId var{vm.fresh_counter};
        vm.fresh_counter += 1;
        TrailElement e(TrailElement::Kind::VarMinted, 0);
        e.var = var;
        recorder.push_back(std::move(e));
        if (size_t(var.id) >= vm.var_names.size()) vm.var_names.resize(size_t(var.id) + 1);
        vm.var_names[size_t(var.id)] = ins.name;
        write_local(ins.slot, Value::symbolic(t_var(var)));
        set_pc(pc + 1);
        break;
      }
      case OpCode::Add:
      case OpCode::Sub:
      case OpCode::Mul:
      case OpCode::Div:
      case OpCode::Rem: {
        Value b = pop_op();
        Value a = pop_op();
        if (a.is_concrete() && b.is_concrete()) {
          int64_t x = a.k, y = b.k;
          if ((ins.op == OpCode::Div || ins.op == OpCode::Rem) && y == 0) {
            set_pc(pc + 1);
            Event ev;
            ev.kind = Event::Kind::ExceptionThrown;
            ev.message = "arithmetic: division by zero";
            return event(std::move(ev));
          }
          int32_t r = 0;
          switch (ins.op) {
            case OpCode::Add: r = wrap32(x + y); break;
            case OpCode::Sub: r = wrap32(x - y); break;
            case OpCode::Mul: r = wrap32(x * y); break;
            case OpCode::Div: r = wrap32(x / y); break;
            default: r = wrap32(x % y); break;
          }
          push_op(Value::concrete(r));
        } else {
          if (ins.op == OpCode::Div || ins.op == OpCode::Rem) {
            // Partial operation: a symbolic divisor is guarded by imposing
            // divisor != 0 on use, without creating a choice.
            if (b.is_concrete() && b.k == 0) {
              set_pc(pc + 1);
              Event ev;
              ev.kind = Event::Kind::ExceptionThrown;
              ev.message = "arithmetic: division by zero";
              return event(std::move(ev));
            }
            if (!b.is_concrete()) {
              ConstraintExpr guard = ConstraintExpr::rel(Cond::Ne, b.as_term(), t_const(0));
              ConsistencyVerdict v = cs.impose(guard);
              result.imposed.push_back(guard);
              if (v == ConsistencyVerdict::Inconsistent) {
                set_pc(pc + 1);
                Event ev;
                ev.kind = Event::Kind::Failed;
                return event(std::move(ev));
              }
            }
          }
          TermNode::Kind k = ins.op == OpCode::Add   ? TermNode::Kind::Sum
                             : ins.op == OpCode::Sub ? TermNode::Kind::Diff
                             : ins.op == OpCode::Mul ? TermNode::Kind::Prod
                             : ins.op == OpCode::Div ? TermNode::Kind::Quot
                                                     : TermNode::Kind::Rem;
          push_op(Value::symbolic(t_binary(k, a.as_term(), b.as_term())));
        }
        set_pc(pc + 1);
        break;
      }
      case OpCode::Neg: {
        Value a = pop_op();
        if (a.is_concrete()) push_op(Value::concrete(wrap32(-int64_t(a.k))));
        else push_op(Value::symbolic(t_neg(a.as_term())));
        set_pc(pc + 1);
        break;
      }
      case OpCode::Goto:
        set_pc(ins.target);
        break;
      case OpCode::IfZero:
      case OpCode::IfCmp:
      case OpCode::TableSwitch:
      case OpCode::LookupSwitch: {
        std::vector<Value> operands;
        if (ins.op == OpCode::IfCmp) {
          Value b = pop_op();
          Value a = pop_op();
          operands = {a, b};
        } else {
          operands = {pop_op()};
        }
        bool all_concrete = true;
        for (const Value& v : operands) all_concrete &= v.is_concrete();
        if (all_concrete) {
          int target;
          switch (ins.op) {
            case OpCode::IfZero:
              target = cond_holds(ins.cond, operands[0].k, 0) ? ins.target : pc + 1;
              break;
            case OpCode::IfCmp:
              target = cond_holds(ins.cond, operands[0].k, operands[1].k) ? ins.target : pc + 1;
              break;
            case OpCode::TableSwitch:
              target = (operands[0].k >= ins.lo && operands[0].k <= ins.hi)
                           ? ins.targets[size_t(int64_t(operands[0].k) - int64_t(ins.lo))]
                           : ins.target;
              break;
            default: {
              target = ins.target;
              for (auto& [key, t] : ins.pairs)
                if (key == operands[0].k) { target = t; break; }
              break;
            }
          }
          set_pc(target);
          break;
        }
        auto alts = filter_feasible(decide_alternatives(ins, pc, operands), cs);
        if (alts.empty()) {
          Event ev;
          ev.kind = Event::Kind::Failed;
          return event(std::move(ev));
        }
        if (alts.size() == 1) {
          // the stack already forces this alternative; nothing is imposed
          set_pc(alts[0].resume_pc);
          break;
        }
        Event ev;
        ev.kind = Event::Kind::Choice;
        ev.alternatives = std::move(alts);
        return event(std::move(ev));
      }
      case OpCode::Call: {
        const Function* callee = vm.program->find(ins.name);
        if (!callee) throw EngineError("call to unknown function " + ins.name);
        set_pc(pc + 1);
        Frame nf;
        nf.fn = callee;
        nf.pc = 0;
        nf.locals.assign(size_t(callee->locals_count), Value::concrete(0));
        nf.frame_id = int(vm.frames.size());
        vm.frames.push_back(std::move(nf));
        recorder.push_back(TrailElement(TrailElement::Kind::FramePushed, 0));
        break;
      }
      case OpCode::Return: {
        Value v = pop_op();
        set_pc(pc + 1);
        if (vm.frames.size() == 1) {
          Event ev;
          ev.kind = Event::Kind::ValueReturned;
          ev.value = v;
          return event(std::move(ev));
        }
        TrailElement e(TrailElement::Kind::FramePopped, 0);
        e.frame = std::make_unique<Frame>(std::move(vm.frames.back()));
        recorder.push_back(std::move(e));
        vm.frames.pop_back();
        push_op(v);
        break;
      }
      case OpCode::Throw: {
        set_pc(pc + 1);
        Event ev;
        ev.kind = Event::Kind::ExceptionThrown;
        ev.message = ins.name;
        return event(std::move(ev));
      }
      case OpCode::Fail: {
        set_pc(pc + 1);
        Event ev;
        ev.kind = Event::Kind::Failed;
        return event(std::move(ev));
      }
    }
  }
}

}  // namespace masvm
