#pragma once

// Randomized inputs shared by the property and acceptance suites: structured
// finite programs (forward jumps only, acyclic calls) and small constraint
// systems with brute-force-friendly constants.

#include <random>
#include <string>
#include <vector>

#include "masvm/constraints.hpp"
#include "masvm/ir.hpp"

namespace masvm::testgen {

struct GenOptions {
  int max_locals = 4;
  int max_free = 6;  // free instructions across the whole program
  int max_blocks = 5;
  int max_stmts_per_block = 2;
  int max_expr_depth = 2;
  bool allow_calls = true;
};

class ProgramGen {
 public:
  ProgramGen(std::mt19937& rng, GenOptions opt = {}) : rng_(rng), opt_(opt) {}

  masvm::Program generate() {
    frees_left_ = opt_.max_free;
    masvm::Program prog;
    std::vector<std::string> callees;
    if (opt_.allow_calls && rnd(0, 99) < 40) {
      int aux = rnd(1, 2);
      for (int i = 0; i < aux; ++i) {
        std::string name = "aux" + std::to_string(i);
        prog.functions[name] = gen_function(name, {});
        callees.push_back(name);
      }
    }
    prog.functions["main"] = gen_function("main", callees);
    prog.entry = "main";
    return prog;
  }

 private:
  std::mt19937& rng_;
  GenOptions opt_;
  int frees_left_ = 0;

  int rnd(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  // Emits code that pushes exactly one value.
  void emit_expr(std::vector<masvm::Instruction>& out, int locals, int depth) {
    using masvm::Instruction;
    using masvm::OpCode;
    int c = rnd(0, 99);
    Instruction ins;
    if (depth <= 0 || c < 35) {
      ins.op = OpCode::Const;
      ins.value = rnd(-10, 10);
      out.push_back(ins);
    } else if (c < 65) {
      ins.op = OpCode::Load;
      ins.slot = rnd(0, locals - 1);
      out.push_back(ins);
    } else if (c < 72) {
      emit_expr(out, locals, depth - 1);
      ins.op = OpCode::Neg;
      out.push_back(ins);
    } else {
      emit_expr(out, locals, depth - 1);
      emit_expr(out, locals, depth - 1);
      static const OpCode ops[] = {OpCode::Add, OpCode::Sub, OpCode::Mul,
                                   OpCode::Div, OpCode::Rem};
      ins.op = ops[rnd(0, 4)];
      out.push_back(ins);
    }
  }

  // Blocks end at operand depth zero; every jump goes to a later block, so
  // control flow is a DAG and all runs terminate.
  masvm::Function gen_function(const std::string& name, const std::vector<std::string>& callees) {
    using masvm::Cond;
    using masvm::Instruction;
    using masvm::OpCode;

    masvm::Function fn;
    fn.name = name;
    fn.locals_count = rnd(1, opt_.max_locals);
    int nblocks = rnd(1, opt_.max_blocks);

    // per-block instructions; branch/switch targets temporarily hold block ids
    auto blocks = std::vector<std::vector<Instruction>>(size_t(nblocks));
    auto later_block = [&](int b) { return rnd(b + 1, nblocks - 1); };

    // a guard jumps to this extra block when a freed value leaves its domain
    const int fail_block = nblocks;
    bool fail_block_used = false;
    auto emit_free = [&](std::vector<Instruction>& out, int slot) {
      Instruction ins;
      ins.op = OpCode::Free;
      ins.slot = slot;
      out.push_back(ins);
      --frees_left_;
      if (rnd(0, 99) < 50) return;  // leave some variables unbounded
      // domain guard: jump out when the value is outside [-8, 8]
      for (auto [cond, bound] : {std::pair{Cond::Lt, -8}, std::pair{Cond::Gt, 8}}) {
        Instruction ld;
        ld.op = OpCode::Load;
        ld.slot = slot;
        out.push_back(ld);
        Instruction k;
        k.op = OpCode::Const;
        k.value = bound;
        out.push_back(k);
        Instruction br;
        br.op = OpCode::IfCmp;
        br.cond = cond;
        br.target = fail_block;
        out.push_back(br);
      }
      fail_block_used = true;
    };

    // leading frees so branches usually see symbolic operands
    int lead = std::min({rnd(1, 2), fn.locals_count, frees_left_});
    for (int i = 0; i < lead; ++i) emit_free(blocks[0], i);

    for (int b = 0; b < nblocks; ++b) {
      auto& out = blocks[size_t(b)];
      int stmts = rnd(0, opt_.max_stmts_per_block);
      for (int s = 0; s < stmts; ++s) {
        int kind = rnd(0, 99);
        if (kind < 25 && frees_left_ > 0) {
          emit_free(out, rnd(0, fn.locals_count - 1));
        } else if (kind < 40 && !callees.empty()) {
          Instruction call;
          call.op = OpCode::Call;
          call.name = callees[size_t(rnd(0, int(callees.size()) - 1))];
          out.push_back(call);
          Instruction store;
          store.op = OpCode::Store;
          store.slot = rnd(0, fn.locals_count - 1);
          out.push_back(store);
        } else {
          emit_expr(out, fn.locals_count, opt_.max_expr_depth);
          Instruction store;
          store.op = OpCode::Store;
          store.slot = rnd(0, fn.locals_count - 1);
          out.push_back(store);
        }
      }

      bool last = b == nblocks - 1;
      // the first block always branches on a freed slot, so most programs
      // actually have choices; later blocks pick their endings freely
      int term = last ? 100 : (b == 0 && lead > 0 ? rnd(0, 39) : rnd(0, 99));
      if (term < 40) {  // conditional branch, falls through to the next block
        Instruction ins;
        static const Cond conds[] = {Cond::Eq, Cond::Ne, Cond::Lt, Cond::Le, Cond::Gt, Cond::Ge};
        ins.cond = conds[rnd(0, 5)];
        bool force_symbolic = b == 0 && lead > 0;
        if (force_symbolic) {
          Instruction ld;
          ld.op = OpCode::Load;
          ld.slot = rnd(0, lead - 1);
          out.push_back(ld);
          if (rnd(0, 1)) {
            ins.op = OpCode::IfZero;
          } else {
            emit_expr(out, fn.locals_count, 1);
            ins.op = OpCode::IfCmp;
          }
        } else if (rnd(0, 1)) {
          emit_expr(out, fn.locals_count, opt_.max_expr_depth);
          ins.op = OpCode::IfZero;
        } else {
          emit_expr(out, fn.locals_count, opt_.max_expr_depth);
          emit_expr(out, fn.locals_count, opt_.max_expr_depth);
          ins.op = OpCode::IfCmp;
        }
        ins.target = later_block(b);
        out.push_back(ins);
      } else if (term < 52) {  // switch
        emit_expr(out, fn.locals_count, 1);
        Instruction ins;
        if (rnd(0, 1)) {
          ins.op = OpCode::TableSwitch;
          ins.lo = rnd(-2, 1);
          ins.hi = ins.lo + rnd(0, 2);
          for (int k = ins.lo; k <= ins.hi; ++k) ins.targets.push_back(later_block(b));
        } else {
          ins.op = OpCode::LookupSwitch;
          int nkeys = rnd(1, 3);
          for (int k = 0; k < nkeys; ++k) {
            int32_t key = int32_t(rnd(-4, 4));
            bool dup = false;
            for (auto& p : ins.pairs) dup |= p.first == key;
            if (!dup) ins.pairs.emplace_back(key, later_block(b));
          }
        }
        ins.target = later_block(b);
        out.push_back(ins);
      } else if (term < 62) {
        Instruction ins;
        ins.op = OpCode::Goto;
        ins.target = later_block(b);
        out.push_back(ins);
      } else {  // terminal
        int t = rnd(0, 99);
        if (t < 70) {
          emit_expr(out, fn.locals_count, opt_.max_expr_depth);
          Instruction ins;
          ins.op = OpCode::Return;
          out.push_back(ins);
        } else if (t < 85) {
          Instruction ins;
          ins.op = OpCode::Throw;
          ins.name = "boom" + std::to_string(rnd(0, 3));
          out.push_back(ins);
        } else {
          Instruction ins;
          ins.op = OpCode::Fail;
          out.push_back(ins);
        }
      }
    }

    if (fail_block_used) {
      Instruction f;
      f.op = OpCode::Fail;
      blocks.push_back({f});
    }

    // resolve block ids to instruction indices
    int total_blocks = int(blocks.size());
    std::vector<int> offset(size_t(total_blocks) + 1, 0);
    for (int b = 0; b < total_blocks; ++b)
      offset[size_t(b) + 1] = offset[size_t(b)] + int(blocks[size_t(b)].size());
    for (int b = 0; b < total_blocks; ++b) {
      for (auto& ins : blocks[size_t(b)]) {
        switch (ins.op) {
          case OpCode::IfZero:
          case OpCode::IfCmp:
          case OpCode::Goto:
            ins.target = offset[size_t(ins.target)];
            break;
          case OpCode::TableSwitch:
          case OpCode::LookupSwitch:
            for (auto& t : ins.targets) t = offset[size_t(t)];
            for (auto& p : ins.pairs) p.second = offset[size_t(p.second)];
            ins.target = offset[size_t(ins.target)];
            break;
          default:
            break;
        }
        fn.body.push_back(std::move(ins));
      }
    }
    return fn;
  }
};

inline masvm::Program random_finite_program(std::mt19937& rng, GenOptions opt = {}) {
  return ProgramGen(rng, opt).generate();
}

// ---------------------------------------------------------------------------
// Random constraint systems over a [-20,20] box

struct ConstraintSystem {
  int nvars = 0;
  std::vector<masvm::ConstraintExpr> exprs;  // box constraints included
};

inline masvm::TermPtr random_term(std::mt19937& rng, int nvars, int depth) {
  auto rnd = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int c = rnd(0, 99);
  if (depth <= 0 || c < 30) return masvm::t_const(int32_t(rnd(-10, 10)));
  if (c < 65) return masvm::t_var(masvm::VarId{int32_t(rnd(0, nvars - 1))});
  if (c < 72) return masvm::t_neg(random_term(rng, nvars, depth - 1));
  masvm::TermPtr a = random_term(rng, nvars, depth - 1);
  masvm::TermPtr b = random_term(rng, nvars, depth - 1);
  switch (rnd(0, 4)) {
    case 0: return masvm::t_sum(a, b);
    case 1: return masvm::t_diff(a, b);
    case 2: return masvm::t_prod(a, b);
    case 3: return masvm::t_quot(a, b);
    default: return masvm::t_rem(a, b);
  }
}

inline ConstraintSystem random_constraint_system(std::mt19937& rng, int max_vars = 3,
                                                 int max_exprs = 4) {
  auto rnd = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ConstraintSystem sys;
  sys.nvars = rnd(1, max_vars);
  for (int v = 0; v < sys.nvars; ++v) {
    sys.exprs.push_back(masvm::ConstraintExpr::rel(
        masvm::Cond::Ge, masvm::t_var(masvm::VarId{v}), masvm::t_const(-20)));
    sys.exprs.push_back(masvm::ConstraintExpr::rel(
        masvm::Cond::Le, masvm::t_var(masvm::VarId{v}), masvm::t_const(20)));
  }
  static const masvm::Cond conds[] = {masvm::Cond::Eq, masvm::Cond::Ne, masvm::Cond::Lt,
                                      masvm::Cond::Le, masvm::Cond::Gt, masvm::Cond::Ge};
  int n = rnd(1, max_exprs);
  for (int i = 0; i < n; ++i) {
    int kind = rnd(0, 99);
    if (kind < 80) {
      sys.exprs.push_back(masvm::ConstraintExpr::rel(conds[size_t(rnd(0, 5))],
                                                     random_term(rng, sys.nvars, 2),
                                                     random_term(rng, sys.nvars, 2)));
    } else if (kind < 90) {
      sys.exprs.push_back(masvm::ConstraintExpr::or_two(
          conds[size_t(rnd(0, 5))], random_term(rng, sys.nvars, 1), random_term(rng, sys.nvars, 1),
          conds[size_t(rnd(0, 5))], random_term(rng, sys.nvars, 1),
          random_term(rng, sys.nvars, 1)));
    } else {
      std::vector<int32_t> keys;
      int nkeys = rnd(1, 3);
      for (int k = 0; k < nkeys; ++k) keys.push_back(int32_t(rnd(-6, 6)));
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      sys.exprs.push_back(
          masvm::ConstraintExpr::none_of(random_term(rng, sys.nvars, 1), std::move(keys)));
    }
  }
  return sys;
}

// Exhaustive model search over the [-20,20] box; the reference for verdict
// soundness and labeling completeness.
inline bool brute_force_has_model(const ConstraintSystem& sys, masvm::Binding* model = nullptr) {
  std::vector<int32_t> vals(size_t(sys.nvars), -20);
  for (;;) {
    masvm::Binding b;
    for (int v = 0; v < sys.nvars; ++v) b[masvm::VarId{v}] = vals[size_t(v)];
    bool ok = true;
    for (const auto& e : sys.exprs)
      if (!masvm::constraint_holds(e, b)) {
        ok = false;
        break;
      }
    if (ok) {
      if (model) *model = b;
      return true;
    }
    int i = 0;
    for (; i < sys.nvars; ++i) {
      if (vals[size_t(i)] < 20) {
        ++vals[size_t(i)];
        break;
      }
      vals[size_t(i)] = -20;
    }
    if (i == sys.nvars) return false;
  }
}

}  // namespace masvm::testgen
