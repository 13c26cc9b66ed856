#pragma once

// Symbolic integer terms, relational constraints, the conjunction-semantics
// constraint stack with incremental interval propagation, and complete
// labeling of variables at solution time.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "masvm/ir.hpp"

namespace masvm {

// Internal bookkeeping went out of sync (trail discipline, stack underflow,
// unbound variables). Never raised by well-formed engine runs.
struct EngineError : std::logic_error {
  explicit EngineError(const std::string& msg) : std::logic_error(msg) {}
};

struct VarId {
  int32_t id = -1;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

using Binding = std::map<VarId, int32_t>;

// ---------------------------------------------------------------------------
// Terms

struct TermNode;
using TermPtr = std::shared_ptr<const TermNode>;

struct TermNode {
  enum class Kind { Const, Var, Sum, Diff, Prod, Quot, Rem, Neg };
  Kind kind = Kind::Const;
  int32_t value = 0;  // Const
  VarId var;          // Var
  TermPtr a, b;       // operands
};

inline TermPtr t_const(int32_t v) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Const;
  n->value = v;
  return n;
}
inline TermPtr t_var(VarId v) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Var;
  n->var = v;
  return n;
}
inline TermPtr t_binary(TermNode::Kind k, TermPtr a, TermPtr b) {
  auto n = std::make_shared<TermNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}
inline TermPtr t_sum(TermPtr a, TermPtr b) { return t_binary(TermNode::Kind::Sum, std::move(a), std::move(b)); }
inline TermPtr t_diff(TermPtr a, TermPtr b) { return t_binary(TermNode::Kind::Diff, std::move(a), std::move(b)); }
inline TermPtr t_prod(TermPtr a, TermPtr b) { return t_binary(TermNode::Kind::Prod, std::move(a), std::move(b)); }
inline TermPtr t_quot(TermPtr a, TermPtr b) { return t_binary(TermNode::Kind::Quot, std::move(a), std::move(b)); }
inline TermPtr t_rem(TermPtr a, TermPtr b) { return t_binary(TermNode::Kind::Rem, std::move(a), std::move(b)); }
inline TermPtr t_neg(TermPtr a) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermNode::Kind::Neg;
  n->a = std::move(a);
  return n;
}

// Two's-complement wrap of an i64 intermediate to i32.
inline int32_t wrap32(int64_t x) { return static_cast<int32_t>(static_cast<uint32_t>(x)); }

// Deterministic wrapping evaluation. Quot/Rem by zero yields nullopt
// (arithmetic failure); an unbound variable is an engine bug.
inline std::optional<int32_t> eval_term(const TermPtr& t, const Binding& b) {
  switch (t->kind) {
    case TermNode::Kind::Const: return t->value;
    case TermNode::Kind::Var: {
      auto it = b.find(t->var);
      if (it == b.end()) throw EngineError("eval_term: unbound variable v" + std::to_string(t->var.id));
      return it->second;
    }
    case TermNode::Kind::Neg: {
      auto a = eval_term(t->a, b);
      if (!a) return std::nullopt;
      return wrap32(-int64_t(*a));
    }
    default: {
      auto a = eval_term(t->a, b);
      auto r = eval_term(t->b, b);
      if (!a || !r) return std::nullopt;
      int64_t x = *a, y = *r;
      switch (t->kind) {
        case TermNode::Kind::Sum: return wrap32(x + y);
        case TermNode::Kind::Diff: return wrap32(x - y);
        case TermNode::Kind::Prod: return wrap32(x * y);
        case TermNode::Kind::Quot:
          if (y == 0) return std::nullopt;
          return wrap32(x / y);
        case TermNode::Kind::Rem:
          if (y == 0) return std::nullopt;
          return wrap32(x % y);
        default: throw EngineError("eval_term: bad term kind");
      }
    }
  }
}

inline void term_vars(const TermPtr& t, std::vector<VarId>& out) {
  if (!t) return;
  if (t->kind == TermNode::Kind::Var) out.push_back(t->var);
  term_vars(t->a, out);
  term_vars(t->b, out);
}

inline bool term_equal(const TermPtr& x, const TermPtr& y) {
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->kind != y->kind || x->value != y->value || !(x->var == y->var)) return false;
  return term_equal(x->a, y->a) && term_equal(x->b, y->b);
}

inline uint64_t term_hash(const TermPtr& t) {
  if (!t) return 0x9e3779b97f4a7c15ull;
  uint64_t h = uint64_t(t->kind) * 0x100000001b3ull + uint64_t(uint32_t(t->value)) * 31 +
               uint64_t(uint32_t(t->var.id + 1)) * 131;
  h ^= term_hash(t->a) * 0x9ddfea08eb382d69ull;
  h ^= term_hash(t->b) * 0xff51afd7ed558ccdull;
  return h;
}

using VarNameFn = std::function<std::string(VarId)>;

inline std::string default_var_name(VarId v) { return "v" + std::to_string(v.id); }

inline std::string term_to_string(const TermPtr& t, const VarNameFn& name = default_var_name) {
  switch (t->kind) {
    case TermNode::Kind::Const: return std::to_string(t->value);
    case TermNode::Kind::Var: return name(t->var);
    case TermNode::Kind::Neg: return "-(" + term_to_string(t->a, name) + ")";
    default: {
      const char* op = t->kind == TermNode::Kind::Sum  ? " + "
                     : t->kind == TermNode::Kind::Diff ? " - "
                     : t->kind == TermNode::Kind::Prod ? " * "
                     : t->kind == TermNode::Kind::Quot ? " / "
                                                       : " % ";
      return "(" + term_to_string(t->a, name) + op + term_to_string(t->b, name) + ")";
    }
  }
}

// ---------------------------------------------------------------------------
// Constraint expressions

// A relational constraint over two terms. Switch defaults need slightly more:
// a tableswitch default is the disjunction (x < lo) or (x > hi), and a
// lookupswitch default excludes a key set. Disjunctions appear only there.
struct ConstraintExpr {
  enum class Kind { Rel, OrTwo, NoneOf };
  Kind kind = Kind::Rel;

  Cond cond = Cond::Eq;  // Rel / first disjunct
  TermPtr lhs, rhs;

  Cond cond2 = Cond::Eq;  // second disjunct of OrTwo
  TermPtr lhs2, rhs2;

  std::vector<int32_t> keys;  // NoneOf: lhs must avoid these (sorted)

  static ConstraintExpr rel(Cond c, TermPtr l, TermPtr r) {
    ConstraintExpr e;
    e.kind = Kind::Rel;
    e.cond = c;
    e.lhs = std::move(l);
    e.rhs = std::move(r);
    return e;
  }
  static ConstraintExpr or_two(Cond c1, TermPtr l1, TermPtr r1, Cond c2, TermPtr l2, TermPtr r2) {
    ConstraintExpr e;
    e.kind = Kind::OrTwo;
    e.cond = c1; e.lhs = std::move(l1); e.rhs = std::move(r1);
    e.cond2 = c2; e.lhs2 = std::move(l2); e.rhs2 = std::move(r2);
    return e;
  }
  static ConstraintExpr none_of(TermPtr l, std::vector<int32_t> ks) {
    ConstraintExpr e;
    e.kind = Kind::NoneOf;
    e.lhs = std::move(l);
    std::sort(ks.begin(), ks.end());
    e.keys = std::move(ks);
    return e;
  }
};

// Complement of a relational constraint. Only Rel constraints are ever
// negated (branch alternatives); switch defaults are never complemented.
inline ConstraintExpr negate(const ConstraintExpr& c) {
  if (c.kind != ConstraintExpr::Kind::Rel)
    throw EngineError("negate: only relational constraints have a complement");
  return ConstraintExpr::rel(negate(c.cond), c.lhs, c.rhs);
}

inline bool expr_equal(const ConstraintExpr& a, const ConstraintExpr& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == ConstraintExpr::Kind::NoneOf)
    return term_equal(a.lhs, b.lhs) && a.keys == b.keys;
  bool first = a.cond == b.cond && term_equal(a.lhs, b.lhs) && term_equal(a.rhs, b.rhs);
  if (a.kind == ConstraintExpr::Kind::Rel) return first;
  return first && a.cond2 == b.cond2 && term_equal(a.lhs2, b.lhs2) && term_equal(a.rhs2, b.rhs2);
}

inline uint64_t expr_hash(const ConstraintExpr& c) {
  uint64_t h = uint64_t(c.kind) * 0xc2b2ae3d27d4eb4full + uint64_t(c.cond) * 0x165667b19e3779f9ull;
  h ^= term_hash(c.lhs) * 3;
  h ^= term_hash(c.rhs) * 5;
  if (c.kind == ConstraintExpr::Kind::OrTwo) {
    h ^= uint64_t(c.cond2) * 0x27d4eb2f165667c5ull;
    h ^= term_hash(c.lhs2) * 7;
    h ^= term_hash(c.rhs2) * 11;
  }
  for (int32_t k : c.keys) h = h * 0x100000001b3ull + uint64_t(uint32_t(k));
  return h;
}

inline std::string expr_to_string(const ConstraintExpr& c, const VarNameFn& name = default_var_name) {
  switch (c.kind) {
    case ConstraintExpr::Kind::Rel:
      return term_to_string(c.lhs, name) + " " + cond_symbol(c.cond) + " " +
             term_to_string(c.rhs, name);
    case ConstraintExpr::Kind::OrTwo:
      return term_to_string(c.lhs, name) + " " + cond_symbol(c.cond) + " " +
             term_to_string(c.rhs, name) + " or " + term_to_string(c.lhs2, name) + " " +
             cond_symbol(c.cond2) + " " + term_to_string(c.rhs2, name);
    case ConstraintExpr::Kind::NoneOf: {
      std::string s = term_to_string(c.lhs, name) + " not in {";
      for (size_t i = 0; i < c.keys.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(c.keys[i]);
      }
      return s + "}";
    }
  }
  return "?";
}

inline void expr_vars(const ConstraintExpr& c, std::vector<VarId>& out) {
  term_vars(c.lhs, out);
  term_vars(c.rhs, out);
  term_vars(c.lhs2, out);
  term_vars(c.rhs2, out);
}

// Exact truth of a constraint under a total binding. A constraint whose term
// evaluation fails (division by zero) does not hold.
inline bool constraint_holds(const ConstraintExpr& c, const Binding& b) {
  auto rel = [&](Cond cond, const TermPtr& l, const TermPtr& r) {
    auto x = eval_term(l, b), y = eval_term(r, b);
    return x && y && cond_holds(cond, *x, *y);
  };
  switch (c.kind) {
    case ConstraintExpr::Kind::Rel: return rel(c.cond, c.lhs, c.rhs);
    case ConstraintExpr::Kind::OrTwo:
      return rel(c.cond, c.lhs, c.rhs) || rel(c.cond2, c.lhs2, c.rhs2);
    case ConstraintExpr::Kind::NoneOf: {
      auto x = eval_term(c.lhs, b);
      return x && !std::binary_search(c.keys.begin(), c.keys.end(), *x);
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Constraint stack with interval store

enum class ConsistencyVerdict { Consistent, Inconsistent, Unknown };

inline const char* to_string(ConsistencyVerdict v) {
  switch (v) {
    case ConsistencyVerdict::Consistent: return "consistent";
    case ConsistencyVerdict::Inconsistent: return "inconsistent";
    case ConsistencyVerdict::Unknown: return "unknown";
  }
  return "?";
}

struct Interval {
  int64_t lo = INT32_MIN;
  int64_t hi = INT32_MAX;
  bool operator==(const Interval&) const = default;
  bool empty() const { return lo > hi; }
  bool singleton() const { return lo == hi; }
};

enum class LabelStatus { Found, NoModel, Exhausted };

struct LabelResult {
  LabelStatus status = LabelStatus::NoModel;
  Binding binding;
};

// Ordered conjunction of constraints with a per-variable interval store.
// Each push snapshots the interval deltas it causes, so pop restores the
// store to exactly its pre-push state.
class ConstraintStack {
 public:
  // Tightenings allowed per impose/check before giving up with Unknown.
  static constexpr uint64_t kPropagationCap = 10000;
  static constexpr uint64_t kDefaultLabelBudget = 2'000'000;

  ConsistencyVerdict impose(ConstraintExpr c) {
    Entry e;
    expr_vars(c, e.vars_scratch);
    e.expr = std::move(c);
    entries_.push_back(std::move(e));
    size_t idx = entries_.size() - 1;
    for (VarId v : entries_.back().vars_scratch) index_for(v).push_back(idx);
    return propagate({idx});
  }

  ConstraintExpr retract() {
    if (entries_.empty()) throw EngineError("retract: constraint stack underflow");
    Entry& e = entries_.back();
    for (auto it = e.deltas.rbegin(); it != e.deltas.rend(); ++it)
      store_[size_t(it->first)] = it->second;
    for (VarId v : e.vars_scratch) {
      auto& lst = index_for(v);
      lst.pop_back();
    }
    ConstraintExpr out = std::move(e.expr);
    entries_.pop_back();
    return out;
  }

  // Re-runs propagation over all entries on a scratch copy of the store;
  // callers observe no state change.
  ConsistencyVerdict check() const {
    if (entries_.empty()) return ConsistencyVerdict::Consistent;
    ConstraintStack scratch(*this);
    std::vector<size_t> all(scratch.entries_.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    return scratch.propagate(all);
  }

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ConstraintExpr& at(size_t i) const { return entries_[i].expr; }
  const ConstraintExpr& top() const { return entries_.back().expr; }

  Interval interval(VarId v) const {
    if (v.id < 0 || size_t(v.id) >= store_.size()) return Interval{};
    return store_[size_t(v.id)];
  }

  // Structural hash over the constraint entries (not the derived intervals).
  uint64_t entries_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const Entry& e : entries_) h = h * 0x100000001b3ull ^ expr_hash(e.expr);
    return h;
  }

  std::vector<VarId> all_vars() const {
    std::vector<VarId> out;
    for (const Entry& e : entries_)
      out.insert(out.end(), e.vars_scratch.begin(), e.vars_scratch.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Complete depth-first assignment over `vars` (given order, values
  // ascending from each interval lower bound), with propagation between
  // assignments. Variables constrained by the stack but not queried are
  // assigned after the queried ones so the result always satisfies the full
  // conjunction. Returns the lexicographically smallest model, NoModel, or
  // Exhausted once the node budget is spent.
  LabelResult label(const std::vector<VarId>& vars, uint64_t node_budget = kDefaultLabelBudget) {
    std::vector<VarId> order;
    auto add = [&](VarId v) {
      if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
    };
    for (VarId v : vars) add(v);
    for (VarId v : all_vars()) add(v);

    std::vector<int32_t> chosen(order.size(), 0);
    uint64_t nodes = 0;
    bool exhausted = false;

    // returns Found as soon as a full verified assignment exists
    std::function<LabelStatus(size_t)> rec = [&](size_t i) -> LabelStatus {
      if (i == order.size()) {
        Binding b;
        for (size_t k = 0; k < order.size(); ++k) b[order[k]] = chosen[k];
        for (const Entry& e : entries_)
          if (!constraint_holds(e.expr, b)) return LabelStatus::NoModel;
        return LabelStatus::Found;
      }
      Interval iv = interval(order[i]);
      for (int64_t val = iv.lo; val <= iv.hi; ++val) {
        if (++nodes > node_budget) { exhausted = true; return LabelStatus::NoModel; }
        ConsistencyVerdict v = impose(ConstraintExpr::rel(
            Cond::Eq, t_var(order[i]), t_const(int32_t(val))));
        if (v != ConsistencyVerdict::Inconsistent) {
          chosen[i] = int32_t(val);
          LabelStatus r = rec(i + 1);
          if (r == LabelStatus::Found) {
            retract();
            return LabelStatus::Found;
          }
        }
        retract();
        if (exhausted) return LabelStatus::NoModel;
      }
      return LabelStatus::NoModel;
    };

    LabelStatus st = rec(0);
    LabelResult res;
    if (st == LabelStatus::Found) {
      res.status = LabelStatus::Found;
      for (size_t k = 0; k < order.size(); ++k) res.binding[order[k]] = chosen[k];
    } else {
      res.status = exhausted ? LabelStatus::Exhausted : LabelStatus::NoModel;
    }
    return res;
  }

 private:
  struct Entry {
    ConstraintExpr expr;
    std::vector<std::pair<int32_t, Interval>> deltas;  // (var id, pre-push interval)
    std::vector<VarId> vars_scratch;                   // vars occurring in expr
  };

  std::vector<Entry> entries_;
  std::vector<Interval> store_;                 // indexed by var id; default interval
  std::vector<std::vector<size_t>> var_index_;  // var id -> entry indices mentioning it

  std::vector<size_t>& index_for(VarId v) {
    if (size_t(v.id) >= var_index_.size()) var_index_.resize(size_t(v.id) + 1);
    return var_index_[size_t(v.id)];
  }

  Interval var_interval(VarId v) {
    if (size_t(v.id) >= store_.size()) store_.resize(size_t(v.id) + 1);
    return store_[size_t(v.id)];
  }

  enum class NarrowResult { NoChange, Changed, Empty };

  struct PropCtx {
    std::deque<size_t> worklist;
    std::vector<bool> queued;
    uint64_t tightenings = 0;
    bool capped = false;
  };

  void enqueue_entries_of(VarId v, PropCtx& ctx) {
    if (size_t(v.id) >= var_index_.size()) return;
    for (size_t idx : var_index_[size_t(v.id)]) {
      if (!ctx.queued[idx]) {
        ctx.queued[idx] = true;
        ctx.worklist.push_back(idx);
      }
    }
  }

  ConsistencyVerdict propagate(const std::vector<size_t>& seeds) {
    PropCtx ctx;
    ctx.queued.assign(entries_.size(), false);
    for (size_t s : seeds) {
      ctx.queued[s] = true;
      ctx.worklist.push_back(s);
    }
    while (!ctx.worklist.empty()) {
      size_t idx = ctx.worklist.front();
      ctx.worklist.pop_front();
      ctx.queued[idx] = false;
      NarrowResult r = revise(entries_[idx].expr, ctx);
      if (r == NarrowResult::Empty) return ConsistencyVerdict::Inconsistent;
      if (ctx.capped) return ConsistencyVerdict::Unknown;
    }
    return ConsistencyVerdict::Consistent;
  }

  static bool in_box(int64_t lo, int64_t hi) { return lo >= INT32_MIN && hi <= INT32_MAX; }
  static Interval full_box() { return Interval{}; }
  static int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
  }
  static int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

  // Conservative range of a term under the current store. Whenever the exact
  // (unwrapped) range leaves the 32-bit box, wrapping could hit anything, so
  // the result widens to the full box.
  Interval term_range(const TermPtr& t) {
    switch (t->kind) {
      case TermNode::Kind::Const: return Interval{t->value, t->value};
      case TermNode::Kind::Var: return var_interval(t->var);
      case TermNode::Kind::Neg: {
        Interval a = term_range(t->a);
        if (!in_box(-a.hi, -a.lo)) return full_box();
        return Interval{-a.hi, -a.lo};
      }
      case TermNode::Kind::Sum: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (!in_box(a.lo + b.lo, a.hi + b.hi)) return full_box();
        return Interval{a.lo + b.lo, a.hi + b.hi};
      }
      case TermNode::Kind::Diff: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (!in_box(a.lo - b.hi, a.hi - b.lo)) return full_box();
        return Interval{a.lo - b.hi, a.hi - b.lo};
      }
      case TermNode::Kind::Prod: {
        Interval a = term_range(t->a), b = term_range(t->b);
        int64_t c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo, c4 = a.hi * b.hi;
        int64_t lo = std::min({c1, c2, c3, c4}), hi = std::max({c1, c2, c3, c4});
        if (!in_box(lo, hi)) return full_box();
        return Interval{lo, hi};
      }
      case TermNode::Kind::Quot: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (b.lo <= 0 && 0 <= b.hi) return full_box();
        int64_t c1 = a.lo / b.lo, c2 = a.lo / b.hi, c3 = a.hi / b.lo, c4 = a.hi / b.hi;
        return Interval{std::min({c1, c2, c3, c4}), std::max({c1, c2, c3, c4})};
      }
      case TermNode::Kind::Rem: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (b.lo <= 0 && 0 <= b.hi) return full_box();
        int64_t m = std::max(std::abs(b.lo), std::abs(b.hi)) - 1;
        int64_t ma = std::max(std::abs(a.lo), std::abs(a.hi));
        m = std::min(m, ma);
        Interval r{-m, m};
        if (a.lo >= 0) r.lo = 0;   // remainder has the dividend's sign
        if (a.hi <= 0) r.hi = 0;
        return r;
      }
    }
    return full_box();
  }

  void record_delta(VarId v, Interval old) {
    // only the first change per push needs snapshotting
    auto& deltas = entries_.back().deltas;
    for (auto& [id, iv] : deltas)
      if (id == v.id) return;
    deltas.emplace_back(v.id, old);
  }

  // Intersects a term's possible values with `target`, pushing bounds down
  // into variables where the inversion is exact. Widens (skips) whenever
  // wrapping could make the inversion unsound.
  NarrowResult narrow(const TermPtr& t, Interval target, PropCtx& ctx) {
    if (target.lo < INT32_MIN) target.lo = INT32_MIN;
    if (target.hi > INT32_MAX) target.hi = INT32_MAX;
    if (target.empty()) return NarrowResult::Empty;
    switch (t->kind) {
      case TermNode::Kind::Const:
        return (t->value >= target.lo && t->value <= target.hi) ? NarrowResult::NoChange
                                                                : NarrowResult::Empty;
      case TermNode::Kind::Var: {
        Interval cur = var_interval(t->var);
        Interval next{std::max(cur.lo, target.lo), std::min(cur.hi, target.hi)};
        if (next.empty()) return NarrowResult::Empty;
        if (next == cur) return NarrowResult::NoChange;
        if (++ctx.tightenings > kPropagationCap) {
          ctx.capped = true;
          return NarrowResult::NoChange;
        }
        record_delta(t->var, cur);
        store_[size_t(t->var.id)] = next;
        enqueue_entries_of(t->var, ctx);
        return NarrowResult::Changed;
      }
      case TermNode::Kind::Neg: {
        Interval a = term_range(t->a);
        if (a.lo == INT32_MIN) return NarrowResult::NoChange;  // -INT32_MIN wraps
        return narrow(t->a, Interval{-target.hi, -target.lo}, ctx);
      }
      case TermNode::Kind::Sum: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (!in_box(a.lo + b.lo, a.hi + b.hi)) return NarrowResult::NoChange;
        NarrowResult r1 = narrow(t->a, Interval{target.lo - b.hi, target.hi - b.lo}, ctx);
        if (r1 == NarrowResult::Empty) return r1;
        NarrowResult r2 = narrow(t->b, Interval{target.lo - a.hi, target.hi - a.lo}, ctx);
        if (r2 == NarrowResult::Empty) return r2;
        return (r1 == NarrowResult::Changed || r2 == NarrowResult::Changed)
                   ? NarrowResult::Changed : NarrowResult::NoChange;
      }
      case TermNode::Kind::Diff: {
        Interval a = term_range(t->a), b = term_range(t->b);
        if (!in_box(a.lo - b.hi, a.hi - b.lo)) return NarrowResult::NoChange;
        NarrowResult r1 = narrow(t->a, Interval{target.lo + b.lo, target.hi + b.hi}, ctx);
        if (r1 == NarrowResult::Empty) return r1;
        NarrowResult r2 = narrow(t->b, Interval{a.lo - target.hi, a.hi - target.lo}, ctx);
        if (r2 == NarrowResult::Empty) return r2;
        return (r1 == NarrowResult::Changed || r2 == NarrowResult::Changed)
                   ? NarrowResult::Changed : NarrowResult::NoChange;
      }
      case TermNode::Kind::Prod: {
        // invert only through a factor whose range is pinned to one value,
        // and only when the product of the other side cannot wrap
        Interval ra = term_range(t->a), rb = term_range(t->b);
        const TermPtr* other = nullptr;
        int64_t k = 0;
        if (ra.singleton()) { k = ra.lo; other = &t->b; }
        else if (rb.singleton()) { k = rb.lo; other = &t->a; }
        if (!other) return NarrowResult::NoChange;
        if (k == 0)
          return (target.lo <= 0 && 0 <= target.hi) ? NarrowResult::NoChange : NarrowResult::Empty;
        Interval o = term_range(*other);
        if (!in_box(std::min(k * o.lo, k * o.hi), std::max(k * o.lo, k * o.hi)))
          return NarrowResult::NoChange;
        Interval want = k > 0 ? Interval{ceil_div(target.lo, k), floor_div(target.hi, k)}
                              : Interval{ceil_div(target.hi, k), floor_div(target.lo, k)};
        return narrow(*other, want, ctx);
      }
      case TermNode::Kind::Quot:
      case TermNode::Kind::Rem:
        return NarrowResult::NoChange;  // forward ranges only
    }
    return NarrowResult::NoChange;
  }

  static bool rel_feasible(Cond c, Interval l, Interval r) {
    switch (c) {
      case Cond::Eq: return l.lo <= r.hi && r.lo <= l.hi;
      case Cond::Ne: return !(l.singleton() && r.singleton() && l.lo == r.lo);
      case Cond::Lt: return l.lo < r.hi;
      case Cond::Le: return l.lo <= r.hi;
      case Cond::Gt: return l.hi > r.lo;
      case Cond::Ge: return l.hi >= r.lo;
    }
    return true;
  }

  NarrowResult narrow_rel(Cond cond, const TermPtr& lhs, const TermPtr& rhs, PropCtx& ctx) {
    // structurally identical sides evaluate equal whenever they evaluate at
    // all, so strict disequality and strict orders can never hold
    if ((cond == Cond::Ne || cond == Cond::Lt || cond == Cond::Gt) && term_equal(lhs, rhs))
      return NarrowResult::Empty;
    Interval l = term_range(lhs), r = term_range(rhs);
    NarrowResult acc = NarrowResult::NoChange;
    auto apply = [&](const TermPtr& t, Interval target) {
      if (acc == NarrowResult::Empty) return;
      NarrowResult n = narrow(t, target, ctx);
      if (n == NarrowResult::Empty) acc = NarrowResult::Empty;
      else if (n == NarrowResult::Changed && acc == NarrowResult::NoChange) acc = NarrowResult::Changed;
    };
    switch (cond) {
      case Cond::Eq: {
        Interval meet{std::max(l.lo, r.lo), std::min(l.hi, r.hi)};
        if (meet.empty()) return NarrowResult::Empty;
        apply(lhs, meet);
        apply(rhs, meet);
        break;
      }
      case Cond::Ne: {
        if (l.singleton() && r.singleton() && l.lo == r.lo) return NarrowResult::Empty;
        // prune only at singletons: trim the matching endpoint
        if (r.singleton()) {
          if (l.lo == r.lo) apply(lhs, Interval{l.lo + 1, l.hi});
          else if (l.hi == r.lo) apply(lhs, Interval{l.lo, l.hi - 1});
        }
        if (l.singleton()) {
          if (r.lo == l.lo) apply(rhs, Interval{r.lo + 1, r.hi});
          else if (r.hi == l.lo) apply(rhs, Interval{r.lo, r.hi - 1});
        }
        break;
      }
      case Cond::Lt:
        if (l.lo >= r.hi) return NarrowResult::Empty;
        apply(lhs, Interval{l.lo, r.hi - 1});
        apply(rhs, Interval{l.lo + 1, r.hi});
        break;
      case Cond::Le:
        if (l.lo > r.hi) return NarrowResult::Empty;
        apply(lhs, Interval{l.lo, r.hi});
        apply(rhs, Interval{l.lo, r.hi});
        break;
      case Cond::Gt:
        if (l.hi <= r.lo) return NarrowResult::Empty;
        apply(lhs, Interval{r.lo + 1, l.hi});
        apply(rhs, Interval{r.lo, l.hi - 1});
        break;
      case Cond::Ge:
        if (l.hi < r.lo) return NarrowResult::Empty;
        apply(lhs, Interval{r.lo, l.hi});
        apply(rhs, Interval{r.lo, l.hi});
        break;
    }
    return acc;
  }

  NarrowResult revise(const ConstraintExpr& c, PropCtx& ctx) {
    switch (c.kind) {
      case ConstraintExpr::Kind::Rel:
        return narrow_rel(c.cond, c.lhs, c.rhs, ctx);
      case ConstraintExpr::Kind::OrTwo: {
        bool f1 = rel_feasible(c.cond, term_range(c.lhs), term_range(c.rhs));
        bool f2 = rel_feasible(c.cond2, term_range(c.lhs2), term_range(c.rhs2));
        if (!f1 && !f2) return NarrowResult::Empty;
        if (f1 && f2) return NarrowResult::NoChange;
        return f1 ? narrow_rel(c.cond, c.lhs, c.rhs, ctx)
                  : narrow_rel(c.cond2, c.lhs2, c.rhs2, ctx);
      }
      case ConstraintExpr::Kind::NoneOf: {
        Interval r = term_range(c.lhs);
        int64_t lo = r.lo, hi = r.hi;
        auto excluded = [&](int64_t v) {
          return v >= INT32_MIN && v <= INT32_MAX &&
                 std::binary_search(c.keys.begin(), c.keys.end(), int32_t(v));
        };
        while (lo <= hi && excluded(lo)) ++lo;
        while (hi >= lo && excluded(hi)) --hi;
        if (lo > hi) return NarrowResult::Empty;
        if (lo == r.lo && hi == r.hi) return NarrowResult::NoChange;
        return narrow(c.lhs, Interval{lo, hi}, ctx);
      }
    }
    return NarrowResult::NoChange;
  }
};

}  // namespace masvm
