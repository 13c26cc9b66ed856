#pragma once

// Instruction set and program model of the mini constraint-logic bytecode
// language, plus the textual assembly front end (.mas files).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace masvm {

// Comparison kinds used by conditional branches and constraints.
enum class Cond { Eq, Ne, Lt, Le, Gt, Ge };

// Complement of a comparison: the branch not taken imposes the negation.
inline Cond negate(Cond c) {
  switch (c) {
    case Cond::Eq: return Cond::Ne;
    case Cond::Ne: return Cond::Eq;
    case Cond::Lt: return Cond::Ge;
    case Cond::Ge: return Cond::Lt;
    case Cond::Gt: return Cond::Le;
    case Cond::Le: return Cond::Gt;
  }
  return Cond::Eq;  // unreachable
}

inline const char* cond_mnemonic(Cond c) {
  switch (c) {
    case Cond::Eq: return "eq";
    case Cond::Ne: return "ne";
    case Cond::Lt: return "lt";
    case Cond::Le: return "le";
    case Cond::Gt: return "gt";
    case Cond::Ge: return "ge";
  }
  return "?";
}

inline const char* cond_symbol(Cond c) {
  switch (c) {
    case Cond::Eq: return "==";
    case Cond::Ne: return "!=";
    case Cond::Lt: return "<";
    case Cond::Le: return "<=";
    case Cond::Gt: return ">";
    case Cond::Ge: return ">=";
  }
  return "?";
}

inline bool cond_holds(Cond c, int64_t a, int64_t b) {
  switch (c) {
    case Cond::Eq: return a == b;
    case Cond::Ne: return a != b;
    case Cond::Lt: return a < b;
    case Cond::Le: return a <= b;
    case Cond::Gt: return a > b;
    case Cond::Ge: return a >= b;
  }
  return false;
}

enum class OpCode {
  Const,         // push immediate
  Load,          // push locals[slot]
  Store,         // locals[slot] = pop
  Free,          // locals[slot] = fresh symbolic variable
  Add, Sub, Mul, Div, Rem, Neg,
  IfZero,        // pop a; branch to target if (a cond 0)
  IfCmp,         // pop b, pop a; branch to target if (a cond b)
  Goto,
  TableSwitch,   // pop x; jump to targets[x - lo], or default
  LookupSwitch,  // pop x; jump to the target paired with x, or default
  Call,
  Return,        // pop return value; leave the current frame
  Throw,         // end the path with an exception message
  Fail,          // end the path with an explicit failure
};

struct Instruction {
  OpCode op = OpCode::Fail;
  int32_t value = 0;                     // Const immediate
  int slot = 0;                          // Load/Store/Free
  std::string name;                      // Free debug name, Call target, Throw message
  Cond cond = Cond::Eq;                  // IfZero/IfCmp
  int target = -1;                       // branch/goto/switch default target (instruction index)
  int32_t lo = 0, hi = 0;                // TableSwitch bounds
  std::vector<int> targets;              // TableSwitch case targets
  std::vector<std::pair<int32_t, int>> pairs;  // LookupSwitch (key, target)

  friend bool operator==(const Instruction& a, const Instruction& b) {
    return a.op == b.op && a.value == b.value && a.slot == b.slot &&
           a.name == b.name && a.cond == b.cond && a.target == b.target &&
           a.lo == b.lo && a.hi == b.hi && a.targets == b.targets &&
           a.pairs == b.pairs;
  }
};

struct Function {
  std::string name;
  int locals_count = 0;
  std::vector<Instruction> body;

  friend bool operator==(const Function& a, const Function& b) {
    return a.name == b.name && a.locals_count == b.locals_count && a.body == b.body;
  }
};

struct Program {
  std::map<std::string, Function> functions;
  std::string entry = "main";

  const Function* find(const std::string& name) const {
    auto it = functions.find(name);
    return it == functions.end() ? nullptr : &it->second;
  }

  friend bool operator==(const Program& a, const Program& b) {
    return a.entry == b.entry && a.functions == b.functions;
  }
};

struct ParseError {
  int line = 0;
  int column = 0;
  std::string message;

  std::string to_string() const {
    return "parse error at " + std::to_string(line) + ":" + std::to_string(column) +
           ": " + message;
  }
};

using ParseResult = std::variant<Program, ParseError>;

// True when control can fall through from an instruction to its successor.
inline bool falls_through(const Instruction& ins) {
  switch (ins.op) {
    case OpCode::Goto:
    case OpCode::Return:
    case OpCode::Throw:
    case OpCode::Fail:
    case OpCode::TableSwitch:
    case OpCode::LookupSwitch:
      return false;
    default:
      return true;
  }
}

namespace detail {

struct Tok {
  std::string text;
  int column = 0;
};

inline std::vector<Tok> tokenize_line(const std::string& line) {
  std::vector<Tok> out;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ';') break;  // comment to end of line
    if (c == ' ' || c == '\t' || c == '\r') { ++i; continue; }
    size_t start = i;
    if (c == '"') {
      ++i;
      while (i < line.size() && line[i] != '"') {
        if (line[i] == '\\' && i + 1 < line.size()) ++i;
        ++i;
      }
      if (i < line.size()) ++i;  // closing quote
    } else {
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
             line[i] != '\r' && line[i] != ';')
        ++i;
    }
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

inline bool parse_int(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  int64_t v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
    if (v > int64_t(1) << 40) return false;  // reject absurd literals early
  }
  out = (s[0] == '-') ? -v : v;
  return true;
}

inline std::optional<Cond> parse_cond(const std::string& s) {
  if (s == "eq") return Cond::Eq;
  if (s == "ne") return Cond::Ne;
  if (s == "lt") return Cond::Lt;
  if (s == "le") return Cond::Le;
  if (s == "gt") return Cond::Gt;
  if (s == "ge") return Cond::Ge;
  return std::nullopt;
}

inline std::string unescape(const std::string& quoted) {
  std::string out;
  for (size_t i = 1; i + 1 < quoted.size(); ++i) {
    char c = quoted[i];
    if (c == '\\' && i + 2 < quoted.size()) {
      char n = quoted[++i];
      if (n == 'n') out += '\n';
      else if (n == 't') out += '\t';
      else out += n;
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string escape(const std::string& raw) {
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"' || c == '\\') { out += '\\'; out += c; }
    else if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

// Parses the textual assembly format. One instruction per line, `;` comments,
// `fn <name>/<locals>:` function headers, `<label>:` markers. Labels are
// resolved to instruction indices; the result is fully validated.
inline ParseResult parse_program(const std::string& text) {
  using namespace detail;

  Program prog;
  Function* cur = nullptr;
  std::map<std::string, int> labels;               // label -> instruction index
  struct Fixup { std::string label; int line, column; int ins_index; int which; };
  std::vector<Fixup> fixups;                        // which: -1 target, >=0 case index

  auto finish_function = [&]() -> std::optional<ParseError> {
    if (!cur) return std::nullopt;
    for (auto& f : fixups) {
      auto it = labels.find(f.label);
      if (it == labels.end())
        return ParseError{f.line, f.column, "unresolved label '" + f.label + "'"};
      Instruction& ins = cur->body[f.ins_index];
      if (f.which < 0) ins.target = it->second;
      else if (f.which < int(ins.targets.size())) ins.targets[f.which] = it->second;
      else ins.pairs[f.which - ins.targets.size()].second = it->second;
    }
    // Late labels at end-of-body would point past the last instruction.
    for (auto& [name, idx] : labels) {
      if (idx >= int(cur->body.size()))
        return ParseError{0, 0, "label '" + name + "' points past the end of function '" +
                                 cur->name + "'"};
    }
    fixups.clear();
    labels.clear();
    cur = nullptr;
    return std::nullopt;
  };

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    auto toks = tokenize_line(line);
    if (toks.empty()) continue;
    const std::string& head = toks[0].text;

    if (head == "fn") {
      if (toks.size() != 2 || toks[1].text.empty() || toks[1].text.back() != ':')
        return ParseError{line_no, toks[0].column, "expected 'fn <name>/<locals>:'"};
      std::string sig = toks[1].text.substr(0, toks[1].text.size() - 1);
      auto slash = sig.find('/');
      int64_t locals = 0;
      if (slash == std::string::npos || !parse_int(sig.substr(slash + 1), locals) ||
          locals < 0 || locals > 4096)
        return ParseError{line_no, toks[1].column, "bad function signature '" + sig + "'"};
      std::string name = sig.substr(0, slash);
      if (name.empty())
        return ParseError{line_no, toks[1].column, "empty function name"};
      if (auto err = finish_function()) return *err;
      if (prog.functions.count(name))
        return ParseError{line_no, toks[1].column, "duplicate function name '" + name + "'"};
      cur = &prog.functions[name];
      cur->name = name;
      cur->locals_count = int(locals);
      continue;
    }

    if (head.size() > 1 && head.back() == ':' && toks.size() == 1) {
      if (!cur) return ParseError{line_no, toks[0].column, "label outside of a function"};
      std::string label = head.substr(0, head.size() - 1);
      if (labels.count(label))
        return ParseError{line_no, toks[0].column, "duplicate label '" + label + "'"};
      labels[label] = int(cur->body.size());
      continue;
    }

    if (!cur) return ParseError{line_no, toks[0].column, "instruction outside of a function"};

    auto bad = [&](const std::string& msg) { return ParseError{line_no, toks[0].column, msg}; };
    auto need = [&](size_t n) { return toks.size() == n; };
    int ins_index = int(cur->body.size());
    auto label_operand = [&](const Tok& t, int which) {
      fixups.push_back({t.text, line_no, t.column, ins_index, which});
    };

    Instruction ins;
    int64_t v = 0;

    if (head == "const") {
      if (!need(2) || !parse_int(toks[1].text, v) || v < INT32_MIN || v > INT32_MAX)
        return bad("const expects a 32-bit integer");
      ins.op = OpCode::Const;
      ins.value = int32_t(v);
    } else if (head == "load" || head == "store" || head == "free") {
      if (head == "free" && toks.size() == 3) {
        // optional debug name: free <slot> <name>
        if (!parse_int(toks[1].text, v) || v < 0) return bad("free expects a slot index");
        ins.op = OpCode::Free;
        ins.slot = int(v);
        ins.name = toks[2].text;
      } else {
        if (!need(2) || !parse_int(toks[1].text, v) || v < 0)
          return bad(head + " expects a slot index");
        ins.op = head == "load" ? OpCode::Load : head == "store" ? OpCode::Store : OpCode::Free;
        ins.slot = int(v);
      }
    } else if (head == "add" || head == "sub" || head == "mul" || head == "div" ||
               head == "rem" || head == "neg") {
      if (!need(1)) return bad(head + " takes no operands");
      ins.op = head == "add" ? OpCode::Add
             : head == "sub" ? OpCode::Sub
             : head == "mul" ? OpCode::Mul
             : head == "div" ? OpCode::Div
             : head == "rem" ? OpCode::Rem
                             : OpCode::Neg;
    } else if (head == "ifzero" || head == "ifcmp") {
      if (!need(3)) return bad(head + " expects '<cond> <label>'");
      auto c = parse_cond(toks[1].text);
      if (!c) return bad("unknown condition '" + toks[1].text + "'");
      ins.op = head == "ifzero" ? OpCode::IfZero : OpCode::IfCmp;
      ins.cond = *c;
      label_operand(toks[2], -1);
    } else if (head == "goto") {
      if (!need(2)) return bad("goto expects a label");
      ins.op = OpCode::Goto;
      label_operand(toks[1], -1);
    } else if (head == "tableswitch") {
      // tableswitch <lo> <hi> <target...> default <label>
      if (toks.size() < 5) return bad("tableswitch expects '<lo> <hi> <targets...> default <label>'");
      int64_t lo = 0, hi = 0;
      if (!parse_int(toks[1].text, lo) || !parse_int(toks[2].text, hi) ||
          lo < INT32_MIN || hi > INT32_MAX || lo > hi)
        return bad("tableswitch expects integer bounds with lo <= hi");
      ins.op = OpCode::TableSwitch;
      ins.lo = int32_t(lo);
      ins.hi = int32_t(hi);
      size_t i = 3;
      int case_idx = 0;
      while (i < toks.size() && toks[i].text != "default") {
        ins.targets.push_back(-1);
        label_operand(toks[i], case_idx++);
        ++i;
      }
      if (i + 2 != toks.size() || toks[i].text != "default")
        return bad("tableswitch expects 'default <label>' last");
      if (int64_t(ins.targets.size()) != hi - lo + 1)
        return bad("tableswitch has " + std::to_string(ins.targets.size()) + " targets, expected " +
                   std::to_string(hi - lo + 1));
      label_operand(toks[i + 1], -1);
    } else if (head == "lookupswitch") {
      // lookupswitch <key>:<label> ... default <label>
      if (toks.size() < 3) return bad("lookupswitch expects '<key>:<label>... default <label>'");
      ins.op = OpCode::LookupSwitch;
      size_t i = 1;
      while (i < toks.size() && toks[i].text != "default") {
        auto colon = toks[i].text.find(':');
        int64_t key = 0;
        if (colon == std::string::npos || !parse_int(toks[i].text.substr(0, colon), key) ||
            key < INT32_MIN || key > INT32_MAX || colon + 1 >= toks[i].text.size())
          return bad("bad lookupswitch case '" + toks[i].text + "'");
        for (auto& p : ins.pairs)
          if (p.first == int32_t(key)) return bad("duplicate lookupswitch key " + std::to_string(key));
        ins.pairs.emplace_back(int32_t(key), -1);
        Tok label_tok{toks[i].text.substr(colon + 1), toks[i].column + int(colon) + 1};
        fixups.push_back({label_tok.text, line_no, label_tok.column, ins_index,
                          int(ins.pairs.size()) - 1});
        ++i;
      }
      if (i + 2 != toks.size() || toks[i].text != "default")
        return bad("lookupswitch expects 'default <label>' last");
      label_operand(toks[i + 1], -1);
    } else if (head == "call") {
      if (!need(2)) return bad("call expects a function name");
      ins.op = OpCode::Call;
      ins.name = toks[1].text;
    } else if (head == "return") {
      if (!need(1)) return bad("return takes no operands");
      ins.op = OpCode::Return;
    } else if (head == "throw") {
      if (!need(2) || toks[1].text.size() < 2 || toks[1].text.front() != '"' ||
          toks[1].text.back() != '"')
        return bad("throw expects a quoted message");
      ins.op = OpCode::Throw;
      ins.name = unescape(toks[1].text);
    } else if (head == "fail") {
      if (!need(1)) return bad("fail takes no operands");
      ins.op = OpCode::Fail;
    } else {
      return bad("unknown mnemonic '" + head + "'");
    }

    cur->body.push_back(std::move(ins));
  }

  if (auto err = finish_function()) return *err;
  if (!prog.functions.count(prog.entry))
    return ParseError{line_no, 1, "missing entry function '" + prog.entry + "'"};
  return prog;
}

// Structural checks over an already-built Program. Returns one diagnostic per
// violation; an empty list means every Function/Instruction invariant holds.
inline std::vector<std::string> validate(const Program& prog) {
  std::vector<std::string> diags;
  auto diag = [&](const std::string& fn, int idx, const std::string& msg) {
    diags.push_back(fn + "[" + std::to_string(idx) + "]: " + msg);
  };

  if (!prog.functions.count(prog.entry))
    diags.push_back("entry function '" + prog.entry + "' does not exist");

  for (auto& [fname, fn] : prog.functions) {
    int n = int(fn.body.size());
    if (n == 0) {
      diags.push_back(fname + ": empty body");
      continue;
    }
    auto check_target = [&](int idx, int t, const char* what) {
      if (t < 0 || t >= n) diag(fname, idx, std::string(what) + " target out of range");
    };
    for (int i = 0; i < n; ++i) {
      const Instruction& ins = fn.body[i];
      switch (ins.op) {
        case OpCode::Load:
        case OpCode::Store:
        case OpCode::Free:
          if (ins.slot < 0 || ins.slot >= fn.locals_count)
            diag(fname, i, "slot " + std::to_string(ins.slot) + " out of range (locals=" +
                               std::to_string(fn.locals_count) + ")");
          break;
        case OpCode::IfZero:
        case OpCode::IfCmp:
        case OpCode::Goto:
          check_target(i, ins.target, "branch");
          break;
        case OpCode::TableSwitch: {
          if (ins.lo > ins.hi) diag(fname, i, "tableswitch lo > hi");
          int64_t want = int64_t(ins.hi) - int64_t(ins.lo) + 1;
          if (int64_t(ins.targets.size()) != want)
            diag(fname, i, "tableswitch has " + std::to_string(ins.targets.size()) +
                               " targets, expected " + std::to_string(want));
          for (int t : ins.targets) check_target(i, t, "tableswitch case");
          check_target(i, ins.target, "tableswitch default");
          break;
        }
        case OpCode::LookupSwitch: {
          for (size_t a = 0; a < ins.pairs.size(); ++a)
            for (size_t b = a + 1; b < ins.pairs.size(); ++b)
              if (ins.pairs[a].first == ins.pairs[b].first)
                diag(fname, i, "duplicate lookupswitch key " + std::to_string(ins.pairs[a].first));
          for (auto& [k, t] : ins.pairs) check_target(i, t, "lookupswitch case");
          check_target(i, ins.target, "lookupswitch default");
          break;
        }
        case OpCode::Call:
          if (!prog.functions.count(ins.name))
            diag(fname, i, "call target '" + ins.name + "' does not exist");
          break;
        default:
          break;
      }
    }
    if (falls_through(fn.body[n - 1]))
      diag(fname, n - 1, "control can fall off the end of the function");
  }
  return diags;
}

// Canonical pretty-printer. Reparsing the output yields a structurally equal
// Program; label names are regenerated as L<index>.
inline std::string print_program(const Program& prog) {
  std::string out;
  bool first = true;
  for (auto& [fname, fn] : prog.functions) {
    if (!first) out += "\n";
    first = false;
    out += "fn " + fname + "/" + std::to_string(fn.locals_count) + ":\n";

    std::vector<bool> is_target(fn.body.size() + 1, false);
    auto mark = [&](int t) { if (t >= 0 && t <= int(fn.body.size())) is_target[t] = true; };
    for (auto& ins : fn.body) {
      if (ins.op == OpCode::IfZero || ins.op == OpCode::IfCmp || ins.op == OpCode::Goto ||
          ins.op == OpCode::TableSwitch || ins.op == OpCode::LookupSwitch)
        mark(ins.target);
      for (int t : ins.targets) mark(t);
      for (auto& [k, t] : ins.pairs) mark(t);
    }
    auto label = [](int idx) { return "L" + std::to_string(idx); };

    for (size_t i = 0; i < fn.body.size(); ++i) {
      if (is_target[i]) out += label(int(i)) + ":\n";
      const Instruction& ins = fn.body[i];
      out += "  ";
      switch (ins.op) {
        case OpCode::Const: out += "const " + std::to_string(ins.value); break;
        case OpCode::Load: out += "load " + std::to_string(ins.slot); break;
        case OpCode::Store: out += "store " + std::to_string(ins.slot); break;
        case OpCode::Free:
          out += "free " + std::to_string(ins.slot);
          if (!ins.name.empty()) out += " " + ins.name;
          break;
        case OpCode::Add: out += "add"; break;
        case OpCode::Sub: out += "sub"; break;
        case OpCode::Mul: out += "mul"; break;
        case OpCode::Div: out += "div"; break;
        case OpCode::Rem: out += "rem"; break;
        case OpCode::Neg: out += "neg"; break;
        case OpCode::IfZero:
          out += "ifzero " + std::string(cond_mnemonic(ins.cond)) + " " + label(ins.target);
          break;
        case OpCode::IfCmp:
          out += "ifcmp " + std::string(cond_mnemonic(ins.cond)) + " " + label(ins.target);
          break;
        case OpCode::Goto: out += "goto " + label(ins.target); break;
        case OpCode::TableSwitch: {
          out += "tableswitch " + std::to_string(ins.lo) + " " + std::to_string(ins.hi);
          for (int t : ins.targets) out += " " + label(t);
          out += " default " + label(ins.target);
          break;
        }
        case OpCode::LookupSwitch: {
          out += "lookupswitch";
          for (auto& [k, t] : ins.pairs) out += " " + std::to_string(k) + ":" + label(t);
          out += " default " + label(ins.target);
          break;
        }
        case OpCode::Call: out += "call " + ins.name; break;
        case OpCode::Return: out += "return"; break;
        case OpCode::Throw: out += "throw " + detail::escape(ins.name); break;
        case OpCode::Fail: out += "fail"; break;
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace masvm
