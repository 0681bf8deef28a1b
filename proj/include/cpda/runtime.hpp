#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpda/minilang.hpp"
#include "cpda/rng.hpp"
#include "cpda/suite.hpp"
#include "cpda/value.hpp"

namespace cpda {

// ---------------------------------------------------------------------------
// Mutation specs

/// A single-node intervention. Booleans are hit-wise negations of the
/// would-be value; every other domain overwrites with the same constant at
/// each hit.
struct MutationSpec {
  int target = 0;
  bool negate = false;
  Value value{};

  std::string str() const {
    return negate ? "negate" : token_str(value);
  }
};

enum class RunStatus { Ok, Timeout, RuntimeError };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::RuntimeError: return "runtime-error";
  }
  return "?";
}

/// Trajectories for every node plus the printed/returned output sequence.
/// On timeout or runtime error the trajectories cover execution up to the
/// fault point.
struct RunResult {
  std::vector<std::vector<Value>> trajectories;  // 1-based by node index
  std::vector<Value> output;
  RunStatus status = RunStatus::Ok;
  std::string error;
  std::vector<int> trace;  // node hit order; recorded only when requested
  std::int64_t steps = 0;

  bool covered(int node) const { return !trajectories[static_cast<std::size_t>(node)].empty(); }
};

// ---------------------------------------------------------------------------
// Interpreter

class Interpreter {
 public:
  Interpreter(const Program& prog, int node_count, std::int64_t step_budget = 1000000,
              int depth_cap = 128)
      : prog_(prog), node_count_(node_count), budget_(step_budget), depth_cap_(depth_cap) {}

  RunResult run(const TestInput& test, const MutationSpec* mutation = nullptr,
                bool record_trace = false) const {
    Exec ex(*this, test, mutation, record_trace);
    return ex.run();
  }

 private:
  struct TimeoutSignal {};
  struct ErrorSignal { std::string msg; };

  class Exec {
   public:
    Exec(const Interpreter& host, const TestInput& test, const MutationSpec* m, bool trace)
        : host_(host), test_(test), mutation_(m), record_trace_(trace) {
      result_.trajectories.resize(static_cast<std::size_t>(host.node_count_) + 1);
    }

    RunResult run() {
      try {
        const FunctionDef& entry = host_.prog_.entry_fn();
        if (!entry.params.empty()) throw ErrorSignal{"entry function must take no parameters"};
        Frame frame;
        if (exec_block(entry.body, frame) && ret_value_ && entry.returns_value)
          result_.output.push_back(*ret_value_);
      } catch (TimeoutSignal&) {
        result_.status = RunStatus::Timeout;
        result_.error = "step budget exceeded";
      } catch (ErrorSignal& e) {
        result_.status = RunStatus::RuntimeError;
        result_.error = e.msg;
      }
      result_.steps = steps_;
      return std::move(result_);
    }

   private:
    using Frame = std::map<std::string, Value>;

    void step() {
      if (++steps_ > host_.budget_) throw TimeoutSignal{};
    }

    Value hit(int node, Value would_be) {
      if (record_trace_) result_.trace.push_back(node);
      Value v = std::move(would_be);
      if (mutation_ && mutation_->target == node) {
        if (mutation_->negate) {
          if (!std::holds_alternative<bool>(v))
            throw ErrorSignal{"negation mutation on non-boolean value"};
          v = !std::get<bool>(v);
        } else {
          v = mutation_->value;
        }
      }
      result_.trajectories[static_cast<std::size_t>(node)].push_back(v);
      return v;
    }

    Value* lookup(const std::string& name, Frame& frame) {
      if (host_.prog_.globals.count(name)) {
        auto it = globals_.find(name);
        return it == globals_.end() ? nullptr : &it->second;
      }
      auto it = frame.find(name);
      return it == frame.end() ? nullptr : &it->second;
    }

    void store(const std::string& name, Value v, Frame& frame) {
      if (host_.prog_.globals.count(name)) globals_[name] = std::move(v);
      else frame[name] = std::move(v);
    }

    // true when a return statement unwound the block; the carried value (if
    // any) is in ret_value_
    bool exec_block(const std::vector<Stmt>& body, Frame& frame) {
      for (const auto& s : body)
        if (exec_stmt(s, frame)) return true;
      return false;
    }

    bool eval_condition(const Stmt& s, Frame& frame) {
      step();
      if (s.node_index == 0) {
        Value v = eval(*s.expr, frame);
        if (!std::holds_alternative<bool>(v))
          throw ErrorSignal{"condition is not boolean"};
        return std::get<bool>(v);
      }
      Value v = hit(s.node_index, require_bool(eval(*s.expr, frame), "condition"));
      return std::get<bool>(v);
    }

    bool exec_stmt(const Stmt& s, Frame& frame) {
      switch (s.kind) {
        case Stmt::Kind::Assign: {
          step();
          Value v = hit(s.node_index, eval(*s.expr, frame));
          store(s.target, std::move(v), frame);
          return false;
        }
        case Stmt::Kind::If: {
          if (eval_condition(s, frame)) return exec_block(s.body, frame);
          return exec_block(s.else_body, frame);
        }
        case Stmt::Kind::While: {
          while (eval_condition(s, frame)) {
            if (exec_block(s.body, frame)) return true;
          }
          return false;
        }
        case Stmt::Kind::Return: {
          step();
          if (s.has_expr) ret_value_ = hit(s.node_index, eval(*s.expr, frame));
          else ret_value_.reset();
          return true;
        }
        case Stmt::Kind::Print: {
          step();
          result_.output.push_back(eval(*s.expr, frame));
          return false;
        }
      }
      return false;
    }

    static Value require_bool(Value v, const char* what) {
      if (!std::holds_alternative<bool>(v))
        throw ErrorSignal{std::string(what) + " is not boolean"};
      return v;
    }

    Value eval(const Expr& e, Frame& frame) {
      switch (e.kind) {
        case Expr::Kind::Literal: return e.literal;
        case Expr::Kind::Var: {
          Value* v = lookup(e.name, frame);
          if (!v) throw ErrorSignal{"undefined variable '" + e.name + "'"};
          return *v;
        }
        case Expr::Kind::Read: {
          if (input_pos_ >= test_.tokens.size()) throw ErrorSignal{"input exhausted"};
          return test_.tokens[input_pos_++];
        }
        case Expr::Kind::GetChar: {
          if (input_pos_ < test_.tokens.size()) {
            Value v = hit(e.node_index, test_.tokens[input_pos_++]);
            store(e.name, std::move(v), frame);
            return true;
          }
          // a failed read still executes the site: the target keeps its
          // value (or takes the mutated one), and the hit is logged
          Value* cur = lookup(e.name, frame);
          bool overwritten = mutation_ && mutation_->target == e.node_index && !mutation_->negate;
          if (cur) {
            Value v = hit(e.node_index, *cur);
            store(e.name, std::move(v), frame);
          } else if (overwritten) {
            Value v = hit(e.node_index, mutation_->value);
            store(e.name, std::move(v), frame);
          }
          return false;
        }
        case Expr::Kind::Unary: {
          if (e.op == "!") {
            Value v = eval(*e.args[0], frame);
            if (!std::holds_alternative<bool>(v)) throw ErrorSignal{"'!' needs a boolean"};
            return !std::get<bool>(v);
          }
          Value v = eval(*e.args[0], frame);
          if (std::holds_alternative<std::int64_t>(v)) return -std::get<std::int64_t>(v);
          if (std::holds_alternative<double>(v)) return -std::get<double>(v);
          throw ErrorSignal{"'-' needs a number"};
        }
        case Expr::Kind::Binary: return eval_binary(e, frame);
        case Expr::Kind::Call: return eval_call(e, frame);
      }
      throw ErrorSignal{"bad expression"};
    }

    Value eval_binary(const Expr& e, Frame& frame) {
      const std::string& op = e.op;
      if (op == "&&" || op == "||") {
        Value l = eval(*e.args[0], frame);
        if (!std::holds_alternative<bool>(l)) throw ErrorSignal{"'" + op + "' needs booleans"};
        bool lv = std::get<bool>(l);
        if (op == "&&" && !lv) return false;
        if (op == "||" && lv) return true;
        Value r = eval(*e.args[1], frame);
        if (!std::holds_alternative<bool>(r)) throw ErrorSignal{"'" + op + "' needs booleans"};
        return std::get<bool>(r);
      }
      Value l = eval(*e.args[0], frame);
      Value r = eval(*e.args[1], frame);
      if (op == "==" || op == "!=") {
        bool eq;
        if (is_numeric(l) && is_numeric(r) && l.index() != r.index())
          eq = to_f(l) == to_f(r);
        else if (l.index() != r.index())
          throw ErrorSignal{"'==' on incompatible types"};
        else
          eq = value_equal(l, r);
        return op == "==" ? eq : !eq;
      }
      if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        int c;
        if (is_numeric(l) && is_numeric(r)) {
          double a = to_f(l), b = to_f(r);
          c = a < b ? -1 : (a > b ? 1 : 0);
        } else if (std::holds_alternative<std::string>(l) && std::holds_alternative<std::string>(r)) {
          c = std::get<std::string>(l).compare(std::get<std::string>(r));
          c = c < 0 ? -1 : (c > 0 ? 1 : 0);
        } else {
          throw ErrorSignal{"'" + op + "' on incompatible types"};
        }
        if (op == "<") return c < 0;
        if (op == "<=") return c <= 0;
        if (op == ">") return c > 0;
        return c >= 0;
      }
      // arithmetic
      if (op == "+" && std::holds_alternative<std::string>(l) &&
          std::holds_alternative<std::string>(r))
        return std::get<std::string>(l) + std::get<std::string>(r);
      if (!is_numeric(l) || !is_numeric(r))
        throw ErrorSignal{"'" + op + "' needs numbers"};
      bool both_int = std::holds_alternative<std::int64_t>(l) &&
                      std::holds_alternative<std::int64_t>(r);
      if (op == "%") {
        if (!both_int) throw ErrorSignal{"'%' needs integers"};
        std::int64_t b = std::get<std::int64_t>(r);
        if (b == 0) throw ErrorSignal{"modulo by zero"};
        return std::get<std::int64_t>(l) % b;
      }
      if (both_int) {
        std::int64_t a = std::get<std::int64_t>(l), b = std::get<std::int64_t>(r);
        if (op == "+") return a + b;
        if (op == "-") return a - b;
        if (op == "*") return a * b;
        if (b == 0) throw ErrorSignal{"division by zero"};
        return a / b;
      }
      double a = to_f(l), b = to_f(r);
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (b == 0.0) throw ErrorSignal{"division by zero"};
      return a / b;
    }

    Value eval_call(const Expr& e, Frame& frame) {
      // string builtins
      if (e.name == "len" || e.name == "strip" || e.name == "rstrip" || e.name == "endswith" ||
          e.name == "startswith") {
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(*a, frame));
        return eval_builtin(e, args);
      }
      const FunctionDef* f = host_.prog_.find(e.name);
      if (!f) throw ErrorSignal{"unknown function '" + e.name + "'"};
      if (f->params.size() != e.args.size())
        throw ErrorSignal{"'" + e.name + "' expects " + std::to_string(f->params.size()) +
                          " argument(s)"};
      if (++depth_ > host_.depth_cap_) throw ErrorSignal{"call depth limit exceeded"};
      Frame callee;
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        Value arg = eval(*e.args[i], frame);
        step();
        Value bound = hit(f->param_node_index[i], std::move(arg));
        callee[f->params[i]] = std::move(bound);
      }
      bool returned = exec_block(f->body, callee);
      --depth_;
      if (!returned || !ret_value_)
        throw ErrorSignal{"function '" + e.name + "' did not return a value"};
      Value out = std::move(*ret_value_);
      ret_value_.reset();
      return out;
    }

    Value eval_builtin(const Expr& e, std::vector<Value>& args) {
      auto str_arg = [&](std::size_t i) -> const std::string& {
        if (i >= args.size() || !std::holds_alternative<std::string>(args[i]))
          throw ErrorSignal{"'" + e.name + "' needs string argument(s)"};
        return std::get<std::string>(args[i]);
      };
      auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
      if (e.name == "len") return static_cast<std::int64_t>(str_arg(0).size());
      if (e.name == "endswith") {
        const std::string& s = str_arg(0);
        const std::string& suf = str_arg(1);
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
      }
      if (e.name == "startswith") {
        const std::string& s = str_arg(0);
        const std::string& pre = str_arg(1);
        return s.size() >= pre.size() && s.compare(0, pre.size(), pre) == 0;
      }
      const std::string& s = str_arg(0);
      std::size_t b = 0, len = s.size();
      while (len > 0 && is_space(s[len - 1])) --len;
      if (e.name == "strip")
        while (b < len && is_space(s[b])) ++b;
      return s.substr(b, len - b);
    }

    static bool is_numeric(const Value& v) {
      return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
    }
    static double to_f(const Value& v) {
      return std::holds_alternative<double>(v) ? std::get<double>(v)
                                               : static_cast<double>(std::get<std::int64_t>(v));
    }

    const Interpreter& host_;
    const TestInput& test_;
    const MutationSpec* mutation_;
    bool record_trace_;
    RunResult result_;
    Frame globals_;
    std::optional<Value> ret_value_;
    std::size_t input_pos_ = 0;
    std::int64_t steps_ = 0;
    int depth_ = 0;
  };

  const Program& prog_;
  int node_count_;
  std::int64_t budget_;
  int depth_cap_;
};

inline RunResult run_oracle(const Program& p, int node_count, const TestInput& t,
                            bool record_trace = false) {
  return Interpreter(p, node_count).run(t, nullptr, record_trace);
}

inline RunResult run_mutant(const Program& p, int node_count, const TestInput& t,
                            const MutationSpec& m) {
  return Interpreter(p, node_count).run(t, &m);
}

// ---------------------------------------------------------------------------
// Mutation value sampling

/// Resolves a node's value domain: explicit `# domain` declaration wins,
/// predicates are boolean, everything else is typed by the first observed
/// oracle value.
inline std::optional<DomainSpec> resolve_domain(const Program& p, const Node& node,
                                                const std::vector<Value>& pooled_oracle) {
  auto it = p.domains.find(node.variable);
  if (it != p.domains.end()) return it->second;
  if (node.kind == NodeKind::Predicate) return DomainSpec{DomainSpec::Kind::Bool};
  if (pooled_oracle.empty()) return std::nullopt;
  switch (kind_of(pooled_oracle.front())) {
    case ValueKind::Bool: return DomainSpec{DomainSpec::Kind::Bool};
    case ValueKind::Int: return DomainSpec{DomainSpec::Kind::Int};
    case ValueKind::Float: return DomainSpec{DomainSpec::Kind::Float};
    case ValueKind::String: return DomainSpec{DomainSpec::Kind::String};
  }
  return std::nullopt;
}

/// Draws up to `n` mutation values for one node. Booleans yield the single
/// hit-wise negation spec. Bounded integers sample uniformly and keep the
/// distinct values, so fewer than n specs may come back. Numeric domains draw
/// from a Gaussian fitted to all observed values (stddev 0 falls back to
/// 1.0); strings draw a Gaussian length (clamped to [1, 64]) over uniform
/// lowercase letters. Draws that happen to equal observed values are kept.
inline std::vector<MutationSpec> sample_mutations(const Node& node, const DomainSpec& domain,
                                                  const std::vector<Value>& pooled_oracle,
                                                  int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_mutations: n must be >= 1");
  std::vector<MutationSpec> specs;
  if (domain.kind == DomainSpec::Kind::Bool) {
    specs.push_back(MutationSpec{node.index, true, Value{}});
    return specs;
  }
  Rng rng(seed, node.index, "mutation-values");
  if (domain.kind == DomainSpec::Kind::BoundedInt) {
    std::set<std::int64_t> seen;
    for (int i = 0; i < n; ++i) {
      std::int64_t v = rng.next_int(domain.lo, domain.hi);
      if (seen.insert(v).second)
        specs.push_back(MutationSpec{node.index, false, v});
    }
    return specs;
  }
  if (domain.kind == DomainSpec::Kind::String) {
    double mean = 0, sq = 0;
    std::int64_t cnt = 0;
    for (const auto& v : pooled_oracle) {
      if (!std::holds_alternative<std::string>(v)) continue;
      double len = static_cast<double>(std::get<std::string>(v).size());
      mean += len;
      sq += len * len;
      ++cnt;
    }
    if (cnt == 0) throw std::invalid_argument("sample_mutations: no observed string values");
    mean /= static_cast<double>(cnt);
    double var = sq / static_cast<double>(cnt) - mean * mean;
    double sd = var > 0 ? std::sqrt(var) : 0.0;
    if (sd == 0.0) sd = 1.0;
    for (int i = 0; i < n; ++i) {
      std::int64_t len = std::llround(rng.next_gaussian(mean, sd));
      len = std::clamp<std::int64_t>(len, 1, 64);
      std::string s;
      for (std::int64_t k = 0; k < len; ++k)
        s += static_cast<char>('a' + rng.next_int(0, 25));
      specs.push_back(MutationSpec{node.index, false, s});
    }
    return specs;
  }
  // int / float
  double mean = 0, sq = 0;
  std::int64_t cnt = 0;
  for (const auto& v : pooled_oracle) {
    double d;
    if (std::holds_alternative<std::int64_t>(v)) d = static_cast<double>(std::get<std::int64_t>(v));
    else if (std::holds_alternative<double>(v)) d = std::get<double>(v);
    else continue;
    mean += d;
    sq += d * d;
    ++cnt;
  }
  if (cnt == 0) throw std::invalid_argument("sample_mutations: no observed numeric values");
  mean /= static_cast<double>(cnt);
  double var = sq / static_cast<double>(cnt) - mean * mean;
  double sd = var > 0 ? std::sqrt(var) : 0.0;
  if (sd == 0.0) sd = 1.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.next_gaussian(mean, sd);
    if (domain.kind == DomainSpec::Kind::Int)
      specs.push_back(MutationSpec{node.index, false, static_cast<std::int64_t>(std::llround(g))});
    else
      specs.push_back(MutationSpec{node.index, false, g});
  }
  return specs;
}

}  // namespace cpda
