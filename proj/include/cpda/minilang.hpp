#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpda/value.hpp"

namespace cpda {

// ---------------------------------------------------------------------------
// AST

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct ParseError : std::runtime_error {
  ParseError(SourcePos p, const std::string& msg)
      : std::runtime_error("line " + std::to_string(p.line) + ", col " +
                           std::to_string(p.col) + ": " + msg),
        pos(p) {}
  SourcePos pos;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class Kind { Literal, Var, Unary, Binary, Call, GetChar, Read };
  Kind kind;
  SourcePos pos;
  Value literal{};
  std::string name;  // variable, callee, or getchar target
  std::string op;
  std::vector<ExprPtr> args;
  int node_index = 0;  // getchar target site, assigned by index_nodes
};

struct Stmt {
  enum class Kind { Assign, If, While, Return, Print };
  Kind kind;
  SourcePos pos;
  std::string target;  // assign lhs
  ExprPtr expr;        // rhs / condition / return value / print argument
  std::vector<Stmt> body;       // if-then or while body
  std::vector<Stmt> else_body;  // if only
  bool has_expr = true;         // false for bare `return`
  int node_index = 0;           // assign/predicate/return site
};

struct FunctionDef {
  std::string name;
  std::vector<std::string> params;
  std::vector<SourcePos> param_pos;
  std::vector<Stmt> body;
  SourcePos pos;
  std::vector<int> param_node_index;  // assigned by index_nodes
  bool returns_value = false;
};

struct DomainSpec {
  enum class Kind { Bool, Int, Float, String, BoundedInt };
  Kind kind = Kind::Int;
  std::int64_t lo = 0, hi = 0;  // BoundedInt only

  std::string str() const {
    switch (kind) {
      case Kind::Bool: return "bool";
      case Kind::Int: return "int";
      case Kind::Float: return "float";
      case Kind::String: return "string";
      case Kind::BoundedInt:
        return "bounded-int(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
    }
    return "?";
  }
};

struct Program {
  std::vector<FunctionDef> functions;
  std::string entry = "main";
  std::map<std::string, DomainSpec> domains;  // keyed by variable name
  std::set<std::string> globals;

  const FunctionDef* find(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
  const FunctionDef& entry_fn() const { return *find(entry); }
};

// ---------------------------------------------------------------------------
// Dependence nodes

enum class NodeKind { AssignLhs, Parameter, Predicate, Return };

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::AssignLhs: return "assign-lhs";
    case NodeKind::Parameter: return "parameter";
    case NodeKind::Predicate: return "predicate";
    case NodeKind::Return: return "return";
  }
  return "?";
}

struct Node {
  int index = 0;  // dense, 1-based
  NodeKind kind = NodeKind::AssignLhs;
  std::string variable;
  std::string function;
  SourcePos pos;
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

struct Token {
  enum class Type { Ident, Int, Float, Str, Punct, Directive, End };
  Type type;
  std::string text;     // ident/punct text, string value, or directive payload
  std::int64_t ival = 0;
  double fval = 0;
  SourcePos pos;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto pos = [&] { return SourcePos{line, col}; };
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(); continue; }
    if (c == '#') {
      SourcePos p = pos();
      std::size_t eol = src.find('\n', i);
      std::string rest = src.substr(i + 1, (eol == std::string::npos ? src.size() : eol) - i - 1);
      advance(rest.size() + 1);
      std::size_t b = rest.find_first_not_of(" \t");
      if (b != std::string::npos &&
          (rest.compare(b, 6, "domain") == 0 || rest.compare(b, 6, "global") == 0)) {
        out.push_back({Token::Type::Directive, rest.substr(b), 0, 0, p});
      }
      continue;  // plain comment
    }
    if (ident_start(c)) {
      SourcePos p = pos();
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      std::string word = src.substr(i, j - i);
      advance(j - i);
      out.push_back({Token::Type::Ident, word, 0, 0, p});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      SourcePos p = pos();
      std::size_t j = i;
      bool is_float = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
          std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        is_float = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      std::string num = src.substr(i, j - i);
      advance(j - i);
      Token t{is_float ? Token::Type::Float : Token::Type::Int, num, 0, 0, p};
      if (is_float) t.fval = std::stod(num); else t.ival = std::stoll(num);
      out.push_back(t);
      continue;
    }
    if (c == '"') {
      SourcePos p = pos();
      advance();
      std::string s;
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        if (d == '"') { advance(); closed = true; break; }
        if (d == '\\' && i + 1 < src.size()) {
          char e = src[i + 1];
          advance(2);
          switch (e) {
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            default: s += e;
          }
          continue;
        }
        s += d;
        advance();
      }
      if (!closed) throw ParseError(p, "unterminated string literal");
      out.push_back({Token::Type::Str, s, 0, 0, p});
      continue;
    }
    SourcePos p = pos();
    static const char* two_char[] = {"==", "!=", "<=", ">=", "&&", "||"};
    bool matched = false;
    for (const char* op : two_char) {
      if (src.compare(i, 2, op) == 0) {
        out.push_back({Token::Type::Punct, op, 0, 0, p});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("=<>+-*/%!(){},:").find(c) != std::string::npos) {
      out.push_back({Token::Type::Punct, std::string(1, c), 0, 0, p});
      advance();
      continue;
    }
    throw ParseError(p, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::Type::End, "", 0, 0, pos()});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  Program parse() {
    Program p;
    while (!at_end()) {
      if (peek().type == Token::Type::Directive) {
        parse_directive(p, next());
        continue;
      }
      expect_ident("def");
      p.functions.push_back(parse_function());
    }
    validate(p);
    return p;
  }

 private:
  const Token& peek(int ahead = 0) const {
    std::size_t k = idx_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  const Token& next() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }
  bool at_end() const { return peek().type == Token::Type::End; }

  bool is_punct(const std::string& s, int ahead = 0) const {
    return peek(ahead).type == Token::Type::Punct && peek(ahead).text == s;
  }
  bool is_ident(const std::string& s, int ahead = 0) const {
    return peek(ahead).type == Token::Type::Ident && peek(ahead).text == s;
  }
  void expect_punct(const std::string& s) {
    if (!is_punct(s)) throw ParseError(peek().pos, "expected '" + s + "'");
    next();
  }
  void expect_ident(const std::string& s) {
    if (!is_ident(s)) throw ParseError(peek().pos, "expected '" + s + "'");
    next();
  }
  std::string expect_name(const char* what) {
    if (peek().type != Token::Type::Ident || is_keyword(peek().text))
      throw ParseError(peek().pos, std::string("expected ") + what);
    return next().text;
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {"def", "if", "else", "while", "return",
                                             "print", "read", "getchar", "true", "false"};
    return kw.count(s) > 0;
  }

  void parse_directive(Program& p, const Token& tok) {
    std::istringstream in(tok.text);
    std::string head;
    in >> head;
    if (head == "global") {
      std::string name;
      while (in >> name) p.globals.insert(name);
      return;
    }
    // domain <var> : <spec>
    std::string var, colon, spec;
    in >> var >> colon;
    std::getline(in, spec);
    std::size_t b = spec.find_first_not_of(" \t");
    spec = b == std::string::npos ? "" : spec.substr(b);
    while (!spec.empty() && (spec.back() == ' ' || spec.back() == '\t')) spec.pop_back();
    if (var.empty() || colon != ":")
      throw ParseError(tok.pos, "malformed domain directive");
    DomainSpec d;
    if (spec == "bool") d.kind = DomainSpec::Kind::Bool;
    else if (spec == "int") d.kind = DomainSpec::Kind::Int;
    else if (spec == "float") d.kind = DomainSpec::Kind::Float;
    else if (spec == "string") d.kind = DomainSpec::Kind::String;
    else if (spec.rfind("bounded-int(", 0) == 0 && spec.back() == ')') {
      d.kind = DomainSpec::Kind::BoundedInt;
      std::string body = spec.substr(12, spec.size() - 13);
      auto comma = body.find(',');
      if (comma == std::string::npos) throw ParseError(tok.pos, "malformed bounded-int domain");
      d.lo = std::stoll(body.substr(0, comma));
      d.hi = std::stoll(body.substr(comma + 1));
      if (d.lo > d.hi) throw ParseError(tok.pos, "bounded-int: lo > hi");
    } else {
      throw ParseError(tok.pos, "unknown domain '" + spec + "'");
    }
    p.domains[var] = d;
  }

  FunctionDef parse_function() {
    FunctionDef f;
    f.pos = peek().pos;
    f.name = expect_name("function name");
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        f.param_pos.push_back(peek().pos);
        f.params.push_back(expect_name("parameter name"));
        if (is_punct(",")) { next(); continue; }
        break;
      }
    }
    expect_punct(")");
    f.body = parse_block();
    return f;
  }

  std::vector<Stmt> parse_block() {
    expect_punct("{");
    std::vector<Stmt> body;
    while (!is_punct("}")) {
      if (at_end()) throw ParseError(peek().pos, "unterminated block");
      body.push_back(parse_stmt());
    }
    next();
    return body;
  }

  std::vector<Stmt> parse_body() {
    if (is_punct("{")) return parse_block();
    std::vector<Stmt> one;
    one.push_back(parse_stmt());
    return one;
  }

  Stmt parse_stmt() {
    SourcePos p = peek().pos;
    if (is_ident("if")) {
      next();
      Stmt s;
      s.kind = Stmt::Kind::If;
      s.pos = p;
      expect_punct("(");
      s.expr = parse_expr();
      expect_punct(")");
      s.body = parse_body();
      if (is_ident("else")) {
        next();
        s.else_body = parse_body();
      }
      return s;
    }
    if (is_ident("while")) {
      next();
      Stmt s;
      s.kind = Stmt::Kind::While;
      s.pos = p;
      expect_punct("(");
      s.expr = parse_expr();
      expect_punct(")");
      s.body = parse_body();
      return s;
    }
    if (is_ident("return")) {
      next();
      Stmt s;
      s.kind = Stmt::Kind::Return;
      s.pos = p;
      // a value expression must start on the same source line
      if (peek().pos.line == p.line && !is_punct("}") && peek().type != Token::Type::End) {
        s.expr = parse_expr();
      } else {
        s.has_expr = false;
      }
      return s;
    }
    if (is_ident("print")) {
      next();
      Stmt s;
      s.kind = Stmt::Kind::Print;
      s.pos = p;
      expect_punct("(");
      s.expr = parse_expr();
      expect_punct(")");
      return s;
    }
    // assignment
    if (peek().type == Token::Type::Ident && !is_keyword(peek().text) && is_punct("=", 1)) {
      Stmt s;
      s.kind = Stmt::Kind::Assign;
      s.pos = p;
      s.target = next().text;
      next();  // '='
      s.expr = parse_expr();
      return s;
    }
    throw ParseError(p, "expected statement");
  }

  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr mk(Expr::Kind k, SourcePos p) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->pos = p;
    return e;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (is_punct("||")) {
      SourcePos p = next().pos;
      auto e = mk(Expr::Kind::Binary, p);
      e->op = "||";
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_and());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_cmp();
    while (is_punct("&&")) {
      SourcePos p = next().pos;
      auto e = mk(Expr::Kind::Binary, p);
      e->op = "&&";
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_cmp());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_cmp() {
    auto lhs = parse_add();
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (is_punct(op)) {
        SourcePos p = next().pos;
        auto e = mk(Expr::Kind::Binary, p);
        e->op = op;
        e->args.push_back(std::move(lhs));
        e->args.push_back(parse_add());
        return e;
      }
    }
    return lhs;
  }

  ExprPtr parse_add() {
    auto lhs = parse_mul();
    while (is_punct("+") || is_punct("-")) {
      SourcePos p = peek().pos;
      std::string op = next().text;
      auto e = mk(Expr::Kind::Binary, p);
      e->op = op;
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_mul());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    auto lhs = parse_unary();
    while (is_punct("*") || is_punct("/") || is_punct("%")) {
      SourcePos p = peek().pos;
      std::string op = next().text;
      auto e = mk(Expr::Kind::Binary, p);
      e->op = op;
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_unary());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (is_punct("!") || is_punct("-")) {
      SourcePos p = peek().pos;
      std::string op = next().text;
      auto e = mk(Expr::Kind::Unary, p);
      e->op = op;
      e->args.push_back(parse_unary());
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.type == Token::Type::Int) {
      next();
      auto e = mk(Expr::Kind::Literal, t.pos);
      e->literal = t.ival;
      return e;
    }
    if (t.type == Token::Type::Float) {
      next();
      auto e = mk(Expr::Kind::Literal, t.pos);
      e->literal = t.fval;
      return e;
    }
    if (t.type == Token::Type::Str) {
      next();
      auto e = mk(Expr::Kind::Literal, t.pos);
      e->literal = t.text;
      return e;
    }
    if (t.type == Token::Type::Ident) {
      if (t.text == "true" || t.text == "false") {
        next();
        auto e = mk(Expr::Kind::Literal, t.pos);
        e->literal = (t.text == "true");
        return e;
      }
      if (t.text == "read") {
        next();
        expect_punct("(");
        expect_punct(")");
        return mk(Expr::Kind::Read, t.pos);
      }
      if (t.text == "getchar") {
        next();
        expect_punct("(");
        SourcePos vp = peek().pos;
        std::string var = expect_name("variable name");
        expect_punct(")");
        auto e = mk(Expr::Kind::GetChar, vp);
        e->name = var;
        return e;
      }
      if (is_keyword(t.text)) throw ParseError(t.pos, "unexpected keyword '" + t.text + "'");
      next();
      if (is_punct("(")) {
        next();
        auto e = mk(Expr::Kind::Call, t.pos);
        e->name = t.text;
        if (!is_punct(")")) {
          while (true) {
            e->args.push_back(parse_expr());
            if (is_punct(",")) { next(); continue; }
            break;
          }
        }
        expect_punct(")");
        return e;
      }
      auto e = mk(Expr::Kind::Var, t.pos);
      e->name = t.text;
      return e;
    }
    if (is_punct("(")) {
      next();
      auto e = parse_expr();
      expect_punct(")");
      return e;
    }
    throw ParseError(t.pos, "expected expression");
  }

  void validate(Program& p) {
    std::set<std::string> names;
    for (auto& f : p.functions) {
      if (!names.insert(f.name).second)
        throw ParseError(f.pos, "duplicate function name '" + f.name + "'");
      std::set<std::string> ps(f.params.begin(), f.params.end());
      if (ps.size() != f.params.size())
        throw ParseError(f.pos, "duplicate parameter in '" + f.name + "'");
      f.returns_value = any_value_return(f.body);
      if (f.returns_value && !always_returns(f.body))
        throw ParseError(f.pos, "function '" + f.name +
                                    "' returns a value on some paths but not all");
    }
    if (!p.find(p.entry))
      throw ParseError({1, 1}, "no entry function '" + p.entry + "'");
  }

  static bool any_value_return(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::Return && s.has_expr) return true;
      if (any_value_return(s.body) || any_value_return(s.else_body)) return true;
    }
    return false;
  }

  static bool always_returns(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::Return) return true;
      if (s.kind == Stmt::Kind::If && !s.else_body.empty() &&
          always_returns(s.body) && always_returns(s.else_body))
        return true;
    }
    return false;
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

}  // namespace detail

inline Program parse(const std::string& source) { return detail::Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Node indexing

namespace detail {

class NodeIndexer {
 public:
  std::vector<Node> run(Program& p) {
    for (auto& f : p.functions) {
      fn_ = f.name;
      f.param_node_index.clear();
      for (std::size_t i = 0; i < f.params.size(); ++i) {
        f.param_node_index.push_back(
            add(NodeKind::Parameter, f.params[i], f.param_pos[i]));
      }
      walk(f.body);
    }
    return std::move(nodes_);
  }

 private:
  int add(NodeKind k, const std::string& var, SourcePos pos) {
    Node n;
    n.index = static_cast<int>(nodes_.size()) + 1;
    n.kind = k;
    n.variable = var;
    n.function = fn_;
    n.pos = pos;
    nodes_.push_back(n);
    return n.index;
  }

  // getchar targets are assignment sites buried in expressions
  void walk_expr(Expr& e) {
    if (e.kind == Expr::Kind::GetChar) {
      e.node_index = add(NodeKind::AssignLhs, e.name, e.pos);
      return;
    }
    for (auto& a : e.args) walk_expr(*a);
  }

  void walk(std::vector<Stmt>& body) {
    for (auto& s : body) {
      switch (s.kind) {
        case Stmt::Kind::Assign:
          s.node_index = add(NodeKind::AssignLhs, s.target, s.pos);
          walk_expr(*s.expr);
          break;
        case Stmt::Kind::If:
        case Stmt::Kind::While:
          // a bare variable reference is already a tracked value, not a new site
          if (s.expr->kind != Expr::Kind::Var) {
            s.node_index = add(NodeKind::Predicate, "_pred" + std::to_string(++pred_), s.expr->pos);
          } else {
            s.node_index = 0;
          }
          walk_expr(*s.expr);
          walk(s.body);
          walk(s.else_body);
          break;
        case Stmt::Kind::Return:
          if (s.has_expr) {
            s.node_index = add(NodeKind::Return, "_ret", s.pos);
            walk_expr(*s.expr);
          }
          break;
        case Stmt::Kind::Print:
          walk_expr(*s.expr);
          break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::string fn_;
  int pred_ = 0;
};

}  // namespace detail

/// Indexes every assignment LHS, parameter, predicate and return site in
/// deterministic source order (dense 1-based indices) and annotates the AST
/// with the site indices the interpreter intercepts.
inline std::vector<Node> index_nodes(Program& p) { return detail::NodeIndexer().run(p); }

// ---------------------------------------------------------------------------
// Pretty printer (canonical form; re-parsing yields an identical node list)

namespace detail {

inline void print_expr(const Expr& e, std::ostream& os) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      if (kind_of(e.literal) == ValueKind::String) {
        os << '"';
        for (char c : std::get<std::string>(e.literal)) {
          switch (c) {
            case '\n': os << "\\n"; break;
            case '\t': os << "\\t"; break;
            case '"': os << "\\\""; break;
            case '\\': os << "\\\\"; break;
            default: os << c;
          }
        }
        os << '"';
      } else {
        os << value_str(e.literal);
      }
      break;
    case Expr::Kind::Var: os << e.name; break;
    case Expr::Kind::Read: os << "read()"; break;
    case Expr::Kind::GetChar: os << "getchar(" << e.name << ")"; break;
    case Expr::Kind::Unary:
      os << e.op << "(";
      print_expr(*e.args[0], os);
      os << ")";
      break;
    case Expr::Kind::Binary:
      os << "(";
      print_expr(*e.args[0], os);
      os << " " << e.op << " ";
      print_expr(*e.args[1], os);
      os << ")";
      break;
    case Expr::Kind::Call:
      os << e.name << "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print_expr(*e.args[i], os);
      }
      os << ")";
      break;
  }
}

inline void print_stmts(const std::vector<Stmt>& body, std::ostream& os, int depth) {
  std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& s : body) {
    switch (s.kind) {
      case Stmt::Kind::Assign:
        os << ind << s.target << " = ";
        print_expr(*s.expr, os);
        os << "\n";
        break;
      case Stmt::Kind::If:
        os << ind << "if (";
        print_expr(*s.expr, os);
        os << ") {\n";
        print_stmts(s.body, os, depth + 1);
        if (!s.else_body.empty()) {
          os << ind << "} else {\n";
          print_stmts(s.else_body, os, depth + 1);
        }
        os << ind << "}\n";
        break;
      case Stmt::Kind::While:
        os << ind << "while (";
        print_expr(*s.expr, os);
        os << ") {\n";
        print_stmts(s.body, os, depth + 1);
        os << ind << "}\n";
        break;
      case Stmt::Kind::Return:
        os << ind << "return";
        if (s.has_expr) {
          os << " ";
          print_expr(*s.expr, os);
        }
        os << "\n";
        break;
      case Stmt::Kind::Print:
        os << ind << "print(";
        print_expr(*s.expr, os);
        os << ")\n";
        break;
    }
  }
}

}  // namespace detail

inline std::string pretty_print(const Program& p) {
  std::ostringstream os;
  for (const auto& [var, dom] : p.domains)
    os << "# domain " << var << " : " << dom.str() << "\n";
  for (const auto& g : p.globals) os << "# global " << g << "\n";
  bool first = true;
  for (const auto& f : p.functions) {
    if (!first) os << "\n";
    first = false;
    os << "def " << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) os << ", ";
      os << f.params[i];
    }
    os << ") {\n";
    detail::print_stmts(f.body, os, 1);
    os << "}\n";
  }
  return os.str();
}

}  // namespace cpda
