#pragma once

// MiniC front end: lexer, recursive-descent parser, and the resolution /
// recursion checks run before lowering.

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ermc/expr.hpp"

namespace ermc {

enum class FrontendErrorKind {
  Syntax,
  DuplicateDeclaration,
  UnresolvedIdentifier,
  Recursion,
  InlineDepthExceeded,
  ArraySize,
  Semantic,
};

class FrontendError : public std::runtime_error {
 public:
  FrontendError(FrontendErrorKind kind, int line, int col, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        kind_(kind), line_(line), col_(col) {}

  FrontendErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  FrontendErrorKind kind_;
  int line_;
  int col_;
};

enum class StmtKind { Decl, ArrayDecl, Assign, ArrayStore, If, While, For, Assert, Return, CallStmt, Block };

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
  StmtKind kind;
  int line = 0;
  std::string name;      // declared / assigned variable or array
  Expr index;            // ArrayStore index
  Expr expr;             // initializer, rhs, condition, call, size, return value
  std::vector<StmtPtr> body;  // Block members; If: {then, else?}; loops: {body}
  StmtPtr init, step;    // For clauses
};

struct Param {
  std::string name;
  bool is_array = false;
};

struct FunctionDef {
  std::string name;
  bool returns_int = false;
  bool intrinsic = false;
  std::vector<Param> params;
  StmtPtr body;
  int line = 0;
};

struct Program {
  std::vector<FunctionDef> functions;

  const FunctionDef* find(std::string_view name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
};

namespace detail {

enum class Tok { Int, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') { ++line; col = 1; }
      else ++col;
    }
  };
  static const char* const kTwo[] = {"<=", ">=", "==", "!=", "&&", "||", "++", "--"};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) { advance(1); continue; }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) throw FrontendError(FrontendErrorKind::Syntax, line, col, "unterminated comment");
      advance(2);
      continue;
    }
    Token t{Tok::Punct, "", 0, line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::exception&) {
        throw FrontendError(FrontendErrorKind::Syntax, line, col, "integer literal out of range");
      }
      advance(j - i);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      // '@' appears in names produced by inlining; accepted so statement texts re-parse
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '@')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      bool two = false;
      if (i + 1 < src.size()) {
        for (const char* op : kTwo) {
          if (src[i] == op[0] && src[i + 1] == op[1]) { t.text = op; two = true; break; }
        }
      }
      if (!two) {
        if (std::string_view("(){}[];,=+-*/%<>!").find(c) == std::string_view::npos)
          throw FrontendError(FrontendErrorKind::Syntax, line, col, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  out.push_back({Tok::End, "<eof>", 0, line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Program program() {
    Program p;
    while (!at_end()) {
      auto f = function();
      if (p.find(f.name)) {
        throw FrontendError(FrontendErrorKind::DuplicateDeclaration, f.line, 1, "duplicate function '" + f.name + "'");
      }
      p.functions.push_back(std::move(f));
    }
    if (!p.find("nondet")) {
      p.functions.insert(p.functions.begin(), FunctionDef{"nondet", true, true, {}, nullptr, 0});
    }
    return p;
  }

  Expr expression() { return parse_or(); }

  StmtPtr statement() { return stmt(); }

  bool at_end() const { return peek().kind == Tok::End; }
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool is(std::string_view p, std::size_t k = 0) const {
    const auto& t = peek(k);
    return (t.kind == Tok::Punct || t.kind == Tok::Ident) && t.text == p;
  }
  void expect(std::string_view p) {
    if (!is(p)) fail("expected '" + std::string(p) + "' but found '" + peek().text + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FrontendError(FrontendErrorKind::Syntax, peek().line, peek().col, msg);
  }
  std::string ident() {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) fail("expected identifier but found '" + peek().text + "'");
    return toks_[pos_++].text;
  }

 private:
  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {"int", "void", "if", "else", "while", "for", "assert", "return"};
    return kw.count(s) > 0;
  }

  FunctionDef function() {
    FunctionDef f;
    f.line = peek().line;
    if (is("int")) f.returns_int = true;
    else if (!is("void")) fail("expected function definition");
    ++pos_;
    f.name = ident();
    expect("(");
    if (!is(")")) {
      if (is("void") && is(")", 1)) {
        ++pos_;
      } else {
        do {
          expect("int");
          Param prm{ident(), false};
          if (is("[")) { ++pos_; expect("]"); prm.is_array = true; }
          f.params.push_back(prm);
        } while (is(",") && (++pos_, true));
      }
    }
    expect(")");
    if (is(";")) {
      ++pos_;
      if (f.name != "nondet" || !f.returns_int || !f.params.empty())
        throw FrontendError(FrontendErrorKind::Semantic, f.line, 1, "only 'int nondet();' may be declared without a body");
      f.intrinsic = true;
      return f;
    }
    f.body = block();
    return f;
  }

  StmtPtr block() {
    Stmt s{StmtKind::Block, peek().line};
    expect("{");
    while (!is("}")) {
      if (at_end()) fail("unterminated block");
      s.body.push_back(stmt());
    }
    expect("}");
    return std::make_shared<const Stmt>(std::move(s));
  }

  // Declarations and assignments usable both as statements and in for-clauses.
  StmtPtr simple() {
    int line = peek().line;
    if (is("int")) {
      ++pos_;
      Stmt s{StmtKind::Decl, line};
      s.name = ident();
      if (is("[")) {
        ++pos_;
        s.kind = StmtKind::ArrayDecl;
        s.expr = expression();
        expect("]");
      } else if (is("=")) {
        ++pos_;
        s.expr = expression();
      }
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("++") || is("--")) {
      bool inc = is("++");
      ++pos_;
      std::string n = ident();
      return incr(n, inc, line);
    }
    std::string n = ident();
    if (is("++") || is("--")) {
      bool inc = is("++");
      ++pos_;
      return incr(n, inc, line);
    }
    if (is("(")) {
      ++pos_;
      Stmt s{StmtKind::CallStmt, line};
      s.expr = mk::call(n, args());
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("[")) {
      ++pos_;
      Stmt s{StmtKind::ArrayStore, line};
      s.name = n;
      s.index = expression();
      expect("]");
      expect("=");
      s.expr = expression();
      return std::make_shared<const Stmt>(std::move(s));
    }
    expect("=");
    Stmt s{StmtKind::Assign, line};
    s.name = n;
    s.expr = expression();
    return std::make_shared<const Stmt>(std::move(s));
  }

  static StmtPtr incr(const std::string& n, bool inc, int line) {
    Stmt s{StmtKind::Assign, line};
    s.name = n;
    s.expr = mk::binary(inc ? BinOp::Add : BinOp::Sub, mk::var(n), mk::lit(1));
    return std::make_shared<const Stmt>(std::move(s));
  }

  StmtPtr stmt() {
    int line = peek().line;
    if (is("{")) return block();
    if (is("if")) {
      ++pos_;
      expect("(");
      Stmt s{StmtKind::If, line};
      s.expr = expression();
      expect(")");
      s.body.push_back(stmt());
      if (is("else")) { ++pos_; s.body.push_back(stmt()); }
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("while")) {
      ++pos_;
      expect("(");
      Stmt s{StmtKind::While, line};
      s.expr = expression();
      expect(")");
      s.body.push_back(stmt());
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("for")) {
      ++pos_;
      expect("(");
      Stmt s{StmtKind::For, line};
      if (!is(";")) s.init = simple();
      expect(";");
      if (!is(";")) s.expr = expression();
      expect(";");
      if (!is(")")) s.step = simple();
      expect(")");
      s.body.push_back(stmt());
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("assert")) {
      ++pos_;
      expect("(");
      Stmt s{StmtKind::Assert, line};
      s.expr = expression();
      expect(")");
      expect(";");
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is("return")) {
      ++pos_;
      Stmt s{StmtKind::Return, line};
      if (!is(";")) s.expr = expression();
      expect(";");
      return std::make_shared<const Stmt>(std::move(s));
    }
    if (is(";")) {
      ++pos_;
      return std::make_shared<const Stmt>(Stmt{StmtKind::Block, line});
    }
    auto s = simple();
    expect(";");
    return s;
  }

  std::vector<Expr> args() {
    std::vector<Expr> a;
    if (!is(")")) {
      a.push_back(expression());
      while (is(",")) { ++pos_; a.push_back(expression()); }
    }
    expect(")");
    return a;
  }

  Expr parse_or() {
    Expr l = parse_and();
    while (is("||")) { ++pos_; l = mk::binary(BinOp::Or, l, parse_and()); }
    return l;
  }
  Expr parse_and() {
    Expr l = parse_eq();
    while (is("&&")) { ++pos_; l = mk::binary(BinOp::And, l, parse_eq()); }
    return l;
  }
  Expr parse_eq() {
    Expr l = parse_rel();
    while (is("==") || is("!=")) {
      BinOp op = is("==") ? BinOp::Eq : BinOp::Ne;
      ++pos_;
      l = mk::binary(op, l, parse_rel());
    }
    return l;
  }
  Expr parse_rel() {
    Expr l = parse_add();
    while (is("<") || is("<=") || is(">") || is(">=")) {
      BinOp op = is("<") ? BinOp::Lt : is("<=") ? BinOp::Le : is(">") ? BinOp::Gt : BinOp::Ge;
      ++pos_;
      l = mk::binary(op, l, parse_add());
    }
    return l;
  }
  Expr parse_add() {
    Expr l = parse_mul();
    while (is("+") || is("-")) {
      BinOp op = is("+") ? BinOp::Add : BinOp::Sub;
      ++pos_;
      l = mk::binary(op, l, parse_mul());
    }
    return l;
  }
  Expr parse_mul() {
    Expr l = parse_unary();
    while (is("*") || is("/") || is("%")) {
      BinOp op = is("*") ? BinOp::Mul : is("/") ? BinOp::Div : BinOp::Mod;
      ++pos_;
      l = mk::binary(op, l, parse_unary());
    }
    return l;
  }
  Expr parse_unary() {
    if (is("-")) {
      ++pos_;
      if (peek().kind == Tok::Int) {
        // "-9223372036854775808" cannot be spelled; the literal range is symmetric
        return mk::lit(-toks_[pos_++].value);
      }
      return mk::unary(UnOp::Neg, parse_unary());
    }
    if (is("!")) { ++pos_; return mk::unary(UnOp::Not, parse_unary()); }
    return parse_primary();
  }
  Expr parse_primary() {
    if (peek().kind == Tok::Int) return mk::lit(toks_[pos_++].value);
    if (is("(")) {
      ++pos_;
      Expr e = expression();
      expect(")");
      return e;
    }
    std::string n = ident();
    if (is("(")) {
      ++pos_;
      auto a = args();
      if (n == "nondet") {
        if (!a.empty()) fail("nondet() takes no arguments");
        return mk::nondet();
      }
      return mk::call(n, std::move(a));
    }
    if (is("[")) {
      ++pos_;
      Expr idx = expression();
      expect("]");
      return mk::read(n, idx);
    }
    return mk::var(n);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Scope-aware resolution of every identifier plus call arity and kind checks.
class Resolver {
 public:
  explicit Resolver(const Program& p) : prog_(p) {}

  void run() {
    for (const auto& f : prog_.functions) {
      if (f.intrinsic) continue;
      current_ = &f;
      scopes_.clear();
      scopes_.emplace_back();
      for (const auto& prm : f.params) declare(prm.name, prm.is_array, f.line);
      check_stmt(f.body, true);
    }
    check_recursion();
  }

 private:
  struct Entry { bool is_array; };

  [[noreturn]] static void error(FrontendErrorKind k, int line, const std::string& msg) {
    throw FrontendError(k, line, 1, msg);
  }

  void declare(const std::string& n, bool arr, int line) {
    if (scopes_.back().count(n)) error(FrontendErrorKind::DuplicateDeclaration, line, "duplicate declaration of '" + n + "'");
    scopes_.back()[n] = {arr};
  }

  const Entry* lookup(const std::string& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(n);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  void need_scalar(const std::string& n, int line) {
    auto* e = lookup(n);
    if (!e) error(FrontendErrorKind::UnresolvedIdentifier, line, "unresolved identifier '" + n + "'");
    if (e->is_array) error(FrontendErrorKind::Semantic, line, "'" + n + "' is an array");
  }
  void need_array(const std::string& n, int line) {
    auto* e = lookup(n);
    if (!e) error(FrontendErrorKind::UnresolvedIdentifier, line, "unresolved identifier '" + n + "'");
    if (!e->is_array) error(FrontendErrorKind::Semantic, line, "'" + n + "' is not an array");
  }

  void check_call(const Expr& e, int line, bool need_value) {
    const FunctionDef* f = prog_.find(e->name);
    if (!f || f->intrinsic) error(FrontendErrorKind::UnresolvedIdentifier, line, "unresolved function '" + e->name + "'");
    if (need_value && !f->returns_int) error(FrontendErrorKind::Semantic, line, "void function '" + e->name + "' used as a value");
    if (f->params.size() != e->args.size()) error(FrontendErrorKind::Semantic, line, "wrong number of arguments to '" + e->name + "'");
    calls_[current_->name].insert(f->name);
    for (std::size_t i = 0; i < f->params.size(); ++i) {
      const Expr& a = e->args[i];
      if (f->params[i].is_array) {
        if (a->kind != ExprKind::Var) error(FrontendErrorKind::Semantic, line, "array argument must be an array name");
        need_array(a->name, line);
      } else {
        check_expr(a, line);
      }
    }
  }

  void check_expr(const Expr& e, int line) {
    switch (e->kind) {
      case ExprKind::Var: need_scalar(e->name, line); return;
      case ExprKind::ArrayRead: need_array(e->name, line); check_expr(e->args[0], line); return;
      case ExprKind::Call: check_call(e, line, true); return;
      default:
        for (const auto& a : e->args) check_expr(a, line);
    }
  }

  void check_stmt(const StmtPtr& s, bool fn_body = false) {
    if (!s) return;
    switch (s->kind) {
      case StmtKind::Block:
        if (!fn_body) scopes_.emplace_back();
        for (const auto& c : s->body) check_stmt(c);
        if (!fn_body) scopes_.pop_back();
        return;
      case StmtKind::Decl:
        if (s->expr) check_expr(s->expr, s->line);
        declare(s->name, false, s->line);
        return;
      case StmtKind::ArrayDecl:
        check_expr(s->expr, s->line);
        declare(s->name, true, s->line);
        return;
      case StmtKind::Assign:
        need_scalar(s->name, s->line);
        check_expr(s->expr, s->line);
        return;
      case StmtKind::ArrayStore:
        need_array(s->name, s->line);
        check_expr(s->index, s->line);
        check_expr(s->expr, s->line);
        return;
      case StmtKind::If:
        check_expr(s->expr, s->line);
        for (const auto& c : s->body) scoped(c);
        return;
      case StmtKind::While:
        check_expr(s->expr, s->line);
        scoped(s->body[0]);
        return;
      case StmtKind::For:
        scopes_.emplace_back();
        check_stmt(s->init);
        if (s->expr) check_expr(s->expr, s->line);
        check_stmt(s->step);
        scoped(s->body[0]);
        scopes_.pop_back();
        return;
      case StmtKind::Assert: check_expr(s->expr, s->line); return;
      case StmtKind::Return:
        if (s->expr && !current_->returns_int) error(FrontendErrorKind::Semantic, s->line, "void function returns a value");
        if (!s->expr && current_->returns_int) error(FrontendErrorKind::Semantic, s->line, "missing return value");
        if (s->expr) check_expr(s->expr, s->line);
        return;
      case StmtKind::CallStmt: check_call(s->expr, s->line, false); return;
    }
  }

  void scoped(const StmtPtr& s) {
    scopes_.emplace_back();
    check_stmt(s);
    scopes_.pop_back();
  }

  void check_recursion() {
    std::map<std::string, int> color;
    std::vector<std::string> stack;
    auto dfs = [&](auto&& self, const std::string& f) -> void {
      color[f] = 1;
      stack.push_back(f);
      for (const auto& g : calls_[f]) {
        if (color[g] == 1) {
          std::string cyc;
          for (const auto& s : stack) cyc += s + " -> ";
          const FunctionDef* def = prog_.find(g);
          error(FrontendErrorKind::Recursion, def ? def->line : 0, "recursion detected: " + cyc + g);
        }
        if (color[g] == 0) self(self, g);
      }
      stack.pop_back();
      color[f] = 2;
    };
    for (const auto& f : prog_.functions)
      if (color[f.name] == 0) dfs(dfs, f.name);
  }

  const Program& prog_;
  const FunctionDef* current_ = nullptr;
  std::vector<std::map<std::string, Entry>> scopes_;
  std::map<std::string, std::set<std::string>> calls_;
};

}  // namespace detail

/// Parses MiniC source and checks name resolution and the absence of
/// recursion. Throws FrontendError with a line/column on failure.
inline Program parse(std::string_view source) {
  detail::Parser p(source);
  Program prog = p.program();
  detail::Resolver(prog).run();
  return prog;
}

inline Expr parse_expression(std::string_view text) {
  detail::Parser p(text);
  Expr e = p.expression();
  if (!p.at_end()) p.fail("trailing input after expression");
  return e;
}

}  // namespace ermc
