#pragma once

// Control flow automata: statement labels (the alphabet of traces), edges
// with stable ids, and lowering of a parsed Program with call inlining.

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ermc/parser.hpp"

namespace ermc {

using LocationId = int;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string source_hash(std::string_view source) { return hex64(fnv1a64(source)); }

enum class StatementKind { Assign, ArrayStore, Assume, AssertFail, Nop, Havoc };

inline const char* kind_name(StatementKind k) {
  switch (k) {
    case StatementKind::Assign: return "assign";
    case StatementKind::ArrayStore: return "array-store";
    case StatementKind::Assume: return "assume";
    case StatementKind::AssertFail: return "assert-fail";
    case StatementKind::Nop: return "nop";
    case StatementKind::Havoc: return "havoc";
  }
  return "?";
}

/// One element of the trace alphabet. `text` is the normalized rendering and
/// re-parses to an equal Statement.
struct Statement {
  StatementKind kind = StatementKind::Nop;
  std::string target;    // Assign / Havoc / ArrayStore target
  Expr index;            // ArrayStore and cell Havoc
  Expr expr;             // Assign rhs, Assume / AssertFail condition, ArrayStore value
  bool decl = false;     // rendered as "int x ..."
  bool uninit = false;   // "int x;" (initialized to 0)
  std::string nop_text;  // Nop payload
  std::string text;
};

inline std::string render(const Statement& s) {
  std::string d = s.decl ? "int " : "";
  switch (s.kind) {
    case StatementKind::Assign:
      if (s.uninit) return "int " + s.target + ";";
      return d + s.target + " = " + to_string(s.expr) + ";";
    case StatementKind::Havoc:
      if (s.index) return s.target + "[" + to_string(s.index) + "] = nondet();";
      return d + s.target + " = nondet();";
    case StatementKind::ArrayStore:
      return s.target + "[" + to_string(s.index) + "] = " + to_string(s.expr) + ";";
    case StatementKind::Assume: return "assume(" + to_string(s.expr) + ");";
    case StatementKind::AssertFail: return "assert_fail(" + to_string(s.expr) + ");";
    case StatementKind::Nop: return s.nop_text;
  }
  return "";
}

inline Statement finish(Statement s) {
  s.text = render(s);
  return s;
}

inline bool statement_equal(const Statement& a, const Statement& b) {
  auto eq = [](const Expr& x, const Expr& y) { return (!x && !y) || (x && y && expr_equal(x, y)); };
  return a.kind == b.kind && a.target == b.target && a.decl == b.decl && a.uninit == b.uninit &&
         a.nop_text == b.nop_text && eq(a.index, b.index) && eq(a.expr, b.expr);
}

/// Inverse of render(). Throws FrontendError on malformed text.
inline Statement parse_statement(std::string_view text) {
  detail::Parser p(text);
  Statement s;
  auto done = [&] {
    p.expect(";");
    if (!p.at_end()) p.fail("trailing input after statement");
    return finish(s);
  };
  if (p.is("assume") || p.is("assert_fail")) {
    s.kind = p.is("assume") ? StatementKind::Assume : StatementKind::AssertFail;
    p.ident();
    p.expect("(");
    s.expr = p.expression();
    p.expect(")");
    return done();
  }
  if (p.is("skip") && p.is(";", 1)) {
    p.ident();
    s.nop_text = "skip;";
    return done();
  }
  if (p.is("return") && p.is(";", 1)) {
    p.expect("return");
    s.nop_text = "return;";
    return done();
  }
  if (p.is("int")) {
    p.expect("int");
    s.decl = true;
    s.target = p.ident();
    if (p.is("[")) {
      p.expect("[");
      Expr size = p.expression();
      p.expect("]");
      std::string name = s.target;
      s = Statement{};
      s.nop_text = "int " + name + "[" + to_string(size) + "];";
      return done();
    }
    if (p.is(";")) {
      s.kind = StatementKind::Assign;
      s.uninit = true;
      s.expr = mk::lit(0);
      return done();
    }
    p.expect("=");
    Expr rhs = p.expression();
    if (rhs->kind == ExprKind::Nondet) s.kind = StatementKind::Havoc;
    else { s.kind = StatementKind::Assign; s.expr = rhs; }
    return done();
  }
  s.target = p.ident();
  if (p.is("[")) {
    p.expect("[");
    s.index = p.expression();
    p.expect("]");
    p.expect("=");
    Expr rhs = p.expression();
    if (rhs->kind == ExprKind::Nondet) s.kind = StatementKind::Havoc;
    else { s.kind = StatementKind::ArrayStore; s.expr = rhs; }
    return done();
  }
  p.expect("=");
  Expr rhs = p.expression();
  if (rhs->kind == ExprKind::Nondet) s.kind = StatementKind::Havoc;
  else { s.kind = StatementKind::Assign; s.expr = rhs; }
  return done();
}

struct EdgeId {
  LocationId source = 0;
  LocationId target = 0;
  std::uint32_t label_hash = 0;

  auto operator<=>(const EdgeId&) const = default;

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", label_hash);
    return std::to_string(source) + ":" + std::to_string(target) + ":" + buf;
  }

  static std::optional<EdgeId> from_string(std::string_view s) {
    auto a = s.find(':');
    if (a == std::string_view::npos) return std::nullopt;
    auto b = s.find(':', a + 1);
    if (b == std::string_view::npos) return std::nullopt;
    try {
      EdgeId id;
      std::size_t used = 0;
      std::string src(s.substr(0, a)), tgt(s.substr(a + 1, b - a - 1)), h(s.substr(b + 1));
      id.source = std::stoi(src, &used);
      if (used != src.size()) return std::nullopt;
      id.target = std::stoi(tgt, &used);
      if (used != tgt.size()) return std::nullopt;
      if (h.size() != 8) return std::nullopt;
      id.label_hash = static_cast<std::uint32_t>(std::stoul(h, &used, 16));
      if (used != h.size()) return std::nullopt;
      return id;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
};

inline EdgeId make_edge_id(LocationId src, const std::string& text, LocationId tgt) {
  auto h = fnv1a64(std::to_string(src) + "|" + text + "|" + std::to_string(tgt));
  return {src, tgt, static_cast<std::uint32_t>(h ^ (h >> 32))};
}

struct Edge {
  EdgeId id;
  LocationId source = 0;
  LocationId target = 0;
  Statement label;
  int line = 0;
};

/// Control flow automaton of the inlined entry function.
class CFA {
 public:
  LocationId entry() const { return entry_; }
  LocationId error() const { return error_; }
  LocationId exit() const { return exit_; }
  std::size_t location_count() const { return out_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<std::string, std::int64_t>& arrays() const { return arrays_; }
  bool is_loop_head(LocationId l) const { return loop_heads_.count(l) > 0; }
  const std::set<LocationId>& loop_heads() const { return loop_heads_; }
  /// Locations of the natural loop headed by `h` (including `h`).
  const std::set<LocationId>& loop_body(LocationId h) const {
    static const std::set<LocationId> none;
    auto it = loop_bodies_.find(h);
    return it == loop_bodies_.end() ? none : it->second;
  }
  bool has_location(LocationId l) const { return l >= 0 && static_cast<std::size_t>(l) < out_.size(); }

  /// Edges leaving `l`, ordered by edge id. Throws on an unknown location.
  std::span<const Edge* const> outgoing(LocationId l) const {
    if (!has_location(l)) throw std::out_of_range("unknown location " + std::to_string(l));
    return out_[static_cast<std::size_t>(l)];
  }

  const Edge* find(const EdgeId& id) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), id, [](const Edge& e, const EdgeId& k) { return e.id < k; });
    return (it != edges_.end() && it->id == id) ? &*it : nullptr;
  }

  const Edge& at(const EdgeId& id) const {
    const Edge* e = find(id);
    if (!e) throw std::out_of_range("unknown edge " + id.str());
    return *e;
  }

 private:
  friend class CfaBuilder;

  void index() {
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
    for (auto& v : out_) v.clear();
    for (const auto& e : edges_) out_[static_cast<std::size_t>(e.source)].push_back(&e);
    std::vector<std::vector<LocationId>> pred(out_.size());
    for (const auto& e : edges_) pred[static_cast<std::size_t>(e.target)].push_back(e.source);
    for (LocationId h : loop_heads_) {
      std::set<LocationId> fwd{h};
      std::vector<LocationId> st{h};
      while (!st.empty()) {
        LocationId l = st.back();
        st.pop_back();
        for (const Edge* e : out_[static_cast<std::size_t>(l)])
          if (fwd.insert(e->target).second) st.push_back(e->target);
      }
      std::set<LocationId> body{h};
      for (LocationId p : pred[static_cast<std::size_t>(h)])
        if (fwd.count(p) && body.insert(p).second) st.push_back(p);
      while (!st.empty()) {
        LocationId l = st.back();
        st.pop_back();
        for (LocationId p : pred[static_cast<std::size_t>(l)])
          if (body.insert(p).second) st.push_back(p);
      }
      loop_bodies_[h] = std::move(body);
    }
  }

  LocationId entry_ = 0, error_ = 0, exit_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<const Edge*>> out_;
  std::map<std::string, std::int64_t> arrays_;
  std::set<LocationId> loop_heads_;
  std::map<LocationId, std::set<LocationId>> loop_bodies_;
};

struct CfaOptions {
  std::string entry = "main";
  int max_inline_depth = 16;
  /// Cells allocated for arrays with a non-constant size; 0 rejects them.
  std::int64_t array_capacity = 8;
};

inline Expr negate(const Expr& c) {
  if (c->kind == ExprKind::Unary && c->unop == UnOp::Not) return c->args[0];
  return mk::lnot(c);
}

class CfaBuilder {
 public:
  CfaBuilder(const Program& p, CfaOptions opt) : prog_(p), opt_(std::move(opt)) {}

  CFA build() {
    const FunctionDef* f = prog_.find(opt_.entry);
    if (!f || f->intrinsic) throw FrontendError(FrontendErrorKind::UnresolvedIdentifier, 0, 0, "entry function '" + opt_.entry + "' not found");
    LocationId entry = new_loc();
    error_ = new_loc();
    Frame fr;
    fr.fn = f;
    fr.scopes.emplace_back();
    fr.end = new_loc();
    std::optional<LocationId> cur = entry;
    for (const auto& prm : f->params) {
      if (prm.is_array) {
        std::string n = fresh(prm.name);
        arrays_[n] = std::max<std::int64_t>(opt_.array_capacity, 1);
        fr.scopes.back()[prm.name] = {n, true};
        Statement s;
        s.nop_text = "int " + n + "[" + std::to_string(arrays_[n]) + "];";
        cur = step(*cur, s, f->line);
      } else {
        std::string n = fresh(prm.name);
        fr.scopes.back()[prm.name] = {n, false};
        Statement s;
        s.kind = StatementKind::Havoc;
        s.decl = true;
        s.target = n;
        cur = step(*cur, s, f->line);
      }
    }
    frames_.push_back(std::move(fr));
    cur = lower(f->body, *cur);
    LocationId exit = close_function(cur);
    frames_.pop_back();
    return finalize(entry, exit);
  }

 private:
  struct Var { std::string name; bool is_array; };
  struct Frame {
    const FunctionDef* fn = nullptr;
    std::vector<std::map<std::string, Var>> scopes;
    LocationId end = 0;
    bool returned = false;
    std::string ret;
  };
  struct RawEdge { LocationId src, tgt; Statement st; int line; };

  LocationId new_loc() { return next_loc_++; }

  std::string fresh(const std::string& base) {
    int n = uses_[base]++;
    return n == 0 ? base : base + "@" + std::to_string(n);
  }

  LocationId step(LocationId from, Statement s, int line) {
    LocationId to = new_loc();
    edges_.push_back({from, to, finish(std::move(s)), line});
    return to;
  }
  void link(LocationId from, LocationId to, Statement s, int line) {
    edges_.push_back({from, to, finish(std::move(s)), line});
  }

  // Redirect every edge into `from` towards `to`; `from` must have no successors.
  void merge_into(LocationId from, LocationId to) {
    if (from == to) return;
    for (auto& e : edges_)
      if (e.tgt == from) e.tgt = to;
    if (loop_heads_.count(from)) { loop_heads_.erase(from); loop_heads_.insert(to); }
  }

  Frame& frame() { return frames_.back(); }

  const Var& resolve(const std::string& n, int line) {
    for (auto it = frame().scopes.rbegin(); it != frame().scopes.rend(); ++it) {
      auto f = it->find(n);
      if (f != it->end()) return f->second;
    }
    throw FrontendError(FrontendErrorKind::UnresolvedIdentifier, line, 1, "unresolved identifier '" + n + "'");
  }

  // Rename variables and pull calls / nondet() out into preceding edges.
  Expr hoist(const Expr& e, LocationId& cur, int line) {
    switch (e->kind) {
      case ExprKind::Var: return mk::var(resolve(e->name, line).name);
      case ExprKind::ArrayRead: {
        Expr idx = hoist(e->args[0], cur, line);
        return mk::read(resolve(e->name, line).name, idx);
      }
      case ExprKind::Nondet: {
        Statement s;
        s.kind = StatementKind::Havoc;
        s.decl = true;
        s.target = fresh("_t");
        cur = step(cur, s, line);
        return mk::var(s.target);
      }
      case ExprKind::Call: {
        auto r = inline_call(e, cur, line, true);
        return mk::var(*r);
      }
      case ExprKind::Unary: return mk::unary(e->unop, hoist(e->args[0], cur, line));
      case ExprKind::Binary: {
        Expr l = hoist(e->args[0], cur, line);
        Expr r = hoist(e->args[1], cur, line);
        return mk::binary(e->binop, l, r);
      }
      default: return e;
    }
  }

  // Runtime checks for division by zero and array bounds, innermost first.
  void add_checks(const Expr& e, LocationId& cur, int line) {
    for (const auto& a : e->args) add_checks(a, cur, line);
    if (e->kind == ExprKind::Binary && (e->binop == BinOp::Div || e->binop == BinOp::Mod)) {
      const Expr& d = e->args[1];
      if (d->kind == ExprKind::Int && d->value != 0) return;
      check(mk::binary(BinOp::Eq, d, mk::lit(0)), cur, line);
    } else if (e->kind == ExprKind::ArrayRead) {
      index_check(e->name, e->args[0], cur, line);
    }
  }

  void index_check(const std::string& arr, const Expr& idx, LocationId& cur, int line) {
    std::int64_t size = arrays_.at(arr);
    if (idx->kind == ExprKind::Int && idx->value >= 0 && idx->value < size) return;
    Expr bad = mk::binary(BinOp::Or, mk::binary(BinOp::Lt, idx, mk::lit(0)),
                          mk::binary(BinOp::Ge, idx, mk::lit(size)));
    check(bad, cur, line);
  }

  void check(const Expr& failing, LocationId& cur, int line) {
    Statement f;
    f.kind = StatementKind::AssertFail;
    f.expr = failing;
    link(cur, error_, f, line);
    Statement ok;
    ok.kind = StatementKind::Assume;
    ok.expr = negate(failing);
    cur = step(cur, ok, line);
  }

  Expr value(const Expr& e, LocationId& cur, int line) {
    Expr h = hoist(e, cur, line);
    add_checks(h, cur, line);
    return h;
  }

  // Branch on `c` with short-circuit operators turned into nested branches.
  void branch(const Expr& c, LocationId cur, LocationId t, LocationId f, int line) {
    if (c->kind == ExprKind::Binary && c->binop == BinOp::And) {
      LocationId mid = new_loc();
      branch(c->args[0], cur, mid, f, line);
      branch(c->args[1], mid, t, f, line);
      return;
    }
    if (c->kind == ExprKind::Binary && c->binop == BinOp::Or) {
      LocationId mid = new_loc();
      branch(c->args[0], cur, t, mid, line);
      branch(c->args[1], mid, t, f, line);
      return;
    }
    if (c->kind == ExprKind::Unary && c->unop == UnOp::Not) {
      branch(c->args[0], cur, f, t, line);
      return;
    }
    Expr cond = value(c, cur, line);
    Statement yes;
    yes.kind = StatementKind::Assume;
    yes.expr = cond;
    link(cur, t, yes, line);
    Statement no;
    no.kind = StatementKind::Assume;
    no.expr = negate(cond);
    link(cur, f, no, line);
  }

  std::optional<std::string> inline_call(const Expr& call, LocationId& cur, int line, bool want_value) {
    const FunctionDef* f = prog_.find(call->name);
    if (!f || f->intrinsic) throw FrontendError(FrontendErrorKind::UnresolvedIdentifier, line, 1, "unresolved function '" + call->name + "'");
    if (static_cast<int>(frames_.size()) > opt_.max_inline_depth)
      throw FrontendError(FrontendErrorKind::InlineDepthExceeded, line, 1, "inline depth exceeded at call to '" + f->name + "'");
    Frame callee;
    callee.fn = f;
    callee.scopes.emplace_back();
    // Arguments are evaluated in the caller's scope before binding.
    std::vector<std::pair<std::string, Expr>> binds;
    for (std::size_t i = 0; i < f->params.size(); ++i) {
      const auto& prm = f->params[i];
      if (prm.is_array) {
        callee.scopes.back()[prm.name] = {resolve(call->args[i]->name, line).name, true};
      } else {
        binds.emplace_back(prm.name, value(call->args[i], cur, line));
      }
    }
    for (auto& [pname, v] : binds) {
      std::string n = fresh(pname);
      callee.scopes.back()[pname] = {n, false};
      Statement s;
      s.kind = StatementKind::Assign;
      s.decl = true;
      s.target = n;
      s.expr = v;
      cur = step(cur, s, line);
    }
    if (f->returns_int) callee.ret = fresh(f->name + "_ret");
    callee.end = new_loc();
    frames_.push_back(std::move(callee));
    auto after = lower(f->body, cur);
    LocationId end = close_function(after);
    std::string ret = frame().ret;
    frames_.pop_back();
    cur = end;
    if (want_value) return ret;
    return std::nullopt;
  }

  LocationId close_function(std::optional<LocationId> fallthrough) {
    Frame& fr = frame();
    if (!fallthrough) return fr.end;
    if (!fr.returned) return *fallthrough;
    merge_into(fr.end, *fallthrough);
    return *fallthrough;
  }

  std::optional<LocationId> lower(const StmtPtr& s, LocationId cur) {
    switch (s->kind) {
      case StmtKind::Block: {
        frame().scopes.emplace_back();
        std::optional<LocationId> c = cur;
        for (const auto& m : s->body) {
          c = lower(m, *c);
          if (!c) break;  // code after a return is unreachable
        }
        frame().scopes.pop_back();
        return c;
      }
      case StmtKind::Decl: {
        Statement st;
        st.decl = true;
        if (s->expr && s->expr->kind == ExprKind::Nondet) {
          st.kind = StatementKind::Havoc;
        } else {
          st.kind = StatementKind::Assign;
          if (s->expr) st.expr = value(s->expr, cur, s->line);
          else { st.uninit = true; st.expr = mk::lit(0); }
        }
        st.target = fresh(s->name);
        frame().scopes.back()[s->name] = {st.target, false};
        return step(cur, st, s->line);
      }
      case StmtKind::ArrayDecl: {
        std::string n = fresh(s->name);
        Statement st;
        if (s->expr->kind == ExprKind::Int) {
          if (s->expr->value <= 0)
            throw FrontendError(FrontendErrorKind::ArraySize, s->line, 1, "array size must be positive");
          arrays_[n] = s->expr->value;
        } else {
          if (opt_.array_capacity <= 0)
            throw FrontendError(FrontendErrorKind::ArraySize, s->line, 1, "array size of '" + s->name + "' is not a constant");
          arrays_[n] = opt_.array_capacity;
          Expr size = value(s->expr, cur, s->line);
          LocationId ok = new_loc();
          branch_atomic(mk::binary(BinOp::Le, size, mk::lit(opt_.array_capacity)), cur, ok, exit_placeholder(), s->line);
          cur = ok;
          st.nop_text = "int " + n + "[" + to_string(size) + "];";
          frame().scopes.back()[s->name] = {n, true};
          return step(cur, st, s->line);
        }
        st.nop_text = "int " + n + "[" + std::to_string(arrays_[n]) + "];";
        frame().scopes.back()[s->name] = {n, true};
        return step(cur, st, s->line);
      }
      case StmtKind::Assign: {
        Statement st;
        st.target = resolve(s->name, s->line).name;
        if (s->expr->kind == ExprKind::Nondet) {
          st.kind = StatementKind::Havoc;
        } else {
          st.kind = StatementKind::Assign;
          st.expr = value(s->expr, cur, s->line);
        }
        return step(cur, st, s->line);
      }
      case StmtKind::ArrayStore: {
        Statement st;
        st.target = resolve(s->name, s->line).name;
        st.index = value(s->index, cur, s->line);
        if (s->expr->kind == ExprKind::Nondet) {
          st.kind = StatementKind::Havoc;
        } else {
          st.kind = StatementKind::ArrayStore;
          st.expr = value(s->expr, cur, s->line);
        }
        index_check(st.target, st.index, cur, s->line);
        return step(cur, st, s->line);
      }
      case StmtKind::If: {
        LocationId t = new_loc(), f = new_loc();
        branch(s->expr, cur, t, f, s->line);
        auto te = scoped(s->body[0], t);
        std::optional<LocationId> fe = f;
        if (s->body.size() > 1) fe = scoped(s->body[1], f);
        if (!te && !fe) return std::nullopt;
        if (!te) return fe;
        if (!fe) return te;
        merge_into(*fe, *te);
        return te;
      }
      case StmtKind::While: {
        LocationId head = cur;
        loop_heads_.insert(head);
        LocationId body = new_loc(), out = new_loc();
        branch(s->expr, head, body, out, s->line);
        auto be = scoped(s->body[0], body);
        if (be) merge_into(*be, head);
        return out;
      }
      case StmtKind::For: {
        frame().scopes.emplace_back();
        std::optional<LocationId> c = cur;
        if (s->init) c = lower(s->init, *c);
        LocationId head = *c;
        loop_heads_.insert(head);
        LocationId body = new_loc(), out = new_loc();
        branch(s->expr ? s->expr : mk::lit(1), head, body, out, s->line);
        auto be = scoped(s->body[0], body);
        if (be && s->step) be = lower(s->step, *be);
        if (be) merge_into(*be, head);
        frame().scopes.pop_back();
        return out;
      }
      case StmtKind::Assert: {
        LocationId ok = new_loc();
        Expr cond = s->expr;
        // short-circuit conditions still branch; the failing side goes to error
        if (cond->kind == ExprKind::Binary && (cond->binop == BinOp::And || cond->binop == BinOp::Or)) {
          branch_to_error(cond, cur, ok, s->line);
          return ok;
        }
        Expr v = value(cond, cur, s->line);
        Statement fail;
        fail.kind = StatementKind::AssertFail;
        fail.expr = negate(v);
        link(cur, error_, fail, s->line);
        Statement pass;
        pass.kind = StatementKind::Assume;
        pass.expr = v;
        link(cur, ok, pass, s->line);
        return ok;
      }
      case StmtKind::Return: {
        Frame& fr = frame();
        Statement st;
        if (s->expr) {
          st.kind = StatementKind::Assign;
          st.expr = value(s->expr, cur, s->line);
          st.target = fr.ret.empty() ? fresh("_ret") : fr.ret;
        } else {
          st.nop_text = "return;";
        }
        fr.returned = true;
        link(cur, fr.end, st, s->line);
        return std::nullopt;
      }
      case StmtKind::CallStmt: {
        inline_call(s->expr, cur, s->line, false);
        return cur;
      }
    }
    return cur;
  }

  void branch_atomic(const Expr& cond, LocationId cur, LocationId t, LocationId f, int line) {
    Statement yes;
    yes.kind = StatementKind::Assume;
    yes.expr = cond;
    link(cur, t, yes, line);
    Statement no;
    no.kind = StatementKind::Assume;
    no.expr = negate(cond);
    link(cur, f, no, line);
  }

  void branch_to_error(const Expr& c, LocationId cur, LocationId ok, int line) {
    LocationId bad = new_loc();
    branch(c, cur, ok, bad, line);
    // `bad` collects the failing outcomes; forward them to the error sink
    merge_into(bad, error_);
  }

  LocationId exit_placeholder() {
    if (!exit_ph_) exit_ph_ = new_loc();
    return *exit_ph_;
  }

  std::optional<LocationId> scoped(const StmtPtr& s, LocationId cur) {
    frame().scopes.emplace_back();
    auto r = lower(s, cur);
    frame().scopes.pop_back();
    return r;
  }

  CFA finalize(LocationId entry, LocationId exit) {
    if (exit_ph_) merge_into(*exit_ph_, exit);
    // Keep locations reachable from entry (plus error), renumbered in creation order.
    std::vector<std::vector<std::size_t>> succ(static_cast<std::size_t>(next_loc_));
    for (std::size_t i = 0; i < edges_.size(); ++i) succ[static_cast<std::size_t>(edges_[i].src)].push_back(i);
    std::vector<char> seen(static_cast<std::size_t>(next_loc_), 0);
    std::vector<LocationId> stack{entry};
    seen[static_cast<std::size_t>(entry)] = 1;
    while (!stack.empty()) {
      LocationId l = stack.back();
      stack.pop_back();
      for (auto i : succ[static_cast<std::size_t>(l)]) {
        LocationId t = edges_[i].tgt;
        if (!seen[static_cast<std::size_t>(t)]) { seen[static_cast<std::size_t>(t)] = 1; stack.push_back(t); }
      }
    }
    seen[static_cast<std::size_t>(error_)] = 1;
    seen[static_cast<std::size_t>(exit)] = 1;
    std::vector<LocationId> renum(static_cast<std::size_t>(next_loc_), -1);
    LocationId n = 0;
    for (LocationId l = 0; l < next_loc_; ++l)
      if (seen[static_cast<std::size_t>(l)]) renum[static_cast<std::size_t>(l)] = n++;

    CFA c;
    c.entry_ = renum[static_cast<std::size_t>(entry)];
    c.error_ = renum[static_cast<std::size_t>(error_)];
    c.exit_ = renum[static_cast<std::size_t>(exit)];
    c.arrays_ = arrays_;
    c.out_.resize(static_cast<std::size_t>(n));
    for (auto h : loop_heads_)
      if (seen[static_cast<std::size_t>(h)]) c.loop_heads_.insert(renum[static_cast<std::size_t>(h)]);
    std::set<std::pair<LocationId, std::string>> labels;
    for (const auto& e : edges_) {
      if (!seen[static_cast<std::size_t>(e.src)]) continue;
      Edge out;
      out.source = renum[static_cast<std::size_t>(e.src)];
      out.target = renum[static_cast<std::size_t>(e.tgt)];
      out.label = e.st;
      out.line = e.line;
      out.id = make_edge_id(out.source, out.label.text, out.target);
      if (!labels.insert({out.source, out.label.text}).second)
        throw FrontendError(FrontendErrorKind::Semantic, e.line, 1, "ambiguous control flow: duplicate label '" + out.label.text + "'");
      c.edges_.push_back(std::move(out));
    }
    c.index();
    return c;
  }

  const Program& prog_;
  CfaOptions opt_;
  LocationId next_loc_ = 0;
  LocationId error_ = 0;
  std::optional<LocationId> exit_ph_;
  std::vector<RawEdge> edges_;
  // deque: references to outer frames survive nested inlining
  std::deque<Frame> frames_;
  std::map<std::string, int> uses_;
  std::map<std::string, std::int64_t> arrays_;
  std::set<LocationId> loop_heads_;
};

/// Lowers `p` into a CFA rooted at `opt.entry`, inlining every call.
inline CFA build_cfa(const Program& p, const CfaOptions& opt = {}) { return CfaBuilder(p, opt).build(); }

inline std::span<const Edge* const> outgoing(const CFA& c, LocationId l) { return c.outgoing(l); }

}  // namespace ermc
