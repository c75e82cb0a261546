#pragma once

// Immutable expression trees shared by the MiniC front end, the CFA
// statement labels, and the symbolic evaluators.

#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ermc {

enum class ExprKind { Int, Var, Sym, Top, ArrayRead, Unary, Binary, Call, Nondet };

enum class UnOp { Neg, Not };

enum class BinOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  std::int64_t value = 0;   // Int literal, Sym index
  std::string name;         // Var, ArrayRead, Call
  UnOp unop = UnOp::Neg;
  BinOp binop = BinOp::Add;
  std::vector<Expr> args;   // operands / index / call arguments
};

namespace mk {

inline Expr node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }
inline Expr lit(std::int64_t v) { return node({ExprKind::Int, v}); }
inline Expr var(std::string n) { return node({ExprKind::Var, 0, std::move(n)}); }
inline Expr sym(std::int64_t i) { return node({ExprKind::Sym, i}); }
inline Expr top() { return node({ExprKind::Top}); }
inline Expr nondet() { return node({ExprKind::Nondet}); }
inline Expr read(std::string arr, Expr idx) {
  return node({ExprKind::ArrayRead, 0, std::move(arr), UnOp::Neg, BinOp::Add, {std::move(idx)}});
}
inline Expr unary(UnOp op, Expr e) {
  return node({ExprKind::Unary, 0, {}, op, BinOp::Add, {std::move(e)}});
}
inline Expr binary(BinOp op, Expr l, Expr r) {
  return node({ExprKind::Binary, 0, {}, UnOp::Neg, op, {std::move(l), std::move(r)}});
}
inline Expr call(std::string f, std::vector<Expr> args) {
  return node({ExprKind::Call, 0, std::move(f), UnOp::Neg, BinOp::Add, std::move(args)});
}
inline Expr lnot(Expr e) { return unary(UnOp::Not, std::move(e)); }

}  // namespace mk

inline bool is_comparison(BinOp op) {
  return op == BinOp::Lt || op == BinOp::Le || op == BinOp::Gt || op == BinOp::Ge ||
         op == BinOp::Eq || op == BinOp::Ne;
}

inline bool expr_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->value != b->value || a->name != b->name) return false;
  if (a->kind == ExprKind::Unary && a->unop != b->unop) return false;
  if (a->kind == ExprKind::Binary && a->binop != b->binop) return false;
  if (a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  return true;
}

inline std::size_t expr_size(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e->args) n += expr_size(a);
  return n;
}

template <typename F>
void visit_expr(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e->args) visit_expr(a, f);
}

inline bool contains_kind(const Expr& e, ExprKind k) {
  bool found = false;
  visit_expr(e, [&](const Expr& x) { found = found || x->kind == k; });
  return found;
}

inline const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
  }
  return "?";
}

// Binding strength, higher binds tighter. Matches the parser.
inline int precedence(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne: return 3;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 4;
    case BinOp::Add:
    case BinOp::Sub: return 5;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 6;
  }
  return 0;
}

namespace detail {

inline void print_expr(std::ostream& os, const Expr& e, int ctx) {
  switch (e->kind) {
    case ExprKind::Int:
      if (e->value < 0 && ctx > 0) os << '(' << e->value << ')';
      else os << e->value;
      return;
    case ExprKind::Var: os << e->name; return;
    case ExprKind::Sym: os << '$' << e->value; return;
    case ExprKind::Top: os << "$top"; return;
    case ExprKind::Nondet: os << "nondet()"; return;
    case ExprKind::ArrayRead:
      os << e->name << '[';
      print_expr(os, e->args[0], 0);
      os << ']';
      return;
    case ExprKind::Call:
      os << e->name << '(';
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, e->args[i], 0);
      }
      os << ')';
      return;
    case ExprKind::Unary:
      os << (e->unop == UnOp::Neg ? "-" : "!");
      if (e->args[0]->kind == ExprKind::Unary) {
        os << '(';
        print_expr(os, e->args[0], 0);
        os << ')';
      } else {
        print_expr(os, e->args[0], 7);
      }
      return;
    case ExprKind::Binary: {
      int p = precedence(e->binop);
      bool paren = p < ctx;
      if (paren) os << '(';
      print_expr(os, e->args[0], p);
      os << ' ' << binop_text(e->binop) << ' ';
      // left-associative: the right operand needs strictly tighter binding
      print_expr(os, e->args[1], p + 1);
      if (paren) os << ')';
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  detail::print_expr(os, e, 0);
  return os.str();
}

}  // namespace ermc
