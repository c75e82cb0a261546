#pragma once

// Symbolic stores: every variable and array cell holds a folded expression
// over input symbols ($k, one per havoc), or $top when nothing is known.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ermc/cfa.hpp"
#include "ermc/interp.hpp"

namespace ermc {

struct SymOptions {
  bool opaque_multiplication = false;
  /// Expressions with more nodes than this collapse to $top.
  std::size_t max_size = 64;
};

inline bool is_top(const Expr& e) { return e->kind == ExprKind::Top; }
inline bool is_int(const Expr& e) { return e->kind == ExprKind::Int; }

inline bool is_boolean(const Expr& e) {
  if (e->kind == ExprKind::Binary) return is_comparison(e->binop) || e->binop == BinOp::And || e->binop == BinOp::Or;
  if (e->kind == ExprKind::Unary) return e->unop == UnOp::Not;
  return is_int(e) && (e->value == 0 || e->value == 1);
}

inline std::optional<BinOp> flip_comparison(BinOp op) {
  switch (op) {
    case BinOp::Lt: return BinOp::Ge;
    case BinOp::Le: return BinOp::Gt;
    case BinOp::Gt: return BinOp::Le;
    case BinOp::Ge: return BinOp::Lt;
    case BinOp::Eq: return BinOp::Ne;
    case BinOp::Ne: return BinOp::Eq;
    default: return std::nullopt;
  }
}

inline Expr fold_unary(UnOp op, const Expr& a) {
  if (is_top(a)) return a;
  if (is_int(a)) {
    try {
      return mk::lit(apply_unop(op, a->value));
    } catch (const OverflowError&) {
      return mk::top();
    }
  }
  if (op == UnOp::Not) {
    if (a->kind == ExprKind::Unary && a->unop == UnOp::Not && is_boolean(a->args[0])) return a->args[0];
    if (a->kind == ExprKind::Binary) {
      if (auto f = flip_comparison(a->binop)) return mk::binary(*f, a->args[0], a->args[1]);
    }
  }
  if (op == UnOp::Neg && a->kind == ExprKind::Unary && a->unop == UnOp::Neg) return a->args[0];
  return mk::unary(op, a);
}

inline Expr as_boolean(const Expr& e) { return is_boolean(e) ? e : mk::binary(BinOp::Ne, e, mk::lit(0)); }

inline Expr fold_binary(BinOp op, const Expr& a, const Expr& b) {
  if (op == BinOp::And) {
    if ((is_int(a) && a->value == 0) || (is_int(b) && b->value == 0)) return mk::lit(0);
    if (is_int(a)) return is_top(b) ? b : as_boolean(b);
    if (is_int(b)) return is_top(a) ? a : as_boolean(a);
  }
  if (op == BinOp::Or) {
    if ((is_int(a) && a->value != 0) || (is_int(b) && b->value != 0)) return mk::lit(1);
    if (is_int(a)) return is_top(b) ? b : as_boolean(b);
    if (is_int(b)) return is_top(a) ? a : as_boolean(a);
  }
  if (is_top(a) || is_top(b)) return mk::top();
  if (is_int(a) && is_int(b)) {
    if ((op == BinOp::Div || op == BinOp::Mod) && b->value == 0) return mk::top();
    try {
      return mk::lit(apply_binop(op, a->value, b->value));
    } catch (const OverflowError&) {
      return mk::top();
    }
  }
  if (expr_equal(a, b)) {
    switch (op) {
      case BinOp::Sub: return mk::lit(0);
      case BinOp::Eq:
      case BinOp::Le:
      case BinOp::Ge: return mk::lit(1);
      case BinOp::Lt:
      case BinOp::Gt:
      case BinOp::Ne: return mk::lit(0);
      case BinOp::And:
      case BinOp::Or: return as_boolean(a);
      default: break;
    }
  }
  switch (op) {
    case BinOp::Add:
      if (is_int(b) && b->value == 0) return a;
      if (is_int(a) && a->value == 0) return b;
      // (x + c1) + c2 and (x - c1) + c2
      if (is_int(b) && a->kind == ExprKind::Binary && is_int(a->args[1]) &&
          (a->binop == BinOp::Add || a->binop == BinOp::Sub)) {
        std::int64_t c1 = a->binop == BinOp::Add ? a->args[1]->value : -a->args[1]->value;
        std::int64_t s = 0;
        if (!__builtin_add_overflow(c1, b->value, &s)) return fold_binary(BinOp::Add, a->args[0], mk::lit(s));
      }
      break;
    case BinOp::Sub:
      if (is_int(b) && b->value == 0) return a;
      if (is_int(b) && b->value != INT64_MIN) return fold_binary(BinOp::Add, a, mk::lit(-b->value));
      break;
    case BinOp::Mul:
      if ((is_int(a) && a->value == 0) || (is_int(b) && b->value == 0)) return mk::lit(0);
      if (is_int(b) && b->value == 1) return a;
      if (is_int(a) && a->value == 1) return b;
      break;
    case BinOp::Div:
      if (is_int(b) && b->value == 1) return a;
      break;
    default: break;
  }
  // x + -c reads better as x - c
  if (op == BinOp::Add && is_int(b) && b->value < 0 && b->value != INT64_MIN)
    return mk::binary(BinOp::Sub, a, mk::lit(-b->value));
  return mk::binary(op, a, b);
}

inline Expr cap(const Expr& e, const SymOptions& o) { return expr_size(e) > o.max_size ? mk::top() : e; }

/// Replaces symbols by expressions and refolds.
template <typename F>
Expr substitute(const Expr& e, F&& sub) {
  switch (e->kind) {
    case ExprKind::Sym: {
      Expr r = sub(e->value);
      return r ? r : e;
    }
    case ExprKind::Unary: return fold_unary(e->unop, substitute(e->args[0], sub));
    case ExprKind::Binary: return fold_binary(e->binop, substitute(e->args[0], sub), substitute(e->args[1], sub));
    default: return e;
  }
}

inline void collect_syms(const Expr& e, std::vector<std::int64_t>& out) {
  visit_expr(e, [&](const Expr& x) {
    if (x->kind == ExprKind::Sym) out.push_back(x->value);
  });
}

/// Variable and array contents of one abstract program state.
class SymStore {
 public:
  SymStore() = default;
  explicit SymStore(const CFA* c) : cfa_(c) {}

  Expr get(const std::string& v) const {
    auto it = vars_.find(v);
    return it == vars_.end() ? zero() : it->second;
  }

  Expr cell(const std::string& a, std::int64_t i) const {
    auto it = arrays_.find(a);
    if (it == arrays_.end()) return zero();
    return it->second[static_cast<std::size_t>(i)];
  }

  std::int64_t array_size(const std::string& a) const { return cfa_->arrays().at(a); }

  Expr eval(const Expr& e, const SymOptions& o) const {
    switch (e->kind) {
      case ExprKind::Int:
      case ExprKind::Sym:
      case ExprKind::Top: return e;
      case ExprKind::Var: return get(e->name);
      case ExprKind::ArrayRead: {
        Expr idx = eval(e->args[0], o);
        std::int64_t n = array_size(e->name);
        if (is_int(idx)) {
          if (idx->value < 0 || idx->value >= n) return mk::top();
          return cell(e->name, idx->value);
        }
        // unknown index: only a uniform array has a known value
        Expr first = cell(e->name, 0);
        for (std::int64_t i = 1; i < n; ++i)
          if (!expr_equal(cell(e->name, i), first)) return mk::top();
        return first;
      }
      case ExprKind::Unary: return cap(fold_unary(e->unop, eval(e->args[0], o)), o);
      case ExprKind::Binary: {
        if (o.opaque_multiplication && e->binop == BinOp::Mul && !is_int(e->args[0]) && !is_int(e->args[1]))
          return mk::top();
        return cap(fold_binary(e->binop, eval(e->args[0], o), eval(e->args[1], o)), o);
      }
      default: return mk::top();
    }
  }

  void set(const std::string& v, Expr e) { vars_[v] = std::move(e); }

  /// Writes a cell; a non-constant index degrades the whole array.
  bool store(const std::string& a, const Expr& idx, Expr v) {
    std::int64_t n = array_size(a);
    auto& cells = materialize(a);
    if (is_int(idx)) {
      if (idx->value < 0 || idx->value >= n) return false;
      cells[static_cast<std::size_t>(idx->value)] = std::move(v);
      return true;
    }
    for (auto& c : cells) c = mk::top();
    return true;
  }

  template <typename F>
  void rewrite(F&& sub) {
    for (auto& [k, v] : vars_) v = substitute(v, sub);
    for (auto& [k, cells] : arrays_)
      for (auto& c : cells) c = substitute(c, sub);
  }

  bool has_top() const {
    for (const auto& [k, v] : vars_)
      if (contains_kind(v, ExprKind::Top)) return true;
    for (const auto& [k, cells] : arrays_)
      for (const auto& c : cells)
        if (contains_kind(c, ExprKind::Top)) return true;
    return false;
  }

  const std::map<std::string, Expr>& vars() const { return vars_; }
  const std::map<std::string, std::vector<Expr>>& arrays() const { return arrays_; }

 private:
  static const Expr& zero() {
    static const Expr z = mk::lit(0);
    return z;
  }

  std::vector<Expr>& materialize(const std::string& a) {
    auto it = arrays_.find(a);
    if (it != arrays_.end()) return it->second;
    return arrays_[a] = std::vector<Expr>(static_cast<std::size_t>(array_size(a)), zero());
  }

  const CFA* cfa_ = nullptr;
  std::map<std::string, Expr> vars_;
  std::map<std::string, std::vector<Expr>> arrays_;
};

/// Matches pattern `p` (from the covering state) against `t` under a growing
/// symbol binding. $top in `p` matches anything.
inline bool match_expr(const Expr& p, const Expr& t, std::map<std::int64_t, Expr>& sigma, bool syms_only = false) {
  if (is_top(p)) return true;
  if (is_top(t)) return false;
  if (p->kind == ExprKind::Sym) {
    if (syms_only && t->kind != ExprKind::Sym) return false;
    auto [it, fresh] = sigma.emplace(p->value, t);
    return fresh || expr_equal(it->second, t);
  }
  if (p->kind != t->kind || p->value != t->value || p->name != t->name || p->args.size() != t->args.size()) return false;
  if (p->kind == ExprKind::Unary && p->unop != t->unop) return false;
  if (p->kind == ExprKind::Binary && p->binop != t->binop) return false;
  for (std::size_t i = 0; i < p->args.size(); ++i)
    if (!match_expr(p->args[i], t->args[i], sigma, syms_only)) return false;
  return true;
}

/// Whether every concrete store described by `small` is described by `big`.
inline bool store_leq(const SymStore& small, const SymStore& big, std::map<std::int64_t, Expr>& sigma,
                      bool syms_only = false) {
  static const Expr z = mk::lit(0);
  auto get = [](const std::map<std::string, Expr>& m, const std::string& k) -> const Expr& {
    auto it = m.find(k);
    return it == m.end() ? z : it->second;
  };
  const auto& sv = small.vars();
  const auto& bv = big.vars();
  for (const auto& [k, v] : bv)
    if (!match_expr(v, get(sv, k), sigma, syms_only)) return false;
  for (const auto& [k, v] : sv)
    if (!bv.count(k) && !match_expr(z, v, sigma, syms_only)) return false;
  std::set<std::string> names;
  for (const auto& [k, c] : small.arrays()) names.insert(k);
  for (const auto& [k, c] : big.arrays()) names.insert(k);
  for (const auto& a : names) {
    std::int64_t n = small.arrays().count(a) ? static_cast<std::int64_t>(small.arrays().at(a).size())
                                             : static_cast<std::int64_t>(big.arrays().at(a).size());
    for (std::int64_t i = 0; i < n; ++i)
      if (!match_expr(big.cell(a, i), small.cell(a, i), sigma, syms_only)) return false;
  }
  return true;
}

}  // namespace ermc
