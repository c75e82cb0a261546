#pragma once

// Trace feasibility: symbolic path conditions over havoc inputs, decided by
// bounded backtracking search with interval pruning. Never claims
// infeasibility; a search that finds nothing answers Unknown.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ermc/interp.hpp"
#include "ermc/symbolic.hpp"

namespace ermc {

struct PathCondition {
  std::size_t symbols = 0;
  std::vector<Expr> constraints;
  /// Some assume folded to false.
  bool unsat = false;
  /// Some assume could not be expressed over the symbols.
  bool opaque = false;
};

struct FeasibilityOptions {
  std::int64_t domain_bound = 8;
  std::size_t max_symbols = 32;
  std::size_t node_budget = 1000000;
  bool opaque_multiplication = false;
};

inline PathCondition path_condition(const CFA& c, const Trace& t, bool opaque_multiplication = false) {
  PathCondition pc;
  SymOptions o;
  o.opaque_multiplication = opaque_multiplication;
  o.max_size = 1u << 14;
  SymStore store(&c);
  LocationId at = c.entry();
  for (const auto& id : t) {
    const Edge* e = c.find(id);
    if (!e || e->source != at) throw std::invalid_argument("trace is not a path of the CFA at edge " + id.str());
    const Statement& s = e->label;
    switch (s.kind) {
      case StatementKind::Assign: store.set(s.target, store.eval(s.expr, o)); break;
      case StatementKind::ArrayStore:
        if (!store.store(s.target, store.eval(s.index, o), store.eval(s.expr, o))) pc.unsat = true;
        break;
      case StatementKind::Havoc: {
        Expr v = mk::sym(static_cast<std::int64_t>(pc.symbols++));
        if (s.index) {
          if (!store.store(s.target, store.eval(s.index, o), v)) pc.unsat = true;
        } else {
          store.set(s.target, v);
        }
        break;
      }
      case StatementKind::Assume:
      case StatementKind::AssertFail: {
        Expr g = store.eval(s.expr, o);
        if (is_int(g)) {
          if (g->value == 0) pc.unsat = true;
        } else if (contains_kind(g, ExprKind::Top)) {
          pc.opaque = true;
        } else {
          pc.constraints.push_back(g);
        }
        break;
      }
      case StatementKind::Nop: break;
    }
    at = e->target;
  }
  return pc;
}

enum class UnknownReason { None, Budget, NonlinearOpaque, DomainExhausted };

inline const char* reason_name(UnknownReason r) {
  switch (r) {
    case UnknownReason::None: return "none";
    case UnknownReason::Budget: return "budget";
    case UnknownReason::NonlinearOpaque: return "nonlinear-opaque";
    case UnknownReason::DomainExhausted: return "domain-exhausted";
  }
  return "?";
}

struct FeasibilityVerdict {
  bool feasible = false;
  InputVector witness;
  UnknownReason reason = UnknownReason::None;
  std::size_t nodes = 0;
};

namespace detail {

using Wide = __int128;

struct Linear {
  std::map<std::int64_t, Wide> coef;
  Wide k = 0;
};

inline std::optional<Linear> linearize(const Expr& e) {
  constexpr Wide lim = Wide(1) << 80;
  auto ok = [&](const Linear& l) {
    if (l.k > lim || l.k < -lim) return false;
    for (auto& [s, c] : l.coef)
      if (c > lim || c < -lim) return false;
    return true;
  };
  switch (e->kind) {
    case ExprKind::Int: return Linear{{}, e->value};
    case ExprKind::Sym: return Linear{{{e->value, 1}}, 0};
    case ExprKind::Unary:
      if (e->unop == UnOp::Neg) {
        auto a = linearize(e->args[0]);
        if (!a) return a;
        for (auto& [s, c] : a->coef) c = -c;
        a->k = -a->k;
        return a;
      }
      return std::nullopt;
    case ExprKind::Binary: {
      if (e->binop != BinOp::Add && e->binop != BinOp::Sub && e->binop != BinOp::Mul) return std::nullopt;
      auto a = linearize(e->args[0]);
      auto b = linearize(e->args[1]);
      if (!a || !b) return std::nullopt;
      if (e->binop == BinOp::Mul) {
        if (!a->coef.empty() && !b->coef.empty()) return std::nullopt;
        if (!a->coef.empty()) std::swap(a, b);
        Wide f = a->k;
        for (auto& [s, c] : b->coef) c *= f;
        b->k *= f;
        if (!ok(*b)) return std::nullopt;
        return b;
      }
      Wide sign = e->binop == BinOp::Add ? 1 : -1;
      for (auto& [s, c] : b->coef) a->coef[s] += sign * c;
      a->k += sign * b->k;
      if (!ok(*a)) return std::nullopt;
      return a;
    }
    default: return std::nullopt;
  }
}

inline std::int64_t eval_concrete(const Expr& e, const std::vector<std::int64_t>& v) {
  switch (e->kind) {
    case ExprKind::Int: return e->value;
    case ExprKind::Sym: return v.at(static_cast<std::size_t>(e->value));
    case ExprKind::Unary: return apply_unop(e->unop, eval_concrete(e->args[0], v));
    case ExprKind::Binary: {
      std::int64_t a = eval_concrete(e->args[0], v);
      if (e->binop == BinOp::And && !a) return 0;
      if (e->binop == BinOp::Or && a) return 1;
      return apply_binop(e->binop, a, eval_concrete(e->args[1], v));
    }
    default: throw std::logic_error("not a path-condition expression: " + to_string(e));
  }
}

inline bool holds(const Expr& e, const std::vector<std::int64_t>& v) {
  try {
    return eval_concrete(e, v) != 0;
  } catch (const OverflowError&) {
    return false;
  } catch (const std::domain_error&) {
    return false;
  }
}

struct BudgetHit {};

class Search {
 public:
  Search(const CFA& c, const Trace& t, const PathCondition& pc, const FeasibilityOptions& o)
      : cfa_(c), trace_(t), opt_(o), values_(pc.symbols, 0) {
    std::vector<char> used(pc.symbols, 0);
    for (const auto& g : pc.constraints) {
      std::vector<std::int64_t> syms;
      collect_syms(g, syms);
      for (auto s : syms) used[static_cast<std::size_t>(s)] = 1;
    }
    for (std::size_t s = 0; s < pc.symbols; ++s)
      if (used[s]) order_.push_back(static_cast<std::int64_t>(s));
    std::vector<std::size_t> pos(pc.symbols, 0);
    for (std::size_t i = 0; i < order_.size(); ++i) pos[static_cast<std::size_t>(order_[i])] = i;
    at_.resize(order_.size());
    for (const auto& g : pc.constraints) {
      std::vector<std::int64_t> syms;
      collect_syms(g, syms);
      std::size_t last = 0;
      for (auto s : syms) last = std::max(last, pos[static_cast<std::size_t>(s)]);
      Item it{g, std::nullopt, BinOp::Ne};
      if (g->kind == ExprKind::Binary && is_comparison(g->binop)) {
        auto l = linearize(g->args[0]);
        auto r = linearize(g->args[1]);
        if (l && r) {
          for (auto& [s, c] : r->coef) l->coef[s] -= c;
          l->k -= r->k;
          it.lin = l;
          it.op = g->binop;
        }
      } else if (auto l = linearize(g)) {
        it.lin = l;
      }
      at_[last].push_back(std::move(it));
    }
  }

  /// Iterative deepening over the domain bound keeps witnesses stable as B grows.
  FeasibilityVerdict run() {
    FeasibilityVerdict v;
    try {
      for (std::int64_t b = 0; b <= opt_.domain_bound; ++b) {
        bound_ = b;
        if (dfs(0)) {
          v.feasible = true;
          v.witness = values_;
          v.nodes = nodes_;
          return v;
        }
        if (order_.empty()) break;
      }
      v.reason = UnknownReason::DomainExhausted;
    } catch (const BudgetHit&) {
      v.reason = UnknownReason::Budget;
    }
    v.nodes = nodes_;
    return v;
  }

 private:
  struct Item {
    Expr expr;
    std::optional<Linear> lin;
    BinOp op;
  };

  static Wide floor_div(Wide a, Wide b) {
    Wide q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }
  static Wide ceil_div(Wide a, Wide b) { return -floor_div(-a, b); }

  bool dfs(std::size_t i) {
    if (i == order_.size()) {
      if (replay(cfa_, trace_, values_)) return true;
      return false;
    }
    std::int64_t sym = order_[i];
    Wide lo = -bound_, hi = bound_;
    for (const auto& it : at_[i]) {
      if (!it.lin) continue;
      Wide a = 0, rest = it.lin->k;
      for (auto& [s, c] : it.lin->coef) {
        if (s == sym) a = c;
        else rest += c * values_[static_cast<std::size_t>(s)];
      }
      if (a == 0) continue;
      // a*x + rest (op) 0
      Wide c = -rest;
      switch (it.op) {
        case BinOp::Lt: c -= 1; [[fallthrough]];
        case BinOp::Le:
          if (a > 0) hi = std::min(hi, floor_div(c, a));
          else lo = std::max(lo, ceil_div(c, a));
          break;
        case BinOp::Gt: c += 1; [[fallthrough]];
        case BinOp::Ge:
          if (a > 0) lo = std::max(lo, ceil_div(c, a));
          else hi = std::min(hi, floor_div(c, a));
          break;
        case BinOp::Eq:
          if (c % a != 0) return false;
          lo = std::max(lo, c / a);
          hi = std::min(hi, c / a);
          break;
        default: break;
      }
      if (lo > hi) return false;
    }
    // 0, 1, -1, 2, -2, ... clipped to [lo, hi]
    for (Wide m = 0; m <= bound_ * 2 + 1; ++m) {
      Wide x = (m % 2 == 1) ? (m + 1) / 2 : -(m / 2);
      if (x < lo || x > hi) continue;
      if (++nodes_ > opt_.node_budget) throw BudgetHit{};
      values_[static_cast<std::size_t>(sym)] = static_cast<std::int64_t>(x);
      bool ok = true;
      for (const auto& it : at_[i])
        if (!holds(it.expr, values_)) {
          ok = false;
          break;
        }
      if (ok && dfs(i + 1)) return true;
    }
    values_[static_cast<std::size_t>(sym)] = 0;
    return false;
  }

  const CFA& cfa_;
  const Trace& trace_;
  FeasibilityOptions opt_;
  std::vector<std::int64_t> values_;
  std::vector<std::int64_t> order_;
  std::vector<std::vector<Item>> at_;
  std::int64_t bound_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace detail

/// Feasible(witness) only after the witness replays; otherwise Unknown.
inline FeasibilityVerdict check_feasibility(const CFA& c, const Trace& t, const FeasibilityOptions& o = {}) {
  if (o.domain_bound < 0) throw std::invalid_argument("domain bound must be non-negative");
  PathCondition pc = path_condition(c, t, o.opaque_multiplication);
  FeasibilityVerdict v;
  if (pc.unsat) {
    v.reason = UnknownReason::DomainExhausted;
    return v;
  }
  if (pc.opaque) {
    v.reason = UnknownReason::NonlinearOpaque;
    return v;
  }
  if (pc.symbols > o.max_symbols) {
    v.reason = UnknownReason::Budget;
    return v;
  }
  return detail::Search(c, t, pc, o).run();
}

}  // namespace ermc
