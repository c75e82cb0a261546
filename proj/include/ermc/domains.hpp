#pragma once

// Abstract domains plugged into the CPA engine and their composition.

#include <algorithm>
#include <map>
#include <set>
#include <optional>
#include <tuple>
#include <vector>

#include "ermc/cpa.hpp"
#include "ermc/symbolic.hpp"

namespace ermc {

class LocationDomain {
 public:
  using State = LocationId;

  explicit LocationDomain(const CFA& c) : cfa_(&c) {}

  State initial() const { return cfa_->entry(); }
  std::optional<State> successor(const State& s, const Edge& e) const {
    if (e.source != s) return std::nullopt;
    return e.target;
  }
  bool leq(const State& a, const State& b) const { return a == b; }
  LocationId location(const State& s) const { return s; }
  Disposition disposition(const State&) const { return Disposition::Expand; }

 private:
  const CFA* cfa_;
};

struct ValueState {
  SymStore store;
  /// Residual assume constraints over the symbols.
  std::vector<Expr> facts;
  std::int64_t next_sym = 0;
  /// Some constraint could not be represented (exact mode only).
  bool lossy = false;
};

struct ValueOptions {
  SymOptions sym;
  /// Keep every path fact, never substitute, and only let $top-free,
  /// lossless states cover others.
  bool exact = false;
  /// Outside exact mode only the newest facts are kept.
  std::size_t max_facts = 16;
};

class ValueDomain {
 public:
  using State = ValueState;

  ValueDomain(const CFA& c, ValueOptions o = {}) : cfa_(&c), opt_(o) {}

  State initial() const { return ValueState{SymStore(cfa_)}; }
  LocationId location(const State&) const { return cfa_->entry(); }
  Disposition disposition(const State&) const { return Disposition::Expand; }
  const ValueOptions& options() const { return opt_; }

  std::optional<State> successor(const State& s, const Edge& e) const {
    const Statement& st = e.label;
    const SymOptions& o = opt_.sym;
    switch (st.kind) {
      case StatementKind::Nop: return s;
      case StatementKind::Assign: {
        State r = s;
        r.store.set(st.target, s.store.eval(st.expr, o));
        if (!opt_.exact) forget_dead_facts(r);
        return r;
      }
      case StatementKind::ArrayStore: {
        State r = s;
        if (!r.store.store(st.target, s.store.eval(st.index, o), s.store.eval(st.expr, o))) return std::nullopt;
        if (!opt_.exact) forget_dead_facts(r);
        return r;
      }
      case StatementKind::Havoc: {
        State r = s;
        Expr v = mk::sym(r.next_sym++);
        if (st.index) {
          if (!r.store.store(st.target, s.store.eval(st.index, o), v)) return std::nullopt;
        } else {
          r.store.set(st.target, v);
        }
        if (!opt_.exact) forget_dead_facts(r);
        return r;
      }
      case StatementKind::Assume:
      case StatementKind::AssertFail: return assume(s, s.store.eval(st.expr, o));
    }
    return std::nullopt;
  }

  /// Restricts `s` by condition `c` (already evaluated in `s`).
  std::optional<State> assume(const State& s, const Expr& c) const {
    if (is_int(c)) {
      if (c->value == 0) return std::nullopt;
      return s;
    }
    State r = s;
    if (contains_kind(c, ExprKind::Top)) {
      if (opt_.exact) r.lossy = true;
      return r;
    }
    std::vector<Expr> parts;
    split_and(c, parts);
    for (const auto& p : parts) {
      if (opt_.exact) {
        // every residual constraint stays, so a state's facts are its whole path condition
        r.facts.push_back(p);
      } else if (auto b = binding(p)) {
        auto [k, v] = *b;
        auto sub = [&](std::int64_t x) -> Expr { return x == k ? v : nullptr; };
        r.store.rewrite(sub);
        std::vector<Expr> kept;
        for (const auto& f : r.facts) {
          Expr g = substitute(f, sub);
          if (is_int(g)) {
            if (g->value == 0) return std::nullopt;
            continue;
          }
          kept.push_back(g);
        }
        r.facts = std::move(kept);
      } else {
        r.facts.push_back(p);
      }
    }
    if (!opt_.exact) {
      forget_dead_facts(r);
      if (r.facts.size() > opt_.max_facts)
        r.facts.erase(r.facts.begin(), r.facts.end() - static_cast<long>(opt_.max_facts));
    }
    return r;
  }

  /// a ⊑ b: some renaming of b's symbols turns b into a description that
  /// includes every store of a. Exact mode renames symbols to symbols only and
  /// needs b's facts among a's, so a feasible path to a also makes b's
  /// continuations feasible over the same input range.
  bool leq(const State& a, const State& b) const {
    if (opt_.exact && (b.lossy || b.store.has_top())) return false;
    std::map<std::int64_t, Expr> sigma;
    if (!store_leq(a.store, b.store, sigma, opt_.exact)) return false;
    for (const auto& f : b.facts) {
      // unbound symbols of b stay free; they are renamed apart from a's
      std::vector<std::int64_t> syms;
      collect_syms(f, syms);
      for (auto k : syms)
        if (!sigma.count(k)) return false;
      Expr g = substitute(f, [&](std::int64_t x) -> Expr { return sigma.at(x); });
      if (is_int(g) && g->value != 0) continue;
      bool found = false;
      for (const auto& h : a.facts) found = found || expr_equal(g, h);
      if (!found) return false;
    }
    return true;
  }

 private:
  // Facts about symbols no longer held by any variable only shrink the
  // described set; dropping them keeps loops convergent.
  static void forget_dead_facts(State& r) {
    if (r.facts.empty()) return;
    std::set<std::int64_t> live;
    std::vector<std::int64_t> syms;
    for (const auto& [k, v] : r.store.vars()) collect_syms(v, syms);
    for (const auto& [k, cells] : r.store.arrays())
      for (const auto& c : cells) collect_syms(c, syms);
    live.insert(syms.begin(), syms.end());
    std::erase_if(r.facts, [&](const Expr& f) {
      std::vector<std::int64_t> fs;
      collect_syms(f, fs);
      return std::any_of(fs.begin(), fs.end(), [&](std::int64_t k) { return !live.count(k); });
    });
  }

  static void split_and(const Expr& c, std::vector<Expr>& out) {
    if (c->kind == ExprKind::Binary && c->binop == BinOp::And) {
      split_and(c->args[0], out);
      split_and(c->args[1], out);
    } else {
      out.push_back(c);
    }
  }

  // Equalities solvable for a single symbol and !$k pin it to a constant.
  static std::optional<std::pair<std::int64_t, Expr>> binding(const Expr& c) {
    if (c->kind == ExprKind::Unary && c->unop == UnOp::Not && c->args[0]->kind == ExprKind::Sym)
      return std::pair{c->args[0]->value, mk::lit(0)};
    if (c->kind == ExprKind::Binary && c->binop == BinOp::Eq) {
      const Expr& l = c->args[0];
      const Expr& r = c->args[1];
      if (is_int(l) && !is_int(r)) return offset_binding(r, l->value);
      if (is_int(r)) return offset_binding(l, r->value);
    }
    return std::nullopt;
  }

  // $k == v, $k + c == v, $k - c == v, c + $k == v
  static std::optional<std::pair<std::int64_t, Expr>> offset_binding(const Expr& e, std::int64_t v) {
    if (e->kind == ExprKind::Sym) return std::pair{e->value, mk::lit(v)};
    if (e->kind != ExprKind::Binary || (e->binop != BinOp::Add && e->binop != BinOp::Sub)) return std::nullopt;
    const Expr& a = e->args[0];
    const Expr& b = e->args[1];
    std::int64_t r = 0;
    if (a->kind == ExprKind::Sym && is_int(b)) {
      bool bad = e->binop == BinOp::Add ? __builtin_sub_overflow(v, b->value, &r) : __builtin_add_overflow(v, b->value, &r);
      if (bad) return std::nullopt;
      return std::pair{a->value, mk::lit(r)};
    }
    if (e->binop == BinOp::Add && is_int(a) && b->kind == ExprKind::Sym) {
      if (__builtin_sub_overflow(v, a->value, &r)) return std::nullopt;
      return std::pair{b->value, mk::lit(r)};
    }
    return std::nullopt;
  }

  const CFA* cfa_;
  ValueOptions opt_;
};

struct LoopBoundState {
  std::map<LocationId, int> counters;
  bool exceeded = false;
  bool operator==(const LoopBoundState&) const = default;
};

/// Bounded unrolling: each loop-head evaluation is counted, and the
/// evaluation after the k-th counted one yields an exceeded state that the
/// engine parks in the waitlist.
class LoopBoundDomain {
 public:
  using State = LoopBoundState;

  LoopBoundDomain(const CFA& c, int k) : cfa_(&c), k_(k) {}

  State initial() const { return {}; }
  LocationId location(const State&) const { return cfa_->entry(); }
  Disposition disposition(const State& s) const { return s.exceeded ? Disposition::Park : Disposition::Expand; }
  bool leq(const State& a, const State& b) const { return a == b; }
  int bound() const { return k_; }

  std::optional<State> successor(const State& s, const Edge& e) const {
    if (s.exceeded) return std::nullopt;
    State r = s;
    if (cfa_->is_loop_head(e.source)) {
      auto it = r.counters.find(e.source);
      if (it == r.counters.end()) r.counters[e.source] = 0;
      else if (it->second >= k_) r.exceeded = true;
      else ++it->second;
    }
    // leaving a loop resets its counter
    for (auto it = r.counters.begin(); it != r.counters.end();) {
      const auto& body = cfa_->loop_body(it->first);
      if (body.count(e.source) && !body.count(e.target)) it = r.counters.erase(it);
      else ++it;
    }
    return r;
  }

 private:
  const CFA* cfa_;
  int k_;
};

/// compose(location, parts...): componentwise transfer, ⊥ in any component
/// kills the product, merge^sep / stop^sep on the product.
template <class... Parts>
class Product {
 public:
  using State = std::tuple<LocationId, typename Parts::State...>;

  Product(LocationDomain loc, Parts... parts) : loc_(std::move(loc)), parts_(std::move(parts)...) {}

  State initial() const {
    return std::apply([&](const auto&... p) { return State{loc_.initial(), p.initial()...}; }, parts_);
  }

  LocationId location(const State& s) const { return std::get<0>(s); }

  std::optional<State> successor(const State& s, const Edge& e) const {
    auto l = loc_.successor(std::get<0>(s), e);
    if (!l) return std::nullopt;
    State acc = s;
    std::get<0>(acc) = *l;
    return step<0>(s, e, std::move(acc));
  }

  bool leq(const State& a, const State& b) const {
    if (std::get<0>(a) != std::get<0>(b)) return false;
    return leq_parts(a, b, std::index_sequence_for<Parts...>{});
  }

  Disposition disposition(const State& s) const {
    return disp_parts(s, std::index_sequence_for<Parts...>{});
  }

  template <std::size_t I>
  const auto& part() const { return std::get<I>(parts_); }

 private:
  template <std::size_t I>
  std::optional<State> step(const State& s, const Edge& e, State acc) const {
    if constexpr (I == sizeof...(Parts)) {
      return acc;
    } else {
      auto r = std::get<I>(parts_).successor(std::get<I + 1>(s), e);
      if (!r) return std::nullopt;
      std::get<I + 1>(acc) = std::move(*r);
      return step<I + 1>(s, e, std::move(acc));
    }
  }

  template <std::size_t... I>
  bool leq_parts(const State& a, const State& b, std::index_sequence<I...>) const {
    return (std::get<I>(parts_).leq(std::get<I + 1>(a), std::get<I + 1>(b)) && ...);
  }

  template <std::size_t... I>
  Disposition disp_parts(const State& s, std::index_sequence<I...>) const {
    Disposition d = Disposition::Expand;
    for (Disposition x : {std::get<I>(parts_).disposition(std::get<I + 1>(s))...}) {
      if (x == Disposition::Terminal) return x;
      if (x == Disposition::Park) d = x;
    }
    return d;
  }

  LocationDomain loc_;
  std::tuple<Parts...> parts_;
};

}  // namespace ermc
