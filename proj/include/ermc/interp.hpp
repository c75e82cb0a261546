#pragma once

// Reference semantics: runs a CFA on a concrete input vector.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ermc/cfa.hpp"

namespace ermc {

using InputVector = std::vector<std::int64_t>;
using Trace = std::vector<EdgeId>;

enum class Verdict { TerminatedSafe, AssertionFailure, InputExhausted, StepLimit, OutOfModel };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TerminatedSafe: return "terminated-safe";
    case Verdict::AssertionFailure: return "assertion-failure";
    case Verdict::InputExhausted: return "input-exhausted";
    case Verdict::StepLimit: return "step-limit";
    case Verdict::OutOfModel: return "out-of-model";
  }
  return "?";
}

struct ExecutionResult {
  Trace trace;
  Verdict verdict = Verdict::TerminatedSafe;
};

/// Raised when a value leaves the int64 range.
struct OverflowError : std::runtime_error {
  OverflowError() : std::runtime_error("integer overflow") {}
};

/// Checked integer arithmetic shared by every evaluator. Division and
/// remainder truncate toward zero; callers must exclude a zero divisor.
inline std::int64_t apply_binop(BinOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  switch (op) {
    case BinOp::Add: if (__builtin_add_overflow(a, b, &r)) throw OverflowError(); return r;
    case BinOp::Sub: if (__builtin_sub_overflow(a, b, &r)) throw OverflowError(); return r;
    case BinOp::Mul: if (__builtin_mul_overflow(a, b, &r)) throw OverflowError(); return r;
    case BinOp::Div:
      if (b == 0) throw std::domain_error("division by zero");
      if (a == INT64_MIN && b == -1) throw OverflowError();
      return a / b;
    case BinOp::Mod:
      if (b == 0) throw std::domain_error("division by zero");
      if (b == -1) return 0;
      return a % b;
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::And: return a && b;
    case BinOp::Or: return a || b;
  }
  return 0;
}

inline std::int64_t apply_unop(UnOp op, std::int64_t a) {
  if (op == UnOp::Not) return !a;
  if (a == INT64_MIN) throw OverflowError();
  return -a;
}

class Machine {
 public:
  explicit Machine(const CFA& c) {
    for (const auto& [name, size] : c.arrays()) arrays_[name].assign(static_cast<std::size_t>(size), 0);
  }

  std::int64_t eval(const Expr& e) const {
    switch (e->kind) {
      case ExprKind::Int: return e->value;
      case ExprKind::Var: {
        auto it = vars_.find(e->name);
        return it == vars_.end() ? 0 : it->second;
      }
      case ExprKind::ArrayRead: return cell(e->name, eval(e->args[0]));
      case ExprKind::Unary: return apply_unop(e->unop, eval(e->args[0]));
      case ExprKind::Binary: {
        std::int64_t a = eval(e->args[0]);
        if (e->binop == BinOp::And && !a) return 0;
        if (e->binop == BinOp::Or && a) return 1;
        return apply_binop(e->binop, a, eval(e->args[1]));
      }
      default: throw std::logic_error("cannot evaluate " + to_string(e));
    }
  }

  /// Whether control may take `e` in the current store.
  bool enabled(const Edge& e) const {
    auto k = e.label.kind;
    if (k == StatementKind::Assume || k == StatementKind::AssertFail) return eval(e.label.expr) != 0;
    return true;
  }

  /// Applies the effect of `e`; havoc consumes `input` when given.
  void apply(const Edge& e, std::int64_t input = 0) {
    const Statement& s = e.label;
    switch (s.kind) {
      case StatementKind::Assign: vars_[s.target] = eval(s.expr); break;
      case StatementKind::ArrayStore: {
        std::int64_t i = eval(s.index);
        std::int64_t v = eval(s.expr);
        cell_ref(s.target, i) = v;
        break;
      }
      case StatementKind::Havoc:
        if (s.index) cell_ref(s.target, eval(s.index)) = input;
        else vars_[s.target] = input;
        break;
      default: break;
    }
  }

  const std::map<std::string, std::int64_t>& vars() const { return vars_; }

 private:
  std::int64_t cell(const std::string& a, std::int64_t i) const {
    const auto& v = arrays_.at(a);
    if (i < 0 || i >= static_cast<std::int64_t>(v.size())) throw std::out_of_range("index out of bounds");
    return v[static_cast<std::size_t>(i)];
  }
  std::int64_t& cell_ref(const std::string& a, std::int64_t i) {
    auto& v = arrays_.at(a);
    if (i < 0 || i >= static_cast<std::int64_t>(v.size())) throw std::out_of_range("index out of bounds");
    return v[static_cast<std::size_t>(i)];
  }

  std::map<std::string, std::int64_t> vars_;
  std::map<std::string, std::vector<std::int64_t>> arrays_;
};

namespace detail {

// Shared driver; with `follow` the run stops at the first divergence or once the
// whole of *follow has been taken.
inline ExecutionResult run(const CFA& c, const InputVector& in, std::size_t step_limit, const Trace* follow) {
  ExecutionResult r;
  Machine m(c);
  LocationId at = c.entry();
  std::size_t next_input = 0;
  try {
    while (true) {
      if (follow && r.trace.size() >= follow->size()) return r;
      auto out = c.outgoing(at);
      if (out.empty()) {
        r.verdict = at == c.error() ? Verdict::AssertionFailure : Verdict::TerminatedSafe;
        return r;
      }
      if (r.trace.size() >= step_limit) {
        r.verdict = Verdict::StepLimit;
        return r;
      }
      const Edge* take = nullptr;
      for (const Edge* e : out) {
        if (m.enabled(*e)) {
          take = e;
          break;
        }
      }
      if (!take) throw std::logic_error("no enabled edge at location " + std::to_string(at));
      if (take->label.kind == StatementKind::Havoc) {
        if (next_input >= in.size()) {
          r.verdict = Verdict::InputExhausted;
          return r;
        }
        m.apply(*take, in[next_input++]);
      } else {
        m.apply(*take);
      }
      r.trace.push_back(take->id);
      if (follow && r.trace.back() != (*follow)[r.trace.size() - 1]) return r;
      at = take->target;
    }
  } catch (const OverflowError&) {
    r.verdict = Verdict::OutOfModel;
  }
  return r;
}

}  // namespace detail

/// Deterministic concrete execution. Havoc edges consume `in` left to right.
inline ExecutionResult execute(const CFA& c, const InputVector& in, std::size_t step_limit) {
  if (step_limit == 0) throw std::invalid_argument("step_limit must be positive");
  return detail::run(c, in, step_limit, nullptr);
}

/// True iff executing on `in` produces a trace with `t` as a prefix.
inline bool replay(const CFA& c, const Trace& t, const InputVector& in) {
  ExecutionResult r = detail::run(c, in, t.size() + 1, &t);
  if (r.trace.size() < t.size()) return false;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (r.trace[i] != t[i]) return false;
  return true;
}

}  // namespace ermc
