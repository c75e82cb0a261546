#pragma once

// Phase one: explore with value (and optionally loop-bound) analysis, confirm
// error paths by feasibility, give up on unconfirmed ones, and summarize the
// final tree as an assumption automaton.

#include <optional>
#include <string>

#include "ermc/automaton.hpp"
#include "ermc/domains.hpp"
#include "ermc/feasibility.hpp"

namespace ermc {

enum class VerifyStatus { Safe, Bug, Unknown };

inline const char* status_name(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Safe: return "SAFE";
    case VerifyStatus::Bug: return "BUG";
    case VerifyStatus::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct VerifyOptions {
  std::optional<int> loop_bound;
  std::size_t budget = 100000;
  bool opaque_multiplication = false;
  WaitlistOrder order = WaitlistOrder::Bfs;
  FeasibilityOptions feasibility;
};

struct VerifyResult {
  VerifyStatus status = VerifyStatus::Unknown;
  Trace counterexample;
  InputVector witness;
  AssumptionAutomaton automaton;
  std::size_t pops = 0;
  std::size_t giveups = 0;
  std::size_t art_nodes = 0;
  bool budget_exhausted = false;
};

using Phase1Plain = Product<ValueDomain>;
using Phase1Bounded = Product<ValueDomain, LoopBoundDomain>;

/// Runs phase one on an ART the caller owns, so tests can inspect it.
template <class D>
VerifyResult run_phase1(Art<D>& art, const VerifyOptions& opt, const std::string& source_hash) {
  const CFA& cfa = art.cfa();
  VerifyResult r;
  FeasibilityOptions feas = opt.feasibility;
  feas.opaque_multiplication = opt.opaque_multiplication;
  auto is_error = [&](const auto& n) { return std::get<0>(n.state) == cfa.error(); };
  while (true) {
    RunOutcome out = art.run(is_error, opt.budget);
    r.budget_exhausted = out.budget_exhausted;
    if (!out.target) break;
    Trace t = art.art_path(*out.target);
    FeasibilityVerdict v = check_feasibility(cfa, t, feas);
    if (v.feasible) {
      r.status = VerifyStatus::Bug;
      r.counterexample = std::move(t);
      r.witness = std::move(v.witness);
      r.pops = art.pops();
      r.art_nodes = art.live_nodes();
      return r;
    }
    // the check edge's source is where the unconfirmed alarm is abandoned
    art.give_up(art.node(*out.target).parent);
    ++r.giveups;
  }
  bool pending = false;
  for (NodeId n = 0; n < static_cast<NodeId>(art.nodes().size()); ++n)
    if (!art.node(n).removed && art.node(n).covered_by == kNoNode && art.pending(n)) pending = true;
  r.status = pending ? VerifyStatus::Unknown : VerifyStatus::Safe;
  r.automaton = build_automaton(art, source_hash);
  r.pops = art.pops();
  r.art_nodes = art.live_nodes();
  return r;
}

inline ValueOptions phase1_value_options(const VerifyOptions& opt) {
  ValueOptions v;
  v.sym.opaque_multiplication = opt.opaque_multiplication;
  return v;
}

/// Calls `f(art, result)` with the phase-one ART of the configured domain.
template <typename F>
decltype(auto) with_phase1(const CFA& cfa, const VerifyOptions& opt, const std::string& source_hash, F&& f) {
  ValueDomain value(cfa, phase1_value_options(opt));
  if (opt.loop_bound) {
    Art<Phase1Bounded> art(cfa, Phase1Bounded(LocationDomain(cfa), value, LoopBoundDomain(cfa, *opt.loop_bound)),
                           opt.order);
    VerifyResult r = run_phase1(art, opt, source_hash);
    return f(art, r);
  }
  Art<Phase1Plain> art(cfa, Phase1Plain(LocationDomain(cfa), value), opt.order);
  VerifyResult r = run_phase1(art, opt, source_hash);
  return f(art, r);
}

inline VerifyResult verify(const CFA& cfa, const VerifyOptions& opt, const std::string& source_hash) {
  return with_phase1(cfa, opt, source_hash, [](const auto&, VerifyResult& r) { return std::move(r); });
}

}  // namespace ermc
