#include <gtest/gtest.h>

#include "fixture_util.hpp"

using namespace ermc;
using namespace ermc::testing;

namespace {

Trace error_trace(const CFA& c, const InputVector& in) {
  ExecutionResult r = execute(c, in, 10000);
  EXPECT_EQ(r.verdict, Verdict::AssertionFailure);
  return r.trace;
}

}  // namespace

TEST(Feasibility, SimpleBugWitness) {
  CFA c = fixture_cfa("simple_bug.mc");
  Trace t = error_trace(c, {5});
  FeasibilityVerdict v = check_feasibility(c, t);
  ASSERT_TRUE(v.feasible);
  EXPECT_EQ(v.witness, (InputVector{5}));
  EXPECT_TRUE(replay(c, t, v.witness));
}

TEST(Feasibility, PathCondition) {
  CFA c = fixture_cfa("simple_bug.mc");
  PathCondition pc = path_condition(c, error_trace(c, {5}));
  EXPECT_EQ(pc.symbols, 1u);
  EXPECT_FALSE(pc.unsat);
  EXPECT_FALSE(pc.opaque);
  EXPECT_FALSE(pc.constraints.empty());
}

TEST(Feasibility, ContradictionIsUnknownNotInfeasible) {
  CFA c = fixture_cfa("contradiction.mc");
  Trace t;
  LocationId at = c.entry();
  // follow x > 5 then x < 3 syntactically
  while (at != c.error()) {
    const Edge* pick = nullptr;
    for (const Edge* e : c.outgoing(at))
      if (e->label.text == "assume(x > 5);" || e->label.text == "assume(x < 3);" ||
          e->label.kind == StatementKind::Havoc || e->target == c.error())
        pick = e;
    if (!pick) pick = c.outgoing(at).front();
    t.push_back(pick->id);
    at = pick->target;
  }
  FeasibilityVerdict v = check_feasibility(c, t);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.reason, UnknownReason::DomainExhausted);
}

TEST(Feasibility, OpaqueProductIsUnknown) {
  CFA c = cfa_of("int nondet(); void main(){ int x = nondet(); int y = nondet(); if (x * y == 6) { assert(0); } }");
  FeasibilityOptions o;
  Trace t = error_trace(c, {2, 3});
  EXPECT_TRUE(check_feasibility(c, t, o).feasible);
  o.opaque_multiplication = true;
  FeasibilityVerdict v = check_feasibility(c, t, o);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.reason, UnknownReason::NonlinearOpaque);
}

TEST(Feasibility, BoundsAndBudgets) {
  CFA c = cfa_of("int nondet(); void main(){ int x = nondet(); if (x == 100) { assert(0); } }");
  Trace t = error_trace(c, {100});
  FeasibilityOptions o;
  // inputs are drawn from [-B, B]
  EXPECT_EQ(check_feasibility(c, t, o).reason, UnknownReason::DomainExhausted);
  o.domain_bound = 100;
  FeasibilityVerdict pinned = check_feasibility(c, t, o);
  EXPECT_TRUE(pinned.feasible);
  EXPECT_LT(pinned.nodes, 10u);  // narrowing pins x without scanning the range
  o = {};
  CFA d = cfa_of("int nondet(); void main(){ int x = nondet(); if (x * x == 100) { assert(0); } }");
  Trace u = error_trace(d, {10});
  EXPECT_EQ(check_feasibility(d, u, o).reason, UnknownReason::DomainExhausted);
  o.domain_bound = 10;
  EXPECT_TRUE(check_feasibility(d, u, o).feasible);
  o.max_symbols = 0;
  EXPECT_EQ(check_feasibility(d, u, o).reason, UnknownReason::Budget);
  o = {};
  o.domain_bound = 10;
  o.node_budget = 3;
  EXPECT_EQ(check_feasibility(d, u, o).reason, UnknownReason::Budget);
  o.domain_bound = -1;
  EXPECT_THROW(check_feasibility(d, u, o), std::invalid_argument);
}

TEST(Feasibility, WitnessStableAsBoundGrows) {
  CFA c = cfa_of("int nondet(); void main(){ int x = nondet(); int y = nondet(); if (x + y == 3 && x > y) { assert(0); } }");
  Trace t = error_trace(c, {2, 1});
  InputVector first;
  for (std::int64_t b : {2, 4, 8, 16}) {
    FeasibilityOptions o;
    o.domain_bound = b;
    FeasibilityVerdict v = check_feasibility(c, t, o);
    ASSERT_TRUE(v.feasible);
    if (first.empty()) first = v.witness;
    EXPECT_EQ(v.witness, first);
  }
}

TEST(Feasibility, NotAPath) {
  CFA c = fixture_cfa("simple_bug.mc");
  Trace t = error_trace(c, {5});
  std::swap(t[0], t[1]);
  EXPECT_THROW(check_feasibility(c, t), std::invalid_argument);
}

TEST(Feasibility, RandomWalkWitnessesReplay) {
  std::mt19937 rng(3);
  std::size_t feasible = 0;
  for (const char* f : {"simple_bug.mc", "contradiction.mc", "fig2_scaled.mc"}) {
    CFA c = fixture_cfa(f);
    for (int i = 0; i < 300; ++i) {
      Trace t = random_walk(c, rng, 30);
      FeasibilityVerdict v = check_feasibility(c, t);
      if (!v.feasible) continue;
      ++feasible;
      EXPECT_TRUE(replay(c, t, v.witness));
    }
  }
  EXPECT_GT(feasible, 0u);
}
