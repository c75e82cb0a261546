#include <gtest/gtest.h>

#include "fixture_util.hpp"

using namespace ermc;
using namespace ermc::testing;

TEST(Interp, TrivialSafeTerminates) {
  CFA c = fixture_cfa("trivial_safe.mc");
  ExecutionResult r = execute(c, {}, 1000);
  EXPECT_EQ(r.verdict, Verdict::TerminatedSafe);
  EXPECT_FALSE(r.trace.empty());
}

TEST(Interp, SimpleBugNeedsFive) {
  CFA c = fixture_cfa("simple_bug.mc");
  EXPECT_EQ(execute(c, {5}, 1000).verdict, Verdict::AssertionFailure);
  EXPECT_EQ(execute(c, {4}, 1000).verdict, Verdict::TerminatedSafe);
  EXPECT_EQ(execute(c, {}, 1000).verdict, Verdict::InputExhausted);
}

TEST(Interp, StepLimit) {
  CFA c = cfa_of("void main(){ int i = 0; while (1) { i = i + 1; } }");
  ExecutionResult r = execute(c, {}, 50);
  EXPECT_EQ(r.verdict, Verdict::StepLimit);
  EXPECT_EQ(r.trace.size(), 50u);
  EXPECT_THROW(execute(c, {}, 0), std::invalid_argument);
}

TEST(Interp, DivisionByZeroIsAnAssertion) {
  CFA c = cfa_of("int nondet(); void main(){ int d = nondet(); int q = 10 / d; }");
  EXPECT_EQ(execute(c, {0}, 100).verdict, Verdict::AssertionFailure);
  EXPECT_EQ(execute(c, {2}, 100).verdict, Verdict::TerminatedSafe);
}

TEST(Interp, IndexOutOfBoundsIsAnAssertion) {
  CFA c = cfa_of("int nondet(); void main(){ int a[3]; int i = nondet(); a[i] = 1; }");
  EXPECT_EQ(execute(c, {3}, 100).verdict, Verdict::AssertionFailure);
  EXPECT_EQ(execute(c, {-1}, 100).verdict, Verdict::AssertionFailure);
  EXPECT_EQ(execute(c, {2}, 100).verdict, Verdict::TerminatedSafe);
}

TEST(Interp, OverflowLeavesTheModel) {
  CFA c = cfa_of("int nondet(); void main(){ int x = nondet(); int y = x * x; }");
  EXPECT_EQ(execute(c, {std::int64_t{1} << 40}, 100).verdict, Verdict::OutOfModel);
}

TEST(Interp, ReplayFollowsPrefix) {
  CFA c = fixture_cfa("simple_bug.mc");
  Trace full = execute(c, {5}, 1000).trace;
  Trace prefix(full.begin(), full.begin() + 3);
  EXPECT_TRUE(replay(c, full, {5}));
  EXPECT_TRUE(replay(c, prefix, {5}));
  EXPECT_FALSE(replay(c, full, {4}));
  EXPECT_TRUE(replay(c, {}, {}));
}

TEST(Interp, InlinedCallsAndArrays) {
  CFA c = cfa_of(R"(
int nondet();
int sum(int a[], int n) { int s = 0; for (int i = 0; i < n; i++) s = s + a[i]; return s; }
void main() { int a[4]; a[0] = 3; a[2] = 4; int t = sum(a, 4); assert(t == 7); }
)");
  EXPECT_EQ(execute(c, {}, 1000).verdict, Verdict::TerminatedSafe);
}

TEST(Interp, Fig1HarnessRuns) {
  CFA c = fixture_cfa("fig1.mc", "test_min");
  // large = 0 takes the n = 1 branch
  EXPECT_EQ(execute(c, {0, 7}, 10000).verdict, Verdict::TerminatedSafe);
  // n = 3 with a decreasing vector
  EXPECT_EQ(execute(c, {1, 3, 9, 5, 1}, 10000).verdict, Verdict::TerminatedSafe);
}
