#include <gtest/gtest.h>

#include "fixture_util.hpp"

using namespace ermc;
using namespace ermc::testing;

namespace {

struct Pipeline {
  CFA cfa;
  VerifyResult phase1;
  ExecutionReport report;
};

Pipeline pipeline(const std::string& file, const std::string& entry, std::optional<int> bound, bool opaque,
        std::int64_t nondet_bound = 8) {
  Pipeline r{fixture_cfa(file, entry), {}, {}};
  VerifyOptions v;
  v.loop_bound = bound;
  v.opaque_multiplication = opaque;
  r.phase1 = verify(r.cfa, v, source_hash(read_fixture(file)));
  ReportOptions o;
  o.opaque_multiplication = opaque;
  o.feasibility.domain_bound = nondet_bound;
  r.report = generate(r.cfa, r.phase1.automaton, o);
  return r;
}

std::string last_statement(const ReportedTrace& t) { return t.statements.back(); }

}  // namespace

TEST(Verify, Verdicts) {
  CFA bug = fixture_cfa("simple_bug.mc");
  VerifyResult r = verify(bug, {}, "h");
  ASSERT_EQ(r.status, VerifyStatus::Bug);
  EXPECT_TRUE(replay(bug, r.counterexample, r.witness));
  EXPECT_EQ(bug.at(r.counterexample.back()).target, bug.error());
  EXPECT_EQ(verify(fixture_cfa("trivial_safe.mc"), {}, "h").status, VerifyStatus::Safe);
  VerifyResult u = verify(fixture_cfa("contradiction.mc"), {}, "h");
  EXPECT_EQ(u.status, VerifyStatus::Unknown);
  EXPECT_EQ(u.giveups, 1u);
}

TEST(Verify, BudgetExhaustionIsUnknown) {
  CFA c = cfa_of("void main(){ int i = 0; while (i < 100000) { i = i + 1; } assert(i == 100000); }");
  VerifyOptions o;
  o.budget = 50;
  VerifyResult r = verify(c, o, "h");
  EXPECT_EQ(r.status, VerifyStatus::Unknown);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_FALSE(r.automaton.fully_verified());
}

TEST(Report, Fig1) {
  Pipeline r = pipeline("fig1.mc", "test_min", 3, false);
  ASSERT_TRUE(r.report.s && r.report.f);
  const auto& s = r.report.s->traces;
  const auto& f = r.report.f->traces;
  ASSERT_FALSE(s.empty());
  ASSERT_FALSE(f.empty());
  // the small branch is a safe cone entered at its branch edge
  EXPECT_TRUE(std::any_of(s.begin(), s.end(), [](const auto& t) { return last_statement(t) == "assume(!large);"; }));
  // a frontier trace ends on the fifth evaluation of init_vector's loop head
  bool fifth = false;
  for (const auto& t : f) {
    if (last_statement(t) != "assume(i < n@1);") continue;
    LocationId head = r.cfa.at(t.edges.back()).source;
    int evals = 0;
    for (const auto& e : t.edges) evals += r.cfa.at(e).source == head;
    fifth = fifth || evals == 5;
  }
  EXPECT_TRUE(fifth);
}

TEST(Report, Fig2) {
  Pipeline r = pipeline("fig2_scaled.mc", "main", std::nullopt, true);
  ASSERT_EQ(r.report.s->traces.size(), 1u);
  EXPECT_EQ(r.report.s->traces[0].statements, (std::vector<std::string>{"int p = nondet();", "assume(p);"}));
  ASSERT_EQ(r.report.f->traces.size(), 1u);
  EXPECT_EQ(last_statement(r.report.f->traces[0]), "int r = x * y;");
}

TEST(Report, BoundaryDefinitions) {
  for (Pipeline r : {pipeline("fig1.mc", "test_min", 3, false), pipeline("fig2_scaled.mc", "main", std::nullopt, true),
                pipeline("contradiction.mc", "main", std::nullopt, false)}) {
    const auto& aa = r.phase1.automaton;
    for (const auto& t : r.report.s->traces) {
      Trace p(t.edges.begin(), t.edges.end() - 1);
      EXPECT_TRUE(aa.safe_cone(t.edges));
      EXPECT_FALSE(aa.safe_cone(p));
      EXPECT_TRUE(replay(r.cfa, t.edges, t.witness));
    }
    for (const auto& t : r.report.f->traces) {
      Trace p(t.edges.begin(), t.edges.end() - 1);
      EXPECT_FALSE(aa.analyzed(t.edges));
      EXPECT_TRUE(aa.analyzed(p));
      EXPECT_TRUE(replay(r.cfa, t.edges, t.witness));
    }
  }
}

TEST(Report, FullyVerified) {
  Pipeline r = pipeline("trivial_safe.mc", "main", std::nullopt, false);
  EXPECT_EQ(r.report.s->status, "fully-verified");
  EXPECT_TRUE(r.report.s->traces.empty());
  EXPECT_TRUE(r.report.f->traces.empty());
  EXPECT_EQ(r.report.f->status, "fully-enumerated");
}

TEST(Report, EmitIsDeterministicAndParses) {
  Pipeline a = pipeline("fig1.mc", "test_min", 3, false);
  Pipeline b = pipeline("fig1.mc", "test_min", 3, false);
  std::string text = emit(a.report);
  EXPECT_EQ(text, emit(b.report));
  ExecutionReport back = parse_report(text);
  EXPECT_EQ(emit(back), text);
  EXPECT_THROW(parse_report("{}"), ReportFormatError);
  EXPECT_THROW(parse_report("not json"), ReportFormatError);
}

TEST(Report, SingleComponentAndSerial) {
  Pipeline r = pipeline("fig2_scaled.mc", "main", std::nullopt, true);
  ReportOptions o;
  o.opaque_multiplication = true;
  o.want_f = false;
  o.concurrent = false;
  ExecutionReport only_s = generate(r.cfa, r.phase1.automaton, o);
  EXPECT_TRUE(only_s.s);
  EXPECT_FALSE(only_s.f);
  EXPECT_NE(emit(only_s).find("\"not-run\""), std::string::npos);
  EXPECT_EQ(parse_report(emit(only_s)).f.has_value(), false);
}

TEST(Report, BudgetTruncation) {
  Pipeline r = pipeline("fig1.mc", "test_min", 3, false);
  ReportOptions o;
  o.budget = 5;
  ExecutionReport t = generate(r.cfa, r.phase1.automaton, o);
  EXPECT_EQ(t.s->status, "budget-truncated");
  EXPECT_EQ(t.f->status, "budget-truncated");
}

TEST(Oracle, Fig1Passes) {
  Pipeline r = pipeline("fig1.mc", "test_min", 3, false, 4);
  OracleSets o = oracle_sets(r.cfa, r.phase1.automaton);
  EXPECT_TRUE(o.property_violations.empty());
  OracleVerdict v = check_report(r.cfa, r.report, o);
  EXPECT_TRUE(v.pass) << (v.failures.empty() ? "" : v.failures[0]);
  EXPECT_GT(v.checked_traces, 0u);
  // the n = 1 branch appears as a boundary safe-cone trace
  bool small = false;
  for (const auto& [t, w] : o.safe_cone) small = small || r.cfa.at(t.back()).label.text == "assume(!large);";
  EXPECT_TRUE(small);
}

TEST(Oracle, FabricatedTraceFails) {
  Pipeline c = pipeline("contradiction.mc", "main", std::nullopt, false, 4);
  OracleSets o = oracle_sets(c.cfa, c.phase1.automaton);
  ExecutionReport forged = c.report;
  ReportedTrace bogus = forged.s->traces.at(0);
  bogus.edges.push_back(bogus.edges.back());
  forged.f->traces.push_back(bogus);
  OracleVerdict v = check_report(c.cfa, forged, o);
  EXPECT_FALSE(v.pass);
  ASSERT_FALSE(v.failures.empty());
  EXPECT_NE(v.failures[0].find(bogus.edges.back().str()), std::string::npos);
}

TEST(Oracle, InfeasibleFrontierExcluded) {
  Pipeline c = pipeline("contradiction.mc", "main", std::nullopt, false, 4);
  OracleSets o = oracle_sets(c.cfa, c.phase1.automaton);
  EXPECT_TRUE(o.frontier.empty());
  EXPECT_TRUE(c.report.f->traces.empty());
}

TEST(Oracle, FullyVerifiedHasNoFrontier) {
  Pipeline r = pipeline("trivial_safe.mc", "main", std::nullopt, false, 4);
  for (std::size_t L : {1u, 5u, 40u}) {
    OracleOptions oo;
    oo.max_length = L;
    EXPECT_TRUE(oracle_sets(r.cfa, r.phase1.automaton, oo).frontier.empty());
  }
}

TEST(Oracle, EmptyReportEmptySetsPass) {
  Pipeline r = pipeline("trivial_safe.mc", "main", std::nullopt, false, 4);
  ExecutionReport empty;
  empty.config = {{"nondet_bound", 4}};
  OracleVerdict v = check_report(r.cfa, empty, oracle_sets(r.cfa, r.phase1.automaton));
  EXPECT_TRUE(v.pass);
  EXPECT_TRUE(v.coverage.empty());
}

TEST(Oracle, MissingEndLocationIsUncovered) {
  Pipeline r = pipeline("fig1.mc", "test_min", 3, false, 4);
  OracleSets o = oracle_sets(r.cfa, r.phase1.automaton);
  ExecutionReport dropped = r.report;
  ASSERT_EQ(dropped.s->status, "fully-enumerated");
  LocationId gone = dropped.s->traces.front().end_location;
  std::erase_if(dropped.s->traces, [&](const ReportedTrace& t) { return t.end_location == gone; });
  OracleVerdict v = check_report(r.cfa, dropped, o);
  EXPECT_FALSE(v.pass);
  bool flagged = false;
  for (const auto& row : v.coverage) flagged = flagged || (row.location == gone && row.in_oracle && !row.in_report);
  EXPECT_TRUE(flagged);
}

TEST(Oracle, ParameterMismatchAndBlowup) {
  Pipeline r = pipeline("fig1.mc", "test_min", 3, false, 8);
  EXPECT_THROW(check_report(r.cfa, r.report, oracle_sets(r.cfa, r.phase1.automaton)), OracleMismatch);
  OracleOptions tiny;
  tiny.max_nodes = 100;
  EXPECT_THROW(oracle_sets(r.cfa, r.phase1.automaton, tiny), OracleBlowup);
}
