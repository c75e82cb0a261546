#pragma once

// Brute-force reference for tiny programs: enumerate every concrete
// execution with inputs in [-B, B] up to length L, run the assumption
// automaton alongside, and classify boundary traces directly.

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ermc/automaton.hpp"
#include "ermc/interp.hpp"
#include "ermc/report.hpp"

namespace ermc {

struct OracleBlowup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  std::size_t max_length = 40;
  std::int64_t domain_bound = 4;
  std::size_t max_nodes = 5000000;
};

struct OracleSets {
  /// Boundary traces with one witness each.
  std::map<Trace, InputVector> safe_cone;
  std::map<Trace, InputVector> frontier;
  std::set<LocationId> safe_cone_ends;
  std::set<LocationId> frontier_ends;
  std::size_t max_length = 0;
  std::int64_t domain_bound = 0;
  std::size_t nodes = 0;
  /// Pointwise violations of the trace-set properties seen while enumerating.
  std::vector<std::string> property_violations;

  const std::map<Trace, InputVector>& get(Component c) const { return c == Component::S ? safe_cone : frontier; }
  const std::set<LocationId>& ends(Component c) const { return c == Component::S ? safe_cone_ends : frontier_ends; }
};

namespace detail {

class OracleWalk {
 public:
  OracleWalk(const CFA& c, const AssumptionAutomaton& aa, const OracleOptions& o, OracleSets& out)
      : cfa_(c), aa_(aa), opt_(o), out_(out) {}

  void start() {
    AssumptionAutomaton::Run q = aa_.initial();
    // the empty trace is not a boundary trace; a TRUE or FALSE initial state has none
    if (aa_.kind(*q) != AAKind::Normal) return;
    Machine m(cfa_);
    walk(m, cfa_.entry(), q);
  }

 private:
  void walk(const Machine& m, LocationId at, AssumptionAutomaton::Run q) {
    if (trace_.size() >= opt_.max_length) return;
    for (const Edge* e : cfa_.outgoing(at)) {
      if (e->label.kind == StatementKind::Havoc) {
        for (std::int64_t v = -opt_.domain_bound; v <= opt_.domain_bound; ++v) {
          inputs_.push_back(v);
          take(m, *e, q, v);
          inputs_.pop_back();
        }
      } else {
        bool on = false;
        try {
          on = m.enabled(*e);
        } catch (const std::exception&) {
          // arithmetic outside the model ends this execution
        }
        if (on) take(m, *e, q, 0);
      }
    }
  }

  void take(const Machine& m, const Edge& e, AssumptionAutomaton::Run q, std::int64_t input) {
    if (++out_.nodes > opt_.max_nodes)
      throw OracleBlowup("oracle enumeration exceeded " + std::to_string(opt_.max_nodes) + " nodes");
    Machine next = m;
    try {
      next.apply(e, input);
    } catch (const std::exception&) {
      return;
    }
    trace_.push_back(e.id);
    AssumptionAutomaton::Run r = aa_.step(q, e.id);
    if (!r) {
      // DEAD: analyzed and never a safe cone, for every extension
      cross_check(true, false);
    } else if (aa_.kind(*r) == AAKind::True) {
      cross_check(true, true);
      out_.safe_cone.emplace(trace_, inputs_);
      out_.safe_cone_ends.insert(e.target);
    } else if (aa_.kind(*r) == AAKind::False) {
      cross_check(false, false);
      out_.frontier.emplace(trace_, inputs_);
      out_.frontier_ends.insert(e.target);
    } else {
      cross_check(true, false);
      walk(next, e.target, r);
    }
    trace_.pop_back();
  }

  // The prefix is analyzed and not a safe cone (otherwise the walk had stopped).
  void cross_check(bool analyzed, bool cone) {
    Trace prefix(trace_.begin(), trace_.end() - 1);
    bool a = aa_.analyzed(trace_), s = aa_.safe_cone(trace_);
    auto fail = [&](const std::string& what) {
      if (out_.property_violations.size() >= 100) return;
      std::ostringstream os;
      os << what << " at length " << trace_.size();
      out_.property_violations.push_back(os.str());
    };
    if (a != analyzed || s != cone) fail("automaton predicates disagree with the walk");
    if (a && !aa_.analyzed(prefix)) fail("analyzed trace with unanalyzed prefix");
    if (aa_.safe_cone(prefix) && !s) fail("safe cone not closed under extension");
    if (s && !a) fail("safe cone that is not analyzed");
    if ((cone || !analyzed) && !replay(cfa_, trace_, inputs_)) fail("enumerated witness does not replay");
  }

  const CFA& cfa_;
  const AssumptionAutomaton& aa_;
  OracleOptions opt_;
  OracleSets& out_;
  Trace trace_;
  InputVector inputs_;
};

}  // namespace detail

/// Exact bounded SafeCone and Frontier sets. Throws OracleBlowup rather than
/// truncating.
inline OracleSets oracle_sets(const CFA& c, const AssumptionAutomaton& aa, const OracleOptions& o = {}) {
  if (o.domain_bound < 0) throw std::invalid_argument("domain bound must be non-negative");
  OracleSets s;
  s.max_length = o.max_length;
  s.domain_bound = o.domain_bound;
  detail::OracleWalk(c, aa, o, s).start();
  return s;
}

struct CoverageRow {
  Component component;
  LocationId location;
  bool in_report;
  bool in_oracle;
};

struct OracleVerdict {
  bool pass = true;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  std::vector<CoverageRow> coverage;
  std::size_t checked_traces = 0;
};

/// Soundness of every reported trace of length <= L, and end-location
/// completeness of fully-enumerated components.
inline OracleVerdict check_report(const CFA& c, const ExecutionReport& r, const OracleSets& o) {
  OracleVerdict v;
  std::int64_t rb = r.config.value("nondet_bound", std::int64_t{8});
  if (rb > o.domain_bound)
    throw OracleMismatch("report nondet bound " + std::to_string(rb) + " exceeds oracle bound " +
                         std::to_string(o.domain_bound));
  auto fail = [&](std::string m) {
    v.pass = false;
    v.failures.push_back(std::move(m));
  };
  auto render = [&](const Trace& t) {
    std::string s;
    for (const auto& e : t) s += (s.empty() ? "" : " ") + e.str();
    return s;
  };
  for (Component k : {Component::S, Component::F}) {
    const auto& comp = r.get(k);
    if (!comp) continue;
    std::string name = component_name(k);
    for (const auto& t : comp->traces) {
      if (!replay(c, t.edges, t.witness)) fail(name + ": witness does not replay for [" + render(t.edges) + "]");
      if (t.edges.size() > o.max_length) continue;
      ++v.checked_traces;
      if (!o.get(k).count(t.edges)) fail(name + ": trace not in the exact set: [" + render(t.edges) + "]");
    }
    std::set<LocationId> reported = comp->end_locations();
    std::set<LocationId> all = reported;
    all.insert(o.ends(k).begin(), o.ends(k).end());
    for (LocationId l : all) v.coverage.push_back({k, l, reported.count(l) > 0, o.ends(k).count(l) > 0});
    if (comp->status != "fully-enumerated") continue;
    if (rb < o.domain_bound) {
      v.warnings.push_back(name + ": report bound below oracle bound, completeness not checked");
      continue;
    }
    for (LocationId l : o.ends(k))
      if (!reported.count(l)) fail(name + ": end location " + std::to_string(l) + " uncovered");
  }
  if (o.safe_cone.empty() && o.frontier.empty())
    v.warnings.push_back("no boundary trace within length " + std::to_string(o.max_length));
  for (const auto& p : o.property_violations) fail("oracle: " + p);
  return v;
}

}  // namespace ermc
