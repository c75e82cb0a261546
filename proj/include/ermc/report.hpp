#pragma once

// Phase two: enumerate first entries into TRUE (safe cones) and FALSE
// (frontier) of an assumption automaton, keeping those with a witness.

#include <algorithm>
#include <future>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ermc/automaton.hpp"
#include "ermc/domains.hpp"
#include "ermc/feasibility.hpp"

namespace ermc {

enum class Component { S, F };

inline const char* component_name(Component c) { return c == Component::S ? "S" : "F"; }

struct ReportOptions {
  bool want_s = true;
  bool want_f = true;
  std::size_t budget = 100000;
  bool opaque_multiplication = false;
  WaitlistOrder order = WaitlistOrder::Bfs;
  FeasibilityOptions feasibility;
  bool concurrent = true;
};

struct ReportedTrace {
  Trace edges;
  std::vector<int> lines;
  std::vector<std::string> statements;
  LocationId end_location = 0;
  InputVector witness;
};

struct ComponentReport {
  std::vector<ReportedTrace> traces;
  /// fully-enumerated, budget-truncated or fully-verified
  std::string status = "fully-enumerated";
  std::size_t skipped_unknown = 0;
  std::size_t pops = 0;
  std::size_t dead_steps = 0;

  std::set<LocationId> end_locations() const {
    std::set<LocationId> s;
    for (const auto& t : traces) s.insert(t.end_location);
    return s;
  }
};

struct ExecutionReport {
  std::optional<ComponentReport> s;
  std::optional<ComponentReport> f;
  std::string source_hash;
  nlohmann::json config = nlohmann::json::object();

  const std::optional<ComponentReport>& get(Component c) const { return c == Component::S ? s : f; }
};

using Phase2Domain = Product<ValueDomain, AutomatonDomain>;

inline ReportedTrace describe(const CFA& c, const Trace& t, InputVector witness) {
  ReportedTrace r;
  r.edges = t;
  r.end_location = c.entry();
  for (const auto& id : t) {
    const Edge& e = c.at(id);
    r.lines.push_back(e.line);
    r.statements.push_back(e.label.text);
    r.end_location = e.target;
  }
  r.witness = std::move(witness);
  return r;
}

inline bool trace_less(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

inline Phase2Domain phase2_domain(const CFA& c, const AssumptionAutomaton& aa, bool opaque) {
  ValueOptions v;
  v.exact = true;
  v.sym.opaque_multiplication = opaque;
  return Phase2Domain(LocationDomain(c), ValueDomain(c, v), AutomatonDomain(aa));
}

/// Enumerates one component; the ART is returned through `f` for inspection.
template <typename F>
ComponentReport generate_component(const CFA& c, const AssumptionAutomaton& aa, Component comp,
                                   const ReportOptions& opt, F&& on_art) {
  ComponentReport out;
  AAKind want = comp == Component::S ? AAKind::True : AAKind::False;
  Art<Phase2Domain> art(c, phase2_domain(c, aa, opt.opaque_multiplication), opt.order);
  FeasibilityOptions feas = opt.feasibility;
  feas.opaque_multiplication = opt.opaque_multiplication;
  auto is_target = [&](const auto& n) { return aa.kind(std::get<2>(n.state)) == want; };
  std::set<Trace> seen;
  if (comp == Component::S && aa.fully_verified()) {
    out.status = "fully-verified";
    on_art(art);
    return out;
  }
  while (true) {
    RunOutcome r = art.run(is_target, opt.budget);
    if (!r.target) {
      out.status = r.budget_exhausted ? "budget-truncated" : "fully-enumerated";
      break;
    }
    Trace t = art.art_path(*r.target);
    if (!seen.insert(t).second) continue;
    FeasibilityVerdict v = check_feasibility(c, t, feas);
    if (v.feasible) out.traces.push_back(describe(c, t, std::move(v.witness)));
    else ++out.skipped_unknown;
  }
  out.pops = art.pops();
  out.dead_steps = art.domain().template part<1>().dead_steps();
  std::sort(out.traces.begin(), out.traces.end(),
            [](const ReportedTrace& a, const ReportedTrace& b) { return trace_less(a.edges, b.edges); });
  on_art(art);
  return out;
}

inline ComponentReport generate_component(const CFA& c, const AssumptionAutomaton& aa, Component comp,
                                          const ReportOptions& opt) {
  return generate_component(c, aa, comp, opt, [](const auto&) {});
}

inline nlohmann::json report_config(const ReportOptions& o) {
  return {{"budget", o.budget},
          {"opaque_multiplication", o.opaque_multiplication},
          {"waitlist", o.order == WaitlistOrder::Bfs ? "bfs" : o.order == WaitlistOrder::Dfs ? "dfs" : "rpo"},
          {"nondet_bound", o.feasibility.domain_bound},
          {"max_nondets", o.feasibility.max_symbols},
          {"node_budget", o.feasibility.node_budget}};
}

/// S and F are independent runs; with `concurrent` they execute in parallel.
inline ExecutionReport generate(const CFA& c, const AssumptionAutomaton& aa, const ReportOptions& opt) {
  ExecutionReport r;
  r.source_hash = aa.source_hash();
  r.config = report_config(opt);
  auto job = [&](Component k) { return generate_component(c, aa, k, opt); };
  auto policy = opt.concurrent ? std::launch::async : std::launch::deferred;
  std::future<ComponentReport> fs, ff;
  if (opt.want_s) fs = std::async(policy, job, Component::S);
  if (opt.want_f) ff = std::async(policy, job, Component::F);
  if (opt.want_s) r.s = fs.get();
  if (opt.want_f) r.f = ff.get();
  return r;
}

inline nlohmann::json trace_json(const ReportedTrace& t) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : t.edges) edges.push_back(e.str());
  return {{"edges", edges},
          {"lines", t.lines},
          {"statements", t.statements},
          {"end_location", t.end_location},
          {"witness", t.witness}};
}

/// Deterministic report document.
inline std::string emit(const ExecutionReport& r) {
  nlohmann::json j;
  j["source_hash"] = r.source_hash;
  j["config"] = r.config;
  nlohmann::json status = nlohmann::json::object(), skipped = nlohmann::json::object(),
                 coverage = nlohmann::json::object(), pops = nlohmann::json::object(),
                 dead = nlohmann::json::object();
  for (Component k : {Component::S, Component::F}) {
    const auto& comp = r.get(k);
    std::string name = component_name(k);
    nlohmann::json arr = nlohmann::json::array();
    if (comp) {
      for (const auto& t : comp->traces) arr.push_back(trace_json(t));
      status[name] = comp->status;
      skipped[name] = comp->skipped_unknown;
      coverage[name] = comp->end_locations();
      pops[name] = comp->pops;
      dead[name] = comp->dead_steps;
    } else {
      status[name] = "not-run";
    }
    j[name] = arr;
  }
  j["status"] = status;
  j["skipped_unknown"] = skipped;
  j["coverage"] = {{"end_locations", coverage}};
  j["pops"] = pops;
  j["dead_steps"] = dead;
  return j.dump(2) + "\n";
}

struct ReportFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline ExecutionReport parse_report(const std::string& text) {
  ExecutionReport r;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    r.source_hash = j.at("source_hash").get<std::string>();
    r.config = j.at("config");
    for (Component k : {Component::S, Component::F}) {
      std::string name = component_name(k);
      std::string st = j.at("status").at(name).get<std::string>();
      if (st == "not-run") continue;
      ComponentReport c;
      c.status = st;
      c.skipped_unknown = j.at("skipped_unknown").at(name).get<std::size_t>();
      if (j.contains("pops") && j["pops"].contains(name)) c.pops = j["pops"][name].get<std::size_t>();
      if (j.contains("dead_steps") && j["dead_steps"].contains(name)) c.dead_steps = j["dead_steps"][name].get<std::size_t>();
      for (const auto& t : j.at(name)) {
        ReportedTrace rt;
        for (const auto& e : t.at("edges")) {
          auto id = EdgeId::from_string(e.get<std::string>());
          if (!id) throw ReportFormatError("malformed edge id " + e.get<std::string>());
          rt.edges.push_back(*id);
        }
        rt.lines = t.at("lines").get<std::vector<int>>();
        rt.statements = t.at("statements").get<std::vector<std::string>>();
        rt.end_location = t.at("end_location").get<LocationId>();
        rt.witness = t.at("witness").get<InputVector>();
        c.traces.push_back(std::move(rt));
      }
      (k == Component::S ? r.s : r.f) = std::move(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ReportFormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

}  // namespace ermc
