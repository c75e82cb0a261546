// ermc: verify, report, oracle-check and show.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ermc/ermc.hpp"

using namespace ermc;

namespace {

enum Exit {
  kSafe = 0,
  kBug = 1,
  kParse = 2,
  kIo = 3,
  kHash = 4,
  kOracleFail = 5,
  kBlowup = 6,
  kUnknown = 10,
};

// rough exploration speed used to turn --wall-limit into a pop budget
constexpr std::size_t kPopsPerSecond = 100000;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HashError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path);
}

std::string sibling(const std::string& input, const std::string& ext) {
  std::filesystem::path p(input);
  p.replace_extension(ext);
  return p.string();
}

struct Common {
  std::string file;
  std::string entry = "main";
  int array_capacity = 8;
  std::size_t budget = 100000;
  double wall_limit = 0;
  bool opaque = false;
  std::string waitlist = "bfs";
  std::int64_t nondet_bound = 8;
  std::size_t max_nondets = 32;

  WaitlistOrder order() const {
    if (waitlist == "dfs") return WaitlistOrder::Dfs;
    if (waitlist == "rpo") return WaitlistOrder::Rpo;
    return WaitlistOrder::Bfs;
  }
  std::size_t pop_budget() const {
    if (wall_limit <= 0) return budget;
    return std::min(budget, static_cast<std::size_t>(wall_limit * kPopsPerSecond));
  }
  FeasibilityOptions feasibility() const {
    FeasibilityOptions f;
    f.domain_bound = nondet_bound;
    f.max_symbols = max_nondets;
    f.opaque_multiplication = opaque;
    return f;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("file", c.file, "MiniC source")->required();
  cmd->add_option("--entry", c.entry, "entry function");
  cmd->add_option("--array-capacity", c.array_capacity, "capacity of arrays with non-constant size");
  cmd->add_option("--budget", c.budget, "waitlist pop budget");
  cmd->add_option("--wall-limit", c.wall_limit, "approximate seconds, mapped to a pop budget");
  cmd->add_flag("--opaque-multiplication", c.opaque, "treat products of non-literals as unknown");
  cmd->add_option("--waitlist", c.waitlist, "bfs, dfs or rpo")->check(CLI::IsMember({"bfs", "dfs", "rpo"}));
  cmd->add_option("--nondet-bound", c.nondet_bound, "feasibility input bound B");
  cmd->add_option("--max-nondets", c.max_nondets, "feasibility symbol limit M");
}

struct Loaded {
  std::string source;
  CFA cfa;
};

Loaded load(const Common& c) {
  Loaded l;
  l.source = read_file(c.file);
  CfaOptions o;
  o.entry = c.entry;
  o.array_capacity = c.array_capacity;
  l.cfa = build_cfa(parse(l.source), o);
  return l;
}

AssumptionAutomaton load_automaton(const std::string& path, const Loaded& l, bool allow_mismatch) {
  AssumptionAutomaton aa = AssumptionAutomaton::parse(read_file(path));
  if (!allow_mismatch) {
    if (aa.source_hash() != source_hash(l.source))
      throw HashError("automaton was built from a different source (hash " + aa.source_hash() + ")");
    try {
      aa.validate_against(l.cfa);
    } catch (const AutomatonFormatError& e) {
      throw HashError(e.what());
    }
  }
  return aa;
}

std::string render_trace(const CFA& c, const Trace& t) {
  std::ostringstream os;
  for (const auto& id : t) {
    const Edge& e = c.at(id);
    os << "  line " << e.line << ": " << e.label.text << "\n";
  }
  return os.str();
}

std::string render_inputs(const InputVector& in) {
  std::string s;
  for (auto v : in) s += (s.empty() ? "" : " ") + std::to_string(v);
  return "[" + s + "]";
}

int cmd_verify(const Common& c, std::optional<int> loop_bound, std::string emit) {
  Loaded l = load(c);
  VerifyOptions o;
  o.loop_bound = loop_bound;
  o.budget = c.pop_budget();
  o.opaque_multiplication = c.opaque;
  o.order = c.order();
  o.feasibility = c.feasibility();
  VerifyResult r = verify(l.cfa, o, source_hash(l.source));
  std::cout << status_name(r.status) << "\n";
  std::cout << "pops: " << r.pops << ", give-ups: " << r.giveups << ", nodes: " << r.art_nodes << "\n";
  if (r.status == VerifyStatus::Bug) {
    std::cout << "counterexample:\n" << render_trace(l.cfa, r.counterexample);
    std::cout << "inputs: " << render_inputs(r.witness) << "\n";
    return kBug;
  }
  if (emit.empty()) emit = sibling(c.file, ".aa.json");
  write_file(emit, r.automaton.serialize());
  std::cout << "automaton: " << emit << " (" << r.automaton.states().size() << " states)\n";
  return r.status == VerifyStatus::Safe ? kSafe : kUnknown;
}

ReportOptions report_options(const Common& c, const std::string& component) {
  ReportOptions o;
  o.want_s = component != "F";
  o.want_f = component != "S";
  o.budget = c.pop_budget();
  o.opaque_multiplication = c.opaque;
  o.order = c.order();
  o.feasibility = c.feasibility();
  return o;
}

int cmd_report(const Common& c, const std::string& automaton, const std::string& component, std::string out,
               bool allow_mismatch) {
  Loaded l = load(c);
  AssumptionAutomaton aa = load_automaton(automaton, l, allow_mismatch);
  ExecutionReport r = generate(l.cfa, aa, report_options(c, component));
  if (out.empty()) out = sibling(c.file, ".er.json");
  write_file(out, emit(r));
  for (Component k : {Component::S, Component::F}) {
    if (!r.get(k)) continue;
    const auto& comp = *r.get(k);
    std::cout << component_name(k) << ": " << comp.traces.size() << " traces (" << comp.status << ", "
              << comp.skipped_unknown << " without witness)\n";
  }
  std::cout << "report: " << out << "\n";
  return 0;
}

int cmd_oracle_check(const Common& c, const std::string& automaton, const std::string& report, std::size_t length,
                     std::int64_t bound, bool allow_mismatch) {
  Loaded l = load(c);
  AssumptionAutomaton aa = load_automaton(automaton, l, allow_mismatch);
  ExecutionReport r = parse_report(read_file(report));
  OracleOptions o;
  o.max_length = length;
  o.domain_bound = bound;
  OracleSets sets = oracle_sets(l.cfa, aa, o);
  OracleVerdict v = check_report(l.cfa, r, sets);
  std::cout << "oracle: " << sets.safe_cone.size() << " safe-cone and " << sets.frontier.size()
            << " frontier traces (L=" << length << ", B=" << bound << ", " << sets.nodes << " nodes)\n";
  std::cout << "end-location coverage:\n";
  for (const auto& row : v.coverage)
    std::cout << "  " << component_name(row.component) << " location " << row.location << ": "
              << (row.in_report ? "reported" : "-") << " / " << (row.in_oracle ? "exact" : "-") << " -> "
              << (row.in_oracle && !row.in_report ? "uncovered" : "covered") << "\n";
  for (const auto& w : v.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& f : v.failures) std::cout << "FAIL " << f << "\n";
  std::cout << (v.pass ? "PASS" : "FAIL") << " (" << v.checked_traces << " reported traces checked)\n";
  return v.pass ? 0 : kOracleFail;
}

int cmd_show(const std::string& report, const std::string& source) {
  ExecutionReport r = parse_report(read_file(report));
  std::vector<std::string> lines;
  if (!source.empty()) {
    std::istringstream in(read_file(source));
    for (std::string s; std::getline(in, s);) lines.push_back(s);
  }
  auto count = [&](Component k) { return r.get(k) ? r.get(k)->traces.size() : 0; };
  std::cout << "S: " << count(Component::S) << " traces, F: " << count(Component::F) << " traces\n";
  for (Component k : {Component::S, Component::F}) {
    if (!r.get(k)) continue;
    const char* kind = k == Component::S ? "safe cone" : "frontier";
    std::map<LocationId, std::vector<const ReportedTrace*>> groups;
    for (const auto& t : r.get(k)->traces) groups[t.end_location].push_back(&t);
    for (const auto& [loc, ts] : groups) {
      std::cout << "\n" << component_name(k) << " ending at location " << loc << "\n";
      for (const ReportedTrace* t : ts) {
        std::cout << "- " << kind << ", " << t->edges.size() << " edges, inputs " << render_inputs(t->witness) << "\n";
        for (std::size_t i = 0; i < t->lines.size(); ++i) {
          int ln = t->lines[i];
          std::cout << "  " << std::setw(4) << ln << "  ";
          if (ln >= 1 && static_cast<std::size_t>(ln) <= lines.size())
            std::cout << std::left << std::setw(36) << t->statements[i] << std::right << "| " << lines[ln - 1];
          else
            std::cout << t->statements[i];
          std::cout << "\n";
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution reports for incomplete verification runs"};
  app.require_subcommand(1);

  Common vc;
  std::optional<int> loop_bound;
  std::string emit_path;
  auto* verify_cmd = app.add_subcommand("verify", "phase one: verify and emit an assumption automaton");
  add_common(verify_cmd, vc);
  verify_cmd->add_option("--loop-bound", loop_bound, "unroll each loop at most K times");
  verify_cmd->add_option("--emit-automaton", emit_path, "automaton output path");

  Common rc;
  std::string r_automaton, r_component = "both", r_out;
  bool r_allow = false;
  auto* report_cmd = app.add_subcommand("report", "phase two: execution report from an automaton");
  add_common(report_cmd, rc);
  report_cmd->add_option("--automaton", r_automaton, "assumption automaton")->required();
  report_cmd->add_option("--component", r_component, "S, F or both")->check(CLI::IsMember({"S", "F", "both"}));
  report_cmd->add_option("--out", r_out, "report output path");
  report_cmd->add_flag("--allow-hash-mismatch", r_allow, "accept an automaton built from another source");

  Common oc;
  oc.nondet_bound = 4;
  std::string o_automaton, o_report;
  std::size_t o_length = 40;
  bool o_allow = false;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "check a report against brute-force enumeration");
  add_common(oracle_cmd, oc);
  oracle_cmd->add_option("--automaton", o_automaton, "assumption automaton")->required();
  oracle_cmd->add_option("--report", o_report, "execution report")->required();
  oracle_cmd->add_option("-L,--max-length", o_length, "longest enumerated trace");
  oracle_cmd->add_flag("--allow-hash-mismatch", o_allow, "accept an automaton built from another source");

  std::string s_report, s_source;
  auto* show_cmd = app.add_subcommand("show", "print a report with source lines");
  show_cmd->add_option("report", s_report, "execution report")->required();
  show_cmd->add_option("--source", s_source, "source file for line text");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*verify_cmd) return cmd_verify(vc, loop_bound, emit_path);
    if (*report_cmd) return cmd_report(rc, r_automaton, r_component, r_out, r_allow);
    if (*oracle_cmd) return cmd_oracle_check(oc, o_automaton, o_report, o_length, oc.nondet_bound, o_allow);
    if (*show_cmd) return cmd_show(s_report, s_source);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FrontendError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const HashError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kHash;
  } catch (const AutomatonFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const ReportFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const OracleBlowup& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBlowup;
  } catch (const OracleMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOracleFail;
  }
  return 0;
}
