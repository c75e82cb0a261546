// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "ermc/ermc.hpp"
#include "gen_program.hpp"
#include "unit/fixture_util.hpp"

using namespace ermc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = ERMC_FIXTURES;
const std::string kCli = ERMC_CLI;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& f) {
  Outcome o;
  auto t0 = Clock::now();
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

int cli(const std::string& args, const fs::path& log) {
  std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

struct Fixture {
  std::string file;
  std::string entry;
  std::optional<int> loop_bound;
  bool opaque;

  std::string flags() const {
    std::string f = " --entry " + entry;
    if (loop_bound) f += " --loop-bound " + std::to_string(*loop_bound);
    if (opaque) f += " --opaque-multiplication";
    return f;
  }
  std::string report_flags() const { return " --entry " + entry + (opaque ? " --opaque-multiplication" : ""); }
  CFA cfa() const {
    CfaOptions o;
    o.entry = entry;
    return build_cfa(parse(read(kFixtures / file)), o);
  }
  VerifyOptions options() const {
    VerifyOptions o;
    o.loop_bound = loop_bound;
    o.opaque_multiplication = opaque;
    return o;
  }
};

const std::vector<Fixture> kFixtureSet = {
    {"fig1.mc", "test_min", 3, false},
    {"fig2_scaled.mc", "main", std::nullopt, true},
    {"contradiction.mc", "main", std::nullopt, false},
    {"trivial_safe.mc", "main", std::nullopt, false},
    {"simple_bug.mc", "main", std::nullopt, false},
};

int loop_head_evaluations(const CFA& c, const Trace& t) {
  LocationId head = c.at(t.back()).source;
  int n = 0;
  for (const auto& e : t) n += c.at(e).source == head;
  return n;
}

Outcome example1(const fs::path& dir) {
  const Fixture& f = kFixtureSet[0];
  fs::copy_file(kFixtures / f.file, dir / f.file, fs::copy_options::overwrite_existing);
  int v = cli("verify " + q(dir / f.file) + f.flags() + " --budget 100000", dir / "v.log");
  if (v != 10) return {false, "verify exit " + std::to_string(v) + ", expected 10 (UNKNOWN)"};
  int r = cli("report " + q(dir / f.file) + f.report_flags() + " --automaton " + q(dir / "fig1.aa.json") +
                  " --component both",
              dir / "r.log");
  if (r != 0) return {false, "report exit " + std::to_string(r)};
  ExecutionReport rep = parse_report(read(dir / "fig1.er.json"));
  CFA c = f.cfa();
  bool s_n1 = false, s_branch = false, f_fifth = false;
  std::string s_ends;
  for (const auto& t : rep.s->traces) {
    s_n1 = s_n1 || t.statements.back() == "n = 1;";
    s_branch = s_branch || t.statements.back() == "assume(!large);";
    s_ends += (s_ends.empty() ? "" : ", ") + t.statements.back();
  }
  for (const auto& t : rep.f->traces)
    if (t.statements.back() == "assume(i < n@1);" && loop_head_evaluations(c, t.edges) == 5) f_fifth = true;
  std::ostringstream d;
  d << "verify UNKNOWN; S=" << rep.s->traces.size() << " F=" << rep.f->traces.size()
    << "; S trace ending in `n = 1`: " << (s_n1 ? "yes" : "no") << " (S final statements: " << s_ends
    << "; n = 1 branch entered at its branch edge: " << (s_branch ? "yes" : "no") << ")"
    << "; F trace ending at 5th init_vector loop-head assume: " << (f_fifth ? "yes" : "no");
  return {s_n1 && f_fifth, d.str()};
}

Outcome example2(const fs::path& dir) {
  const Fixture& f = kFixtureSet[1];
  fs::copy_file(kFixtures / f.file, dir / f.file, fs::copy_options::overwrite_existing);
  int v = cli("verify " + q(dir / f.file) + f.flags(), dir / "v.log");
  if (v != 10) return {false, "verify exit " + std::to_string(v) + ", expected 10 (UNKNOWN)"};
  int r = cli("report " + q(dir / f.file) + f.report_flags() + " --automaton " + q(dir / "fig2_scaled.aa.json"),
              dir / "r.log");
  if (r != 0) return {false, "report exit " + std::to_string(r)};
  ExecutionReport rep = parse_report(read(dir / "fig2_scaled.er.json"));
  bool then_branch = false, mul = false;
  for (const auto& t : rep.s->traces)
    for (const auto& s : t.statements) then_branch = then_branch || s == "assume(p);";
  for (const auto& t : rep.f->traces) mul = mul || t.statements.back().find("x * y") != std::string::npos;
  std::ostringstream d;
  d << "verify UNKNOWN; S enters then-branch: " << (then_branch ? "yes" : "no")
    << "; F ends at `int r = x * y;`: " << (mul ? "yes" : "no");
  return {then_branch && mul, d.str()};
}

struct Generated {
  fs::path file;
  std::string source;
};

std::vector<Generated> corpus(const fs::path& dir, int n) {
  std::vector<Generated> out;
  for (int i = 0; i < n; ++i) {
    testing::ProgramGenerator g(static_cast<unsigned>(1000 + i));
    Generated p{dir / ("g" + std::to_string(i) + ".mc"), g.generate()};
    write(p.file, p.source);
    out.push_back(std::move(p));
  }
  return out;
}

const std::vector<std::size_t> kBudgets = {20, 200, 2000};

Outcome oracle_suite(const fs::path& dir) {
  auto progs = corpus(dir, 24);
  int runs = 0, checked = 0, membership = 0, completeness = 0, other = 0, unknown = 0, skipped_bug = 0;
  for (const auto& p : progs) {
    for (std::size_t b : kBudgets) {
      std::string stem = p.file.stem().string() + "." + std::to_string(b);
      fs::path aa = dir / (stem + ".aa.json"), er = dir / (stem + ".er.json"), log = dir / (stem + ".log");
      int v = cli("verify " + q(p.file) + " --budget " + std::to_string(b) + " --emit-automaton " + q(aa), log);
      if (v == 1) {
        ++skipped_bug;
        continue;
      }
      if (v != 0 && v != 10) {
        ++other;
        continue;
      }
      unknown += v == 10;
      if (cli("report " + q(p.file) + " --automaton " + q(aa) + " --nondet-bound 4 --out " + q(er), log) != 0) {
        ++other;
        continue;
      }
      ++runs;
      int rc = cli("oracle-check " + q(p.file) + " --automaton " + q(aa) + " --report " + q(er) + " -L 40 --nondet-bound 4",
                   log);
      std::istringstream out(read(log));
      for (std::string line; std::getline(out, line);) {
        if (line.rfind("PASS (", 0) == 0 || line.rfind("FAIL (", 0) == 0) {
          checked += std::stoi(line.substr(6));
        } else if (line.rfind("FAIL ", 0) == 0) {
          if (line.find("not in the exact set") != std::string::npos) ++membership;
          else if (line.find("uncovered") != std::string::npos) ++completeness;
          else ++other;
        }
      }
      if (rc != 0 && rc != 5) ++other;
    }
  }
  std::ostringstream d;
  d << progs.size() << " programs x " << kBudgets.size() << " budgets: " << runs << " oracle-checks (" << unknown
    << " UNKNOWN, " << skipped_bug << " BUG runs without automaton), " << checked << " reported traces checked, "
    << membership << " membership violations, " << completeness << " completeness violations, " << other
    << " other errors";
  return {runs >= 20 && membership == 0 && completeness == 0 && other == 0, d.str()};
}

// Phase one driven one pop at a time so Property 5 can be checked after every update.
template <class D>
VerifyResult phase1_checked(Art<D>& art, const VerifyOptions& opt, std::size_t& checks) {
  const CFA& c = art.cfa();
  auto is_error = [&](const auto& n) { return std::get<0>(n.state) == c.error(); };
  FeasibilityOptions feas = opt.feasibility;
  feas.opaque_multiplication = opt.opaque_multiplication;
  VerifyResult r;
  while (true) {
    RunOutcome out = art.run(is_error, std::min(opt.budget, art.pops() + 1));
    art.check_property5();
    ++checks;
    if (out.target) {
      FeasibilityVerdict v = check_feasibility(c, art.art_path(*out.target), feas);
      if (v.feasible) {
        r.status = VerifyStatus::Bug;
        return r;
      }
      art.give_up(art.node(*out.target).parent);
      art.check_property5();
      ++checks;
      continue;
    }
    if (!out.budget_exhausted || art.pops() >= opt.budget) break;
  }
  r.automaton = build_automaton(art, "h");
  return r;
}

Trace concrete_prefix(const CFA& c, std::mt19937& rng) {
  InputVector in;
  for (int i = 0; i < 12; ++i) in.push_back(std::uniform_int_distribution<std::int64_t>(-6, 9)(rng));
  Trace t = execute(c, in, 400).trace;
  t.resize(std::uniform_int_distribution<std::size_t>(0, t.size())(rng));
  return t;
}

Outcome property_suite() {
  std::mt19937 rng(20240601);
  std::size_t traces = 0, p1 = 0, p2 = 0, p3 = 0, p5_checks = 0, automata = 0, mismatch = 0;
  std::string p5_error;
  std::size_t min_per_fixture = SIZE_MAX;
  for (const auto& f : kFixtureSet) {
    CFA c = f.cfa();
    VerifyOptions opt = f.options();
    VerifyResult plain = verify(c, opt, "h");
    if (plain.status == VerifyStatus::Bug) continue;
    try {
      with_phase1(c, opt, "h", [&](auto& art, VerifyResult&) {
        Art<std::decay_t<decltype(art.domain())>> fresh(c, art.domain(), opt.order);
        VerifyResult stepped = phase1_checked(fresh, opt, p5_checks);
        if (!(stepped.automaton == plain.automaton)) ++mismatch;
        return 0;
      });
    } catch (const ArtInvariantError& e) {
      p5_error = e.what();
    }
    // phase-two trees as well
    ReportOptions ro;
    ro.opaque_multiplication = f.opaque;
    for (Component k : {Component::S, Component::F})
      generate_component(c, plain.automaton, k, ro, [&](const auto& art) {
        art.check_property5();
        ++p5_checks;
      });
    const AssumptionAutomaton& aa = plain.automaton;
    ++automata;
    std::size_t here = 0;
    for (int i = 0; i < 1200; ++i, ++here) {
      Trace t = i % 2 ? testing::random_walk(c, rng, 80) : concrete_prefix(c, rng);
      ++traces;
      for (std::size_t k = 0; k < t.size(); ++k) {
        Trace p(t.begin(), t.begin() + static_cast<long>(k)), ps(t.begin(), t.begin() + static_cast<long>(k) + 1);
        if (!aa.analyzed(p) && aa.analyzed(ps)) ++p1;
        if (aa.safe_cone(p) && !aa.safe_cone(ps)) ++p2;
        if (aa.safe_cone(p) && !aa.analyzed(p)) ++p3;
      }
    }
    min_per_fixture = std::min(min_per_fixture, here);
  }
  std::ostringstream d;
  d << automata << " fixture automata, " << traces << " traces (>= " << min_per_fixture << " each); violations: P1 "
    << p1 << ", P2 " << p2 << ", P3 " << p3 << ", P5 " << (p5_error.empty() ? "0" : p5_error) << " over " << p5_checks
    << " ART updates; stepped/one-shot automaton mismatches " << mismatch;
  return {p1 == 0 && p2 == 0 && p3 == 0 && p5_error.empty() && mismatch == 0 && min_per_fixture >= 1000, d.str()};
}

Outcome feasibility_fuzz(const fs::path& dir) {
  std::mt19937 rng(99);
  std::vector<CFA> cfas;
  for (const auto& f : kFixtureSet) cfas.push_back(f.cfa());
  for (const auto& g : corpus(dir, 10)) cfas.push_back(build_cfa(parse(g.source), {}));
  std::size_t n = 0, feasible = 0, replay_fail = 0;
  std::map<UnknownReason, std::size_t> reasons;
  while (n < 10000) {
    for (const auto& c : cfas) {
      Trace t = n % 2 ? testing::random_walk(c, rng, 40) : concrete_prefix(c, rng);
      FeasibilityVerdict v = check_feasibility(c, t);
      ++n;
      if (v.feasible) {
        ++feasible;
        if (!replay(c, t, v.witness)) ++replay_fail;
      } else {
        ++reasons[v.reason];
      }
    }
  }
  std::ostringstream d;
  d << n << " candidate traces, " << feasible << " feasible, unknown:";
  for (auto [r, k] : reasons) d << " " << reason_name(r) << "=" << k;
  d << "; replay failures " << replay_fail;
  return {replay_fail == 0 && feasible > 0, d.str()};
}

template <class A>
void agree_dfs(const CFA& c, const A& art, const AssumptionAutomaton& aa, const std::vector<char>& safe, Trace& t,
               LocationId at, std::size_t max_len, std::size_t& compared, std::size_t& bad) {
  ++compared;
  bool a1 = art.art_analyzed(t), a2 = aa.analyzed(t);
  bool s1 = art.art_safe_cone(t, safe), s2 = aa.safe_cone(t);
  if (a1 != a2 || s1 != s2) ++bad;
  if (t.size() >= max_len) return;
  for (const Edge* e : c.outgoing(at)) {
    t.push_back(e->id);
    agree_dfs(c, art, aa, safe, t, e->target, max_len, compared, bad);
    t.pop_back();
  }
}

Outcome agreement() {
  std::size_t compared = 0, bad = 0, fixtures = 0;
  for (const auto& f : kFixtureSet) {
    CFA c = f.cfa();
    if (verify(c, f.options(), "h").status == VerifyStatus::Bug) continue;
    ++fixtures;
    with_phase1(c, f.options(), "h", [&](const auto& art, const VerifyResult& r) {
      std::vector<char> safe = art.safe_nodes();
      Trace t;
      agree_dfs(c, art, r.automaton, safe, t, c.entry(), 25, compared, bad);
      return 0;
    });
  }
  std::ostringstream d;
  d << fixtures << " fixtures, all " << compared << " syntactic traces up to length 25 compared, " << bad
    << " disagreements";
  return {bad == 0 && compared > 0, d.str()};
}

Outcome determinism(const fs::path& dir) {
  std::size_t files = 0, differ = 0;
  for (const char* round : {"a", "b"}) {
    fs::create_directories(dir / round);
    for (const auto& f : kFixtureSet) {
      fs::path src = dir / round / f.file;
      fs::copy_file(kFixtures / f.file, src, fs::copy_options::overwrite_existing);
      fs::path aa = src, er = src;
      aa.replace_extension(".aa.json");
      er.replace_extension(".er.json");
      int v = cli("verify " + q(src) + f.flags(), dir / round / "log");
      if (v == 0 || v == 10)
        cli("report " + q(src) + f.report_flags() + " --automaton " + q(aa), dir / round / "log");
    }
  }
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    std::string name = e.path().filename().string();
    if (name.find(".json") == std::string::npos) continue;
    ++files;
    if (read(e.path()) != read(dir / "b" / name)) ++differ;
  }
  std::ostringstream d;
  d << files << " automaton/report files from two runs, " << differ << " differ";
  return {files > 0 && differ == 0, d.str()};
}

Outcome performance(const fs::path& dir) {
  auto progs = corpus(dir, 24);
  std::size_t unknown = 0, within = 0;
  for (const auto& p : progs) {
    CFA c = build_cfa(parse(p.source), {});
    for (std::size_t b : kBudgets) {
      VerifyOptions o;
      o.budget = b;
      VerifyResult r = verify(c, o, "h");
      if (r.status != VerifyStatus::Unknown) continue;
      ++unknown;
      ReportOptions ro;
      ro.budget = 2 * b;
      ExecutionReport rep = generate(c, r.automaton, ro);
      bool done = rep.s->status != "budget-truncated" && rep.f->status != "budget-truncated" &&
                  rep.s->pops + rep.f->pops <= 2 * b;
      within += done;
    }
  }
  double pct = unknown ? 100.0 * static_cast<double>(within) / static_cast<double>(unknown) : 0.0;
  std::ostringstream d;
  d.precision(1);
  d << std::fixed << within << "/" << unknown << " UNKNOWN instances (" << pct
    << "%) finished S+F within 2x the phase-1 pop budget";
  return {unknown > 0 && pct >= 70.0, d.str()};
}

}  // namespace

int main() {
  fs::path root = fs::temp_directory_path() / ("ermc-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(root);
  auto sub = [&](const char* n) {
    fs::create_directories(root / n);
    return root / n;
  };
  report("example-1 (Fig. 1 port, loop bound 3)", [&] { return example1(sub("ex1")); });
  report("example-2 (Fig. 2 port, opaque multiplication)", [&] { return example2(sub("ex2")); });
  report("oracle soundness suite", [&] {
    auto t0 = Clock::now();
    Outcome o = oracle_suite(sub("oracle"));
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs >= 300) o = {false, o.detail + "; exceeded 5 min"};
    return o;
  });
  report("property suite (P1, P2, P3, P5)", property_suite);
  report("feasibility soundness fuzz", [&] { return feasibility_fuzz(sub("fuzz")); });
  report("ART/automaton agreement", agreement);
  report("determinism", [&] { return determinism(sub("det")); });
  report("performance analogue (soft target 70%)", [&] { return performance(sub("perf")); });
  fs::remove_all(root);
  return failures ? 1 : 0;
}
