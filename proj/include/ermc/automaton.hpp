#pragma once

// Assumption automata: a compressed final ART with absorbing TRUE (fully
// explored) and FALSE (pending or abandoned) states.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ermc/cpa.hpp"

namespace ermc {

enum class AAKind { Normal, True, False };

inline const char* aa_kind_name(AAKind k) {
  switch (k) {
    case AAKind::Normal: return "normal";
    case AAKind::True: return "TRUE";
    case AAKind::False: return "FALSE";
  }
  return "?";
}

struct AAState {
  std::string id;
  AAKind kind = AAKind::Normal;
  std::map<EdgeId, int> trans;
  bool operator==(const AAState&) const = default;
};

struct ManifestEdge {
  EdgeId id;
  LocationId source = 0;
  LocationId target = 0;
  std::string text;
  int line = 0;
  bool operator==(const ManifestEdge&) const = default;
};

struct AutomatonFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class AssumptionAutomaton {
 public:
  /// Result of running the automaton; nullopt is the DEAD sink.
  using Run = std::optional<int>;

  const std::vector<AAState>& states() const { return states_; }
  const AAState& state(int q) const { return states_.at(static_cast<std::size_t>(q)); }
  int initial() const { return initial_; }
  int true_state() const { return true_; }
  int false_state() const { return false_; }
  const std::string& source_hash() const { return source_hash_; }
  const std::vector<ManifestEdge>& manifest() const { return manifest_; }
  AAKind kind(int q) const { return state(q).kind; }

  Run step(Run q, const EdgeId& e) const {
    if (!q) return q;
    const AAState& s = state(*q);
    if (s.kind != AAKind::Normal) return q;
    auto it = s.trans.find(e);
    if (it == s.trans.end()) return std::nullopt;
    return it->second;
  }

  /// No prefix of `t` reaches FALSE.
  bool analyzed(const Trace& t) const {
    Run q = initial_;
    if (kind(*q) == AAKind::False) return false;
    for (const auto& e : t) {
      q = step(q, e);
      if (!q) return true;
      if (kind(*q) == AAKind::False) return false;
    }
    return true;
  }

  /// Some prefix of `t` reaches TRUE.
  bool safe_cone(const Trace& t) const {
    Run q = initial_;
    if (kind(*q) == AAKind::True) return true;
    for (const auto& e : t) {
      q = step(q, e);
      if (!q) return false;
      if (kind(*q) == AAKind::True) return true;
    }
    return false;
  }

  bool fully_verified() const { return kind(initial_) == AAKind::True; }

  /// Structural equality up to the internal numbering of states.
  bool operator==(const AssumptionAutomaton& o) const {
    auto canon = [](const AssumptionAutomaton& a) {
      std::map<std::string, std::pair<AAKind, std::map<EdgeId, std::string>>> m;
      for (const auto& s : a.states_) {
        auto& [k, tr] = m[s.id];
        k = s.kind;
        for (const auto& [e, to] : s.trans) tr[e] = a.state(to).id;
      }
      return m;
    };
    return source_hash_ == o.source_hash_ && manifest_ == o.manifest_ && state(initial_).id == o.state(o.initial_).id &&
           canon(*this) == canon(o);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["source_hash"] = source_hash_;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& m : manifest_)
      edges.push_back({{"id", m.id.str()}, {"src", m.source}, {"dst", m.target}, {"text", m.text}, {"line", m.line}});
    j["cfa"] = {{"source_hash", source_hash_}, {"edges", edges}};
    j["initial"] = state(initial_).id;
    nlohmann::json st = nlohmann::json::object();
    for (const auto& s : states_) {
      nlohmann::json tr = nlohmann::json::array();
      for (const auto& [e, to] : s.trans) tr.push_back({{"edge", e.str()}, {"to", state(to).id}});
      st[s.id] = {{"kind", aa_kind_name(s.kind)}, {"trans", tr}};
    }
    j["states"] = st;
    return j;
  }

  std::string serialize() const { return to_json().dump(2) + "\n"; }

  static AssumptionAutomaton parse(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw AutomatonFormatError(std::string("malformed automaton: ") + e.what());
    }
    return from_json(j);
  }

  static AssumptionAutomaton from_json(const nlohmann::json& j) {
    AssumptionAutomaton a;
    try {
      a.source_hash_ = j.at("source_hash").get<std::string>();
      std::set<EdgeId> known;
      for (const auto& e : j.at("cfa").at("edges")) {
        ManifestEdge m;
        auto id = EdgeId::from_string(e.at("id").get<std::string>());
        if (!id) throw AutomatonFormatError("malformed edge id " + e.at("id").get<std::string>());
        m.id = *id;
        m.source = e.at("src").get<int>();
        m.target = e.at("dst").get<int>();
        m.text = e.at("text").get<std::string>();
        m.line = e.at("line").get<int>();
        if (!known.insert(m.id).second) throw AutomatonFormatError("duplicate manifest edge " + m.id.str());
        a.manifest_.push_back(std::move(m));
      }
      const auto& st = j.at("states");
      if (!st.is_object()) throw AutomatonFormatError("states must be an object");
      std::map<std::string, int> index;
      for (auto it = st.begin(); it != st.end(); ++it) {
        AAState s;
        s.id = it.key();
        std::string k = it.value().at("kind").get<std::string>();
        if (k == "normal") s.kind = AAKind::Normal;
        else if (k == "TRUE") s.kind = AAKind::True;
        else if (k == "FALSE") s.kind = AAKind::False;
        else throw AutomatonFormatError("unknown state kind " + k);
        index[s.id] = static_cast<int>(a.states_.size());
        a.states_.push_back(std::move(s));
      }
      auto lookup = [&](const std::string& id) {
        auto f = index.find(id);
        if (f == index.end()) throw AutomatonFormatError("unknown state " + id);
        return f->second;
      };
      for (auto it = st.begin(); it != st.end(); ++it) {
        AAState& s = a.states_[static_cast<std::size_t>(index[it.key()])];
        for (const auto& t : it.value().at("trans")) {
          auto id = EdgeId::from_string(t.at("edge").get<std::string>());
          if (!id || !known.count(*id)) throw AutomatonFormatError("unknown edge id " + t.at("edge").get<std::string>());
          int to = lookup(t.at("to").get<std::string>());
          auto [pos, fresh] = s.trans.emplace(*id, to);
          if (!fresh && pos->second != to)
            throw AutomatonFormatError("nondeterministic transitions at " + s.id + " on " + id->str());
          if (s.kind != AAKind::Normal && to != index[s.id])
            throw AutomatonFormatError("TRUE/FALSE states must be absorbing");
        }
      }
      a.initial_ = lookup(j.at("initial").get<std::string>());
      a.true_ = lookup("TRUE");
      a.false_ = lookup("FALSE");
      if (a.kind(a.true_) != AAKind::True || a.kind(a.false_) != AAKind::False)
        throw AutomatonFormatError("TRUE/FALSE states have the wrong kind");
    } catch (const nlohmann::json::exception& e) {
      throw AutomatonFormatError(std::string("malformed automaton: ") + e.what());
    }
    return a;
  }

  /// Throws unless every transition names an edge of `c` and the manifest agrees.
  void validate_against(const CFA& c) const {
    for (const auto& m : manifest_) {
      const Edge* e = c.find(m.id);
      if (!e || e->label.text != m.text) throw AutomatonFormatError("manifest edge " + m.id.str() + " not in CFA");
    }
  }

  template <class D>
  friend AssumptionAutomaton build_automaton(const Art<D>& a, const std::string& source_hash);

 private:
  std::vector<AAState> states_;
  int initial_ = 0;
  int true_ = 0;
  int false_ = 0;
  std::string source_hash_;
  std::vector<ManifestEdge> manifest_;
};

/// Pending and give-up nodes become FALSE, nodes that cannot reach them
/// become TRUE, covered nodes are merged into their coverers, and the rest
/// become normal states numbered breadth-first from the root.
template <class D>
AssumptionAutomaton build_automaton(const Art<D>& art, const std::string& source_hash) {
  art.check_property5();
  AssumptionAutomaton a;
  a.source_hash_ = source_hash;
  for (const auto& e : art.cfa().edges()) a.manifest_.push_back({e.id, e.source, e.target, e.label.text, e.line});

  std::vector<char> safe = art.safe_nodes();
  auto resolve = [&](NodeId n) { return art.node(n).covered_by == kNoNode ? n : art.node(n).covered_by; };
  auto cls = [&](NodeId n) {
    if (art.pending(n)) return AAKind::False;
    if (safe[static_cast<std::size_t>(n)]) return AAKind::True;
    return AAKind::Normal;
  };

  std::map<NodeId, int> id_of;
  std::vector<NodeId> order;
  std::vector<NodeId> queue{art.root()};
  if (cls(art.root()) == AAKind::Normal) id_of[art.root()] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    NodeId n = queue[i];
    if (cls(n) != AAKind::Normal) continue;
    order.push_back(n);
    for (const auto& [e, c] : art.node(n).children) {
      NodeId t = resolve(c);
      if (cls(t) == AAKind::Normal && !id_of.count(t)) {
        id_of[t] = static_cast<int>(id_of.size());
        queue.push_back(t);
      }
    }
  }
  int normals = static_cast<int>(order.size());
  a.states_.resize(static_cast<std::size_t>(normals) + 2);
  a.true_ = normals;
  a.false_ = normals + 1;
  a.states_[static_cast<std::size_t>(a.true_)] = {"TRUE", AAKind::True, {}};
  a.states_[static_cast<std::size_t>(a.false_)] = {"FALSE", AAKind::False, {}};
  auto state_of = [&](NodeId n) {
    switch (cls(n)) {
      case AAKind::True: return a.true_;
      case AAKind::False: return a.false_;
      default: return id_of.at(n);
    }
  };
  for (NodeId n : order) {
    AAState& s = a.states_[static_cast<std::size_t>(id_of.at(n))];
    s.id = "q" + std::to_string(id_of.at(n));
    s.kind = AAKind::Normal;
    for (const auto& [e, c] : art.node(n).children) s.trans[e->id] = state_of(resolve(c));
  }
  a.initial_ = state_of(art.root());
  return a;
}

/// The automaton as a CPA component over the flat lattice of its states.
/// A missing transition is ⊥; the number of such steps is recorded.
class AutomatonDomain {
 public:
  using State = int;

  explicit AutomatonDomain(const AssumptionAutomaton& a) : aa_(&a) {}

  State initial() const { return aa_->initial(); }
  LocationId location(const State&) const { return 0; }
  bool leq(const State& x, const State& y) const { return x == y; }
  Disposition disposition(const State& s) const {
    return aa_->kind(s) == AAKind::Normal ? Disposition::Expand : Disposition::Terminal;
  }
  std::optional<State> successor(const State& s, const Edge& e) const {
    auto r = aa_->step(s, e.id);
    if (!r) ++*dead_;
    return r;
  }
  std::size_t dead_steps() const { return *dead_; }
  const AssumptionAutomaton& automaton() const { return *aa_; }

 private:
  const AssumptionAutomaton* aa_;
  std::shared_ptr<std::size_t> dead_ = std::make_shared<std::size_t>(0);
};

}  // namespace ermc
