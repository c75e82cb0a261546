#pragma once

// Configurable program analysis: the worklist algorithm over an abstract
// reachability tree, with early return on target states and resumption.

#include <algorithm>
#include <concepts>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ermc/cfa.hpp"
#include "ermc/interp.hpp"

namespace ermc {

enum class Disposition { Expand, Park, Terminal };

enum class WaitlistOrder { Bfs, Dfs, Rpo };

/// merge is fixed to merge^sep and stop to stop^sep, so a domain only
/// supplies its transfer and the partial order.
template <class D>
concept AbstractDomain = requires(const D& d, const typename D::State& s, const Edge& e) {
  { d.initial() } -> std::convertible_to<typename D::State>;
  { d.successor(s, e) } -> std::same_as<std::optional<typename D::State>>;
  { d.leq(s, s) } -> std::convertible_to<bool>;
  { d.location(s) } -> std::convertible_to<LocationId>;
  { d.disposition(s) } -> std::same_as<Disposition>;
};

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

template <class State>
struct ArtNode {
  State state;
  NodeId parent = kNoNode;
  const Edge* via = nullptr;
  std::vector<std::pair<const Edge*, NodeId>> children;
  NodeId covered_by = kNoNode;
  bool waiting = false;
  bool parked = false;
  bool giveup = false;
  bool terminal = false;
  bool removed = false;
};

struct RunOutcome {
  std::optional<NodeId> target;
  bool budget_exhausted = false;
  std::size_t pops = 0;
};

/// Property 5 violation or other structural corruption of the tree.
struct ArtInvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

template <AbstractDomain D>
class Art {
 public:
  using State = typename D::State;
  using Node = ArtNode<State>;

  Art(const CFA& c, D dom, WaitlistOrder order = WaitlistOrder::Bfs) : cfa_(c), dom_(std::move(dom)), order_(order) {
    if (order_ == WaitlistOrder::Rpo) compute_rpo();
    Node root{dom_.initial()};
    nodes_.push_back(std::move(root));
    enter(0);
  }

  const CFA& cfa() const { return cfa_; }
  const D& domain() const { return dom_; }
  NodeId root() const { return 0; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)); }
  std::size_t pops() const { return pops_; }

  bool in_waitlist(NodeId n) const {
    const Node& x = node(n);
    return x.waiting || x.parked || (cursor_ && cursor_->node == n);
  }
  bool pending(NodeId n) const { return in_waitlist(n) || node(n).giveup; }
  bool has_waiting() {
    clean_front();
    return !fifo_.empty() || !rpo_queue_.empty();
  }
  bool complete() { return !cursor_ && !has_waiting(); }

  /// Algorithm 1. Returns as soon as a newly reached state satisfies
  /// `is_target`; a later call resumes with the remaining successors.
  template <typename Pred>
  RunOutcome run(Pred&& is_target, std::size_t pop_budget) {
    RunOutcome out;
    while (true) {
      if (!cursor_) {
        if (!has_waiting()) break;
        if (pops_ >= pop_budget) {
          out.budget_exhausted = true;
          break;
        }
        NodeId n = pop();
        nodes_[static_cast<std::size_t>(n)].waiting = false;
        ++pops_;
        cursor_ = Cursor{n, 0};
      }
      NodeId n = cursor_->node;
      auto edges = cfa_.outgoing(dom_.location(node(n).state));
      while (cursor_ && cursor_->next < edges.size()) {
        const Edge* e = edges[cursor_->next++];
        std::optional<State> succ = dom_.successor(node(n).state, *e);
        if (!succ) continue;
        NodeId c = add_child(n, e, std::move(*succ));
        if (node(c).covered_by == kNoNode && is_target(node(c))) {
          out.target = c;
          out.pops = pops_;
          return out;
        }
      }
      cursor_.reset();
    }
    out.pops = pops_;
    return out;
  }

  /// Abandons `g`: its subtree is dropped and it becomes a give-up leaf.
  void give_up(NodeId g) {
    Node& x = nodes_.at(static_cast<std::size_t>(g));
    if (x.removed) throw ArtInvariantError("give_up on detached node");
    std::vector<NodeId> dropped;
    for (auto& [e, c] : x.children) remove_subtree(c, dropped);
    nodes_[static_cast<std::size_t>(g)].children.clear();
    nodes_[static_cast<std::size_t>(g)].waiting = false;
    nodes_[static_cast<std::size_t>(g)].parked = false;
    nodes_[static_cast<std::size_t>(g)].giveup = true;
    if (cursor_ && (cursor_->node == g || node(cursor_->node).removed)) cursor_.reset();
    // nodes that were covered by a dropped node must be explored on their own
    std::vector<NodeId> orphans;
    for (NodeId d : dropped) {
      auto it = covers_.find(d);
      if (it == covers_.end()) continue;
      for (NodeId o : it->second)
        if (!node(o).removed && node(o).covered_by == d) orphans.push_back(o);
      covers_.erase(it);
    }
    std::sort(orphans.begin(), orphans.end());
    for (NodeId o : orphans) {
      nodes_[static_cast<std::size_t>(o)].covered_by = kNoNode;
      enter(o);
    }
  }

  /// δ′: the child for `e`, resolved through coverage, or none.
  std::optional<NodeId> delta_prime(std::optional<NodeId> q, const EdgeId& e) const {
    if (!q) return std::nullopt;
    for (const auto& [edge, c] : node(*q).children) {
      if (edge->id != e) continue;
      NodeId cv = node(c).covered_by;
      return cv == kNoNode ? c : cv;
    }
    return std::nullopt;
  }

  std::optional<NodeId> delta_hat(std::optional<NodeId> q, const Trace& t) const {
    for (const auto& e : t) q = delta_prime(q, e);
    return q;
  }

  Trace art_path(NodeId n) const {
    Trace t;
    if (node(n).removed) throw ArtInvariantError("detached node " + std::to_string(n));
    for (NodeId x = n; node(x).parent != kNoNode; x = node(x).parent) t.push_back(node(x).via->id);
    std::reverse(t.begin(), t.end());
    return t;
  }

  /// Nodes from which no path (following coverage) reaches W or give-up.
  std::vector<char> safe_nodes() const {
    std::vector<std::vector<NodeId>> rev(nodes_.size());
    std::vector<NodeId> queue;
    std::vector<char> bad(nodes_.size(), 0);
    for (NodeId n = 0; n < static_cast<NodeId>(nodes_.size()); ++n) {
      const Node& x = node(n);
      if (x.removed || x.covered_by != kNoNode) continue;
      for (const auto& [e, c] : x.children) {
        NodeId t = node(c).covered_by == kNoNode ? c : node(c).covered_by;
        rev[static_cast<std::size_t>(t)].push_back(n);
      }
      if (pending(n)) {
        bad[static_cast<std::size_t>(n)] = 1;
        queue.push_back(n);
      }
    }
    while (!queue.empty()) {
      NodeId n = queue.back();
      queue.pop_back();
      for (NodeId p : rev[static_cast<std::size_t>(n)])
        if (!bad[static_cast<std::size_t>(p)]) {
          bad[static_cast<std::size_t>(p)] = 1;
          queue.push_back(p);
        }
    }
    std::vector<char> safe(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      safe[i] = !bad[i] && !nodes_[i].removed && nodes_[i].covered_by == kNoNode;
    return safe;
  }

  bool art_analyzed(const Trace& t) const {
    std::optional<NodeId> q = root();
    if (pending(*q)) return false;
    for (const auto& e : t) {
      q = delta_prime(q, e);
      if (!q) return true;
      if (pending(*q)) return false;
    }
    return true;
  }

  bool art_safe_cone(const Trace& t) const { return art_safe_cone(t, safe_nodes()); }

  bool art_safe_cone(const Trace& t, const std::vector<char>& safe) const {
    std::optional<NodeId> q = root();
    if (safe[static_cast<std::size_t>(*q)]) return true;
    for (const auto& e : t) {
      q = delta_prime(q, e);
      if (!q) return false;
      if (safe[static_cast<std::size_t>(*q)]) return true;
    }
    return false;
  }

  /// Throws if some node is covered by a covered node.
  void check_property5() const {
    for (const auto& x : nodes_) {
      if (x.removed || x.covered_by == kNoNode) continue;
      const Node& c = node(x.covered_by);
      if (c.covered_by != kNoNode || c.removed) throw ArtInvariantError("coverage chain in ART");
      if (!x.children.empty()) throw ArtInvariantError("covered node has children");
    }
  }

  std::size_t live_nodes() const {
    std::size_t n = 0;
    for (const auto& x : nodes_) n += !x.removed;
    return n;
  }

 private:
  struct Cursor {
    NodeId node;
    std::size_t next;
  };

  NodeId add_child(NodeId parent, const Edge* e, State s) {
    NodeId c = static_cast<NodeId>(nodes_.size());
    Node x{std::move(s)};
    x.parent = parent;
    x.via = e;
    nodes_.push_back(std::move(x));
    nodes_[static_cast<std::size_t>(parent)].children.emplace_back(e, c);
    // stop^sep: covered by the earliest reached state that subsumes it
    auto& bucket = reached_at_[dom_.location(node(c).state)];
    for (NodeId r : bucket) {
      if (dom_.leq(node(c).state, node(r).state)) {
        if (node(r).covered_by != kNoNode) throw ArtInvariantError("coverage chain in ART");
        nodes_[static_cast<std::size_t>(c)].covered_by = r;
        covers_[r].push_back(c);
        return c;
      }
    }
    enter(c);
    return c;
  }

  // Adds an uncovered node to reached and, by disposition, to the waitlist.
  void enter(NodeId n) {
    auto& bucket = reached_at_[dom_.location(node(n).state)];
    bucket.insert(std::upper_bound(bucket.begin(), bucket.end(), n), n);
    Node& x = nodes_[static_cast<std::size_t>(n)];
    switch (dom_.disposition(x.state)) {
      case Disposition::Expand:
        x.waiting = true;
        push(n);
        break;
      case Disposition::Park: x.parked = true; break;
      case Disposition::Terminal: x.terminal = true; break;
    }
  }

  void remove_subtree(NodeId n, std::vector<NodeId>& dropped) {
    std::vector<NodeId> st{n};
    while (!st.empty()) {
      NodeId x = st.back();
      st.pop_back();
      Node& nd = nodes_[static_cast<std::size_t>(x)];
      nd.removed = true;
      nd.waiting = nd.parked = false;
      dropped.push_back(x);
      if (nd.covered_by == kNoNode) {
        auto& bucket = reached_at_[dom_.location(nd.state)];
        bucket.erase(std::remove(bucket.begin(), bucket.end(), x), bucket.end());
      }
      for (auto& [e, c] : nd.children) st.push_back(c);
    }
  }

  void push(NodeId n) {
    if (order_ == WaitlistOrder::Rpo) rpo_queue_.insert({rpo_[static_cast<std::size_t>(dom_.location(node(n).state))], n});
    else fifo_.push_back(n);
  }

  void clean_front() {
    auto stale = [&](NodeId n) { return !node(n).waiting; };
    if (order_ == WaitlistOrder::Rpo) {
      while (!rpo_queue_.empty() && stale(rpo_queue_.begin()->second)) rpo_queue_.erase(rpo_queue_.begin());
    } else if (order_ == WaitlistOrder::Dfs) {
      while (!fifo_.empty() && stale(fifo_.back())) fifo_.pop_back();
    } else {
      while (!fifo_.empty() && stale(fifo_.front())) fifo_.pop_front();
    }
  }

  NodeId pop() {
    clean_front();
    NodeId n;
    if (order_ == WaitlistOrder::Rpo) {
      n = rpo_queue_.begin()->second;
      rpo_queue_.erase(rpo_queue_.begin());
    } else if (order_ == WaitlistOrder::Dfs) {
      n = fifo_.back();
      fifo_.pop_back();
    } else {
      n = fifo_.front();
      fifo_.pop_front();
    }
    return n;
  }

  void compute_rpo() {
    std::size_t n = cfa_.location_count();
    std::vector<char> seen(n, 0);
    std::vector<LocationId> post;
    std::vector<std::pair<LocationId, std::size_t>> st{{cfa_.entry(), 0}};
    seen[static_cast<std::size_t>(cfa_.entry())] = 1;
    while (!st.empty()) {
      auto& [l, i] = st.back();
      auto out = cfa_.outgoing(l);
      if (i < out.size()) {
        LocationId t = out[i++]->target;
        if (!seen[static_cast<std::size_t>(t)]) {
          seen[static_cast<std::size_t>(t)] = 1;
          st.emplace_back(t, 0);
        }
      } else {
        post.push_back(l);
        st.pop_back();
      }
    }
    rpo_.assign(n, static_cast<int>(n));
    int k = 0;
    for (auto it = post.rbegin(); it != post.rend(); ++it) rpo_[static_cast<std::size_t>(*it)] = k++;
  }

  const CFA& cfa_;
  D dom_;
  WaitlistOrder order_;
  std::vector<Node> nodes_;
  std::map<LocationId, std::vector<NodeId>> reached_at_;
  std::map<NodeId, std::vector<NodeId>> covers_;
  std::deque<NodeId> fifo_;
  std::set<std::pair<int, NodeId>> rpo_queue_;
  std::vector<int> rpo_;
  std::optional<Cursor> cursor_;
  std::size_t pops_ = 0;
};

}  // namespace ermc
