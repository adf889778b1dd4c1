#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "tensorsat/egraph.hpp"
#include "tensorsat/rules.hpp"

namespace tensorsat {

// Cycles are defined over e-class reachability: a live (non filter-listed)
// e-node contributes an edge from its class to each child class.

/// Dense e-class digraph snapshot.
struct ClassGraph {
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

  std::vector<ClassId> classes;       // dense index -> canonical id
  std::vector<std::uint32_t> index;   // raw class id -> dense index (npos if not canonical)
  std::vector<std::vector<std::uint32_t>> succ;

  std::uint32_t index_of(ClassId c) const { return c.value < index.size() ? index[c.value] : npos; }
};

template <EClassAnalysis A>
ClassGraph build_class_graph(const EGraph<A>& g, const FilterList* filter) {
  ClassGraph cg;
  cg.classes = g.class_ids();
  cg.index.assign(g.class_capacity(), ClassGraph::npos);
  for (std::uint32_t i = 0; i < cg.classes.size(); ++i) cg.index[cg.classes[i].value] = i;
  cg.succ.resize(cg.classes.size());
  for (std::uint32_t n = 0; n < g.node_capacity(); ++n) {
    NodeId id{n};
    if (!g.is_live(id) || (filter && filter->contains(id))) continue;
    std::uint32_t from = cg.index[g.class_of(id).value];
    for (ClassId k : g.node(id).children) cg.succ[from].push_back(cg.index[g.find(k).value]);
  }
  for (auto& s : cg.succ) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return cg;
}

/// Strongly connected components (Tarjan, iterative). Component ids are
/// assigned in reverse topological order: successors get smaller ids.
struct SccResult {
  std::vector<std::uint32_t> component;
  std::uint32_t count = 0;
};
SccResult strongly_connected(const std::vector<std::vector<std::uint32_t>>& succ);

/// True iff vertex `v` lies on a cycle (non-trivial SCC or self-loop).
bool on_cycle(const std::vector<std::vector<std::uint32_t>>& succ, const SccResult& scc, std::uint32_t v);

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t bits) : words_((bits + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  std::size_t count() const;

 private:
  std::vector<std::uint64_t> words_;
};

/// Per-class set of descendant classes (transitive closure of the child
/// relation over live nodes). A class is its own descendant iff it lies on a
/// cycle.
class DescendantsMap {
 public:
  DescendantsMap() = default;
  DescendantsMap(ClassGraph graph);

  /// `to` is reachable from `from` by a path of at least one edge.
  bool reaches(ClassId from, ClassId to) const;
  bool same_component(ClassId a, ClassId b) const;
  bool contains_class(ClassId c) const { return graph_.index_of(c) != ClassGraph::npos; }
  std::vector<ClassId> descendants(ClassId c) const;
  const ClassGraph& graph() const { return graph_; }

 private:
  ClassGraph graph_;
  SccResult scc_;
  std::vector<Bitset> closure_;  // per component, over dense class indices
};

template <EClassAnalysis A>
DescendantsMap get_descendants(const EGraph<A>& g, const FilterList& filter) {
  return DescendantsMap(build_class_graph(g, &filter));
}

/// Pre-filter. Conservatively decides from a snapshot descendants map whether
/// instantiating the rule's targets under `sigma` and unioning them with the
/// `matched` classes closes a cycle. All ids must be canonical in the
/// snapshot `d` was computed from. Never rejects an application that would
/// not create a cycle relative to the snapshot; may accept one that does
/// when reachability changed after the snapshot.
bool will_create_cycle(const DescendantsMap& d, const RewriteRule& rule, const Bindings& sigma,
                       std::span<const ClassId> matched);

/// One DFS from `root` over live nodes; each back edge yields one cycle,
/// listed as the e-nodes along the DFS stack that close it.
template <EClassAnalysis A>
std::vector<std::vector<NodeId>> dfs_get_cycles(const EGraph<A>& g, const FilterList& filter, ClassId root) {
  struct Frame {
    ClassId cls;
    std::size_t node_pos = 0;
    std::size_t child_pos = 0;
  };
  enum : char { unvisited = 0, on_stack = 1, done = 2 };
  std::vector<char> state(g.class_capacity(), unvisited);
  std::vector<std::size_t> stack_pos(g.class_capacity(), 0);
  std::vector<std::vector<NodeId>> cycles;
  std::vector<Frame> stack;

  auto live_nodes = [&](ClassId c) {
    std::vector<NodeId> out;
    for (NodeId n : g.eclass(c).nodes) {
      if (!filter.contains(n)) out.push_back(n);
    }
    return out;
  };
  std::vector<std::vector<NodeId>> nodes_of(g.class_capacity());

  auto push = [&](ClassId c) {
    state[c.value] = on_stack;
    stack_pos[c.value] = stack.size();
    nodes_of[c.value] = live_nodes(c);
    stack.push_back(Frame{c});
  };

  root = g.find(root);
  push(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& ns = nodes_of[f.cls.value];
    if (f.node_pos >= ns.size()) {
      state[f.cls.value] = done;
      stack.pop_back();
      continue;
    }
    NodeId n = ns[f.node_pos];
    const auto& kids = g.node(n).children;
    if (f.child_pos >= kids.size()) {
      ++f.node_pos;
      f.child_pos = 0;
      continue;
    }
    ClassId k = g.find(kids[f.child_pos++]);
    if (state[k.value] == unvisited) {
      push(k);
    } else if (state[k.value] == on_stack) {
      std::vector<NodeId> cycle;
      for (std::size_t i = stack_pos[k.value]; i < stack.size(); ++i) {
        const Frame& fr = stack[i];
        cycle.push_back(nodes_of[fr.cls.value][fr.node_pos]);
      }
      cycles.push_back(std::move(cycle));
    }
  }
  return cycles;
}

/// Adds the most recently inserted e-node of `cycle` to the filter list.
NodeId resolve_cycle(FilterList& filter, std::span<const NodeId> cycle);

/// Post-processing loop: repeat DFS passes, resolving every still
/// intact cycle, until none is reachable from `root`. Returns nodes filtered.
template <EClassAnalysis A>
std::size_t remove_cycles(const EGraph<A>& g, FilterList& filter, ClassId root, std::size_t* passes = nullptr) {
  std::size_t filtered = 0;
  for (;;) {
    auto cycles = dfs_get_cycles(g, filter, root);
    if (passes) ++*passes;
    if (cycles.empty()) return filtered;
    for (const auto& cycle : cycles) {
      bool intact = std::none_of(cycle.begin(), cycle.end(), [&](NodeId n) { return filter.contains(n); });
      if (!intact) continue;
      resolve_cycle(filter, cycle);
      ++filtered;
    }
  }
}

namespace detail {

/// Virtual application of targets on top of a class graph: returns the graph
/// vertex for `p`, creating virtual vertices for e-nodes not yet present.
/// `memo` hashconses the virtual e-nodes so identical new terms share a vertex,
/// as they would in the real e-graph.
using VirtualMemo = std::map<std::pair<std::string, std::vector<std::uint32_t>>, std::uint32_t>;

template <EClassAnalysis A>
std::uint32_t virtual_instantiate(const EGraph<A>& g, const ClassGraph& cg, const Pattern& p, const Bindings& sigma,
                                  std::vector<std::vector<std::uint32_t>>& succ, VirtualMemo& memo) {
  if (p.is_var()) return cg.index_of(g.find(sigma.at(p.symbol)));
  std::vector<std::uint32_t> kids;
  bool all_real = true;
  for (const auto& c : p.children) {
    kids.push_back(virtual_instantiate(g, cg, c, sigma, succ, memo));
    all_real = all_real && kids.back() < cg.classes.size();
  }
  if (all_real) {
    // A filtered e-node still occupies the hashcons: adding the same term
    // lands in its class without contributing edges.
    ENode probe{p.symbol, {}};
    for (std::uint32_t k : kids) probe.children.push_back(cg.classes[k]);
    if (auto hit = g.lookup(probe)) return cg.index_of(g.class_of(*hit));
  }
  auto [it, fresh] = memo.try_emplace({p.symbol, kids}, static_cast<std::uint32_t>(succ.size()));
  if (!fresh) return it->second;
  std::sort(kids.begin(), kids.end());
  kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
  succ.push_back(std::move(kids));
  return it->second;
}

bool creates_new_cycle(const std::vector<std::vector<std::uint32_t>>& before,
                       std::vector<std::vector<std::uint32_t>> after,
                       std::span<const std::pair<std::uint32_t, std::uint32_t>> merges,
                       std::span<const std::uint32_t> watched);

}  // namespace detail

/// Vanilla cycle check: builds the class graph of the current e-graph, applies
/// the rewrite virtually (new nodes plus unions), and reports whether a
/// matched class ends up on a cycle it was not on before. O(N) per call.
template <EClassAnalysis A>
bool vanilla_check(const EGraph<A>& g, const FilterList* filter, const RewriteRule& rule, const Bindings& sigma,
                   std::span<const ClassId> matched) {
  ClassGraph cg = build_class_graph(g, filter);
  std::vector<std::vector<std::uint32_t>> after = cg.succ;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> merges;
  std::vector<std::uint32_t> watched;
  detail::VirtualMemo memo;
  for (std::size_t i = 0; i < rule.targets.size(); ++i) {
    std::uint32_t root = detail::virtual_instantiate(g, cg, rule.targets[i], sigma, after, memo);
    std::uint32_t m = cg.index_of(g.find(matched[i]));
    merges.emplace_back(root, m);
    watched.push_back(m);
  }
  return detail::creates_new_cycle(cg.succ, std::move(after), merges, watched);
}

}  // namespace tensorsat
