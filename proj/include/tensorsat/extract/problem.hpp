#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensorsat/egraph.hpp"

namespace tensorsat {

/// Frozen view of an e-graph for extraction: dense class indices, live
/// e-nodes with costs, and filter flags. Extractors work on this so they do
/// not depend on the analysis type.
struct ExtractionProblem {
  struct Node {
    NodeId id;
    std::uint32_t cls;                    // dense class index
    std::vector<std::uint32_t> children;  // dense class indices, in argument order
    double cost = 0;
    bool filtered = false;
  };

  std::vector<ClassId> classes;                       // dense index -> canonical id
  std::vector<std::vector<std::uint32_t>> class_nodes;  // dense class -> indices into nodes
  std::vector<Node> nodes;                            // ascending e-node id
  std::uint32_t root = 0;

  std::uint32_t class_index(ClassId c) const;
  /// Distinct child classes of a node, ascending.
  std::vector<std::uint32_t> child_classes(std::uint32_t node) const;
  /// Classes reachable from the root through non-filtered nodes, ascending.
  std::vector<std::uint32_t> reachable() const;
};

template <EClassAnalysis A>
ExtractionProblem make_problem(const EGraph<A>& g, std::span<const double> node_costs, const FilterList* filter,
                               ClassId root) {
  if (g.dirty()) throw std::logic_error("extraction requires a rebuilt e-graph");
  ExtractionProblem p;
  p.classes = g.class_ids();
  std::map<ClassId, std::uint32_t> index;
  for (std::uint32_t i = 0; i < p.classes.size(); ++i) index.emplace(p.classes[i], i);
  p.class_nodes.resize(p.classes.size());
  for (std::uint32_t n = 0; n < g.node_capacity(); ++n) {
    NodeId id{n};
    if (!g.is_live(id)) continue;
    ExtractionProblem::Node node;
    node.id = id;
    node.cls = index.at(g.class_of(id));
    for (ClassId k : g.node(id).children) node.children.push_back(index.at(g.find(k)));
    node.cost = n < node_costs.size() ? node_costs[n] : 0.0;
    node.filtered = filter && filter->contains(id);
    p.class_nodes[node.cls].push_back(static_cast<std::uint32_t>(p.nodes.size()));
    p.nodes.push_back(std::move(node));
  }
  p.root = index.at(g.find(root));
  return p;
}

class NoFiniteExtraction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionCycle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExtractionResult {
  std::map<ClassId, NodeId> selection;  // classes reachable from the root
  double cost = 0;                      // each selected node counted once
  bool optimal = false;
  std::size_t bb_nodes = 0;
  std::size_t lp_solves = 0;
  double seconds = 0;
};

/// Dense selection (class -> index into nodes, or -1) restricted to classes
/// reachable from the root; throws ExtractionCycle on a cycle and
/// std::invalid_argument on a missing class.
std::vector<std::int64_t> reachable_selection(const ExtractionProblem& p, const std::vector<std::int64_t>& choice);

/// Cost of a selection with shared nodes counted once.
double selection_cost(const ExtractionProblem& p, const std::vector<std::int64_t>& reachable_choice);

ExtractionResult to_result(const ExtractionProblem& p, const std::vector<std::int64_t>& reachable_choice);

/// Bottom-up fixpoint: best[c] = min over non-filtered nodes of
/// cost + sum of children's best, starting from infinity; ties go to the
/// smallest e-node id.
ExtractionResult greedy_extract(const ExtractionProblem& p);

}  // namespace tensorsat
