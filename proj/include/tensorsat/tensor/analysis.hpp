#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/egraph.hpp"
#include "tensorsat/rules.hpp"
#include "tensorsat/tensor/graph.hpp"
#include "tensorsat/tensor/value.hpp"

namespace tensorsat {

/// E-class analysis for the tensor language: childless e-nodes are parameter
/// literals; every other e-node is an operator whose value is inferred.
struct TensorAnalysis {
  using Data = Value;

  std::optional<Value> try_make(std::string_view op, std::span<const Value* const> kids, std::string* why) const;
  bool merge(Value& into, const Value& other) const;
};

using TensorEGraph = EGraph<TensorAnalysis>;

/// Throws std::invalid_argument unless `p` is a well-formed tensor pattern:
/// known operators with the right arity, literals only in parameter
/// positions, and no noop (noops are never rewritten).
void validate_tensor_pattern(const Pattern& p);

/// Loads a graph into a fresh e-graph; the graph is made single-rooted first.
struct LoadedGraph {
  TensorEGraph egraph;
  ClassId root;
};
LoadedGraph load_graph(const TensorGraph& g);

/// Selection: canonical e-class -> chosen e-node.
using Selection = std::map<ClassId, NodeId>;

class CycleDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DanglingClass : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the graph realized by `sel` from `root` (shared selections emitted
/// once), with noops flattened back into the outputs list.
TensorGraph reconstruct(const TensorEGraph& g, const Selection& sel, ClassId root);

}  // namespace tensorsat
