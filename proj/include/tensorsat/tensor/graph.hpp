#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/pattern.hpp"
#include "tensorsat/tensor/ops.hpp"
#include "tensorsat/tensor/value.hpp"

namespace tensorsat {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphSyntaxError : public GraphError {
 public:
  GraphSyntaxError(const std::string& what, std::size_t line)
      : GraphError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct GraphNode {
  Op op;
  std::vector<std::string> params;   // S/N arguments in signature order
  std::vector<std::size_t> inputs;   // tensor arguments in signature order
  Value value;
};

/// DAG of operator nodes. Nodes are appended in topological order (inputs
/// must already exist), so node ids double as a topological order.
class TensorGraph {
 public:
  /// Appends a node and infers its value; throws GraphError naming the node.
  std::size_t add(Op op, std::vector<std::string> params, std::vector<std::size_t> inputs);
  std::size_t add(std::string_view op_symbol, std::vector<std::string> params, std::vector<std::size_t> inputs);

  std::size_t input(std::string_view name, const std::vector<std::int64_t>& dims);
  std::size_t weight(std::string_view name, const std::vector<std::int64_t>& dims);

  void add_output(std::size_t id);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const GraphNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& outputs() const { return outputs_; }
  std::optional<std::size_t> root() const { return root_; }

  const TensorShape& shape(std::size_t id) const;

  /// Combines outputs pairwise left to right with noops; the last noop (or the
  /// single output) becomes the root.
  TensorGraph make_single_rooted() const;

  /// Inverse of make_single_rooted: the noop tree under the root is flattened
  /// into the outputs list and noop nodes are dropped.
  TensorGraph strip_noops() const;

  /// Nodes reachable from the outputs, renumbered in a canonical order.
  TensorGraph canonical() const;

  /// Ground S-expression of a node (parameters become leaf literals).
  Pattern to_sexpr(std::size_t id) const;
  /// S-expression of the root (requires single-rooted graph or one output).
  Pattern to_sexpr() const;

  bool operator==(const TensorGraph& o) const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::size_t> outputs_;
  std::optional<std::size_t> root_;
};

/// Parameter name/value pairs of a node in signature order.
std::vector<std::pair<std::string, std::string>> named_params(const GraphNode& n);

/// Text format:
///
///   tensorgraph v1
///   n0 = input() # params: id=x@64_128
///   n2 = matmul(n0,n1) # params: act=0
///   outputs: n2
TensorGraph parse_graph(std::string_view text);
std::string emit_graph(const TensorGraph& g);

}  // namespace tensorsat
