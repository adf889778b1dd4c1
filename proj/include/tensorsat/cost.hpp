#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tensorsat/tensor/analysis.hpp"
#include "tensorsat/tensor/graph.hpp"
#include "tensorsat/tensor/ops.hpp"
#include "tensorsat/tensor/value.hpp"

namespace tensorsat {

class UnknownSignature : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CostTableError : public std::runtime_error {
 public:
  CostTableError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Synthetic model, costs in milliseconds:
///   compute ops      launch + per-element or per-MAC work
///   data movement    move_factor * elem per element, no launch cost
///   noop, input, weight, split_0, split_1   0
struct SyntheticCoefficients {
  double launch = 0.01;       // per kernel
  double elem = 1e-6;         // per output element of elementwise/pool ops
  double mac = 1e-8;          // per multiply-accumulate of matmul/conv
  double move_factor = 0.05;  // concat/split/reshape/enlarge/merge relative to elem
};

/// Key of the cost table: `op[k=v,...](d0xd1,...)` with parameters sorted by
/// name and one shape per tensor input.
std::string cost_signature(Op op, std::span<const std::pair<std::string, std::string>> params,
                           std::span<const TensorShape* const> inputs);

/// Canonical form of a signature string (parameters re-sorted); throws
/// std::invalid_argument when malformed.
std::string canonical_signature(std::string_view sig);

class CostModel {
 public:
  static CostModel synthetic(SyntheticCoefficients c = {});
  /// Table mode. Unknown signatures fall back to the synthetic model unless
  /// `strict`, in which case lookups throw UnknownSignature.
  static CostModel load_table(std::string_view text, bool strict = false, SyntheticCoefficients fallback = {});

  double node_cost(Op op, std::span<const std::pair<std::string, std::string>> params,
                   std::span<const TensorShape* const> inputs, const Value& output) const;

  bool is_table() const { return table_mode_; }
  bool strict() const { return strict_; }
  const SyntheticCoefficients& coefficients() const { return coeff_; }
  const std::map<std::string, double>& table() const { return table_; }
  void set(std::string_view signature, double cost_ms);

  /// `signature = cost` lines in key order; load_table(emit_table()) is exact.
  std::string emit_table() const;

 private:
  double synthetic_cost(Op op, std::span<const std::pair<std::string, std::string>> params,
                        std::span<const TensorShape* const> inputs, const Value& output) const;

  SyntheticCoefficients coeff_;
  bool table_mode_ = false;
  bool strict_ = false;
  std::map<std::string, double> table_;
};

double node_cost(const TensorGraph& g, std::size_t id, const CostModel& model);
double graph_cost(const TensorGraph& g, const CostModel& model);

/// Cost per e-node id (0 for parameter literals and dead nodes).
std::vector<double> egraph_costs(const TensorEGraph& g, const CostModel& model);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace tensorsat
