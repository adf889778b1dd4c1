#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/extract/milp.hpp"
#include "tensorsat/extract/problem.hpp"

namespace tensorsat {

enum class TopoMode { Real, Integer };

std::string to_string(TopoMode m);
TopoMode parse_topo_mode(std::string_view s);

/// Extraction ILP:
///   minimize  sum_i c_i x_i
///   (2)  sum_{i in root class} x_i = 1
///   (3)  x_i <= sum_{j in m} x_j              for each child class m of node i
///   (4)  t_{g(i)} - t_m - eps + A(1 - x_i) >= 0   (real)     or
///        t_{g(i)} - t_m + A(1 - x_i) >= 1         (integer), same pairs as (3)
///   (5)  0 <= t_m <= 1 (real) or t_m in {0..M-1} (integer)
///   x_i = 0 for filter-listed nodes (their (3)/(4) rows are omitted).
/// Only classes reachable from the root are kept; the root class is index 0.
struct ILPModel {
  LinearProgram lp;
  ExtractionProblem problem;              // pruned and re-indexed
  std::vector<std::uint32_t> x_var;       // per problem node
  std::vector<std::int64_t> t_var;        // per problem class, -1 without cycle constraints
  bool with_cycle = false;
  TopoMode topo = TopoMode::Real;
  double epsilon = 0;
  double big_a = 0;
  std::size_t num_classes = 0;            // M

  std::size_t root_constraints = 0;
  std::size_t child_constraints = 0;
  std::size_t topo_constraints = 0;
  std::size_t pin_constraints = 0;
};

ILPModel build_ilp(const ExtractionProblem& p, bool with_cycle, TopoMode topo);

/// Solves with the built-in branch and bound. The greedy extraction seeds the
/// incumbent. Without cycle constraints the result is checked for cycles and
/// ExtractionCycle is thrown if the filter list left one.
ExtractionResult solve_ilp(const ILPModel& model, double time_limit_seconds);

/// Selection from a variable assignment (one node per reachable class,
/// lowest-cost selected node first, then lowest id).
ExtractionResult decode_solution(const ILPModel& model, const std::vector<double>& values);

/// LP-format text (Minimize / Subject To / Bounds / General / Binary / End).
std::string export_lp(const ILPModel& model);

/// Parses `name=value` lines (blank lines and # comments allowed) into a full
/// assignment; variables not mentioned are 0.
std::vector<double> import_solution(const ILPModel& model, std::string_view text);

}  // namespace tensorsat
