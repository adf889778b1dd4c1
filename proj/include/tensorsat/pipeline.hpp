#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/cost.hpp"
#include "tensorsat/explorer.hpp"
#include "tensorsat/extract/ilp.hpp"
#include "tensorsat/extract/problem.hpp"
#include "tensorsat/rules.hpp"
#include "tensorsat/tensor/graph.hpp"

namespace tensorsat {

enum class Extractor { Greedy, Ilp };

std::string to_string(Extractor e);
Extractor parse_extractor(std::string_view s);

/// Everything one optimization run needs besides its inputs.
struct RunOptions {
  ExploreLimits limits;
  FilterMode filter = FilterMode::Efficient;
  Extractor extractor = Extractor::Ilp;
  bool ilp_cycle_constraints = false;
  TopoMode topo = TopoMode::Real;
  double time_limit_seconds = 60;
  /// Externally solved assignment (`name=value` lines) used instead of the
  /// built-in solver. ILP only.
  std::optional<std::string> solution_text;
  bool want_lp = false;

  /// Throws std::invalid_argument for contradictory settings (ILP without
  /// cycle constraints needs a filter mode other than none).
  void validate() const;
};

struct RunResult {
  TensorGraph optimized;
  double cost_before = 0;
  double cost_after = 0;
  ExploreReport explore;
  ExtractionResult extraction;
  std::size_t egraph_nodes = 0;
  std::size_t egraph_classes = 0;
  std::size_t ilp_variables = 0;
  std::size_t ilp_constraints = 0;
  std::string lp_text;  // filled when want_lp and the extractor is ILP
  double explore_seconds = 0;
  double extract_seconds = 0;
};

/// Parses rule text with the tensor-language validator.
std::vector<RewriteRule> parse_tensor_rules(std::string_view text);

/// Loads, explores, extracts and reconstructs.
RunResult optimize(const TensorGraph& input, const std::vector<RewriteRule>& rules, const CostModel& costs,
                   const RunOptions& options);

/// Builds the extraction ILP for a graph after exploration, without solving.
ILPModel explore_and_build_ilp(const TensorGraph& input, const std::vector<RewriteRule>& rules,
                               const CostModel& costs, const RunOptions& options, ExploreReport* report = nullptr);

/// Flat `key = value` stats; keys starting with `time_` are wall-clock
/// measurements and come last.
std::string format_stats(const RunOptions& options, const TensorGraph& input, const RunResult& r);

// -- benchmark generators ------------------------------------------------------

/// Names accepted by generate_benchmark.
const std::vector<std::string>& benchmark_names();

/// Deterministic generator output for `size` >= 1. With `random_seed` the
/// tensor sizes are drawn from a seeded generator instead of fixed defaults.
TensorGraph generate_benchmark(std::string_view name, int size, std::optional<std::uint64_t> random_seed = {});

// -- ablation ------------------------------------------------------------------

/// `k_multi=1,2`, `extractor=greedy,ilp` or `filter=vanilla,efficient`.
struct Sweep {
  std::string parameter;
  std::vector<std::string> values;
};
Sweep parse_sweep(std::string_view text);

/// One row per setting; failures are recorded in the row and the sweep goes on.
std::string run_ablation(const TensorGraph& input, const std::vector<RewriteRule>& rules, const CostModel& costs,
                         const RunOptions& base, const Sweep& sweep);

}  // namespace tensorsat
