#include <sstream>

#include "doctest.h"
#include "tensorsat/default_rules.hpp"
#include "tensorsat/explorer.hpp"
#include "tensorsat/pipeline.hpp"
#include "tensorsat/tensor/analysis.hpp"

using namespace tensorsat;

namespace {

const char* kShareRule = R"(
matmul-share-input:
  (matmul ?act ?input1 ?input2) ; (matmul ?act ?input1 ?input3)
  => (split_0 (split 1 (matmul ?act ?input1 (concat_2 1 ?input2 ?input3)))) ;
     (split_1 (split 1 (matmul ?act ?input1 (concat_2 1 ?input2 ?input3))))
)";

// Two matmuls reading x; the second also reads the first's result.
TensorGraph dependent_pair() {
  TensorGraph g;
  auto x = g.input("x", {16, 16});
  auto w = g.weight("w", {16, 16});
  auto a = g.add("matmul", {"0"}, {x, w});
  g.add_output(g.add("matmul", {"0"}, {x, a}));
  return g;
}

std::string dump(const TensorEGraph& g) {
  std::ostringstream os;
  g.dump(os);
  return os.str();
}

std::size_t count_op(const TensorEGraph& g, std::string_view op) {
  std::size_t n = 0;
  for (std::uint32_t i = 0; i < g.node_capacity(); ++i) {
    if (g.is_live(NodeId{i}) && g.node(NodeId{i}).op == op) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("explorer") {

TEST_CASE("shared-input matmuls gain split alternatives") {
  auto loaded = load_graph(generate_benchmark("matmul-chain", 2));
  PreparedRules rules(parse_tensor_rules(kShareRule));
  FilterList filter;
  auto report = explore(loaded.egraph, loaded.root, rules, ExploreLimits{}, FilterMode::Efficient, filter);
  CHECK(report.stop == StopReason::Saturated);
  CHECK(report.rules.at("matmul-share-input").applied == 2);  // both orders
  CHECK(report.rules.at("matmul-share-input").skipped_self == 2);
  CHECK(count_op(loaded.egraph, "matmul") == 4);
  CHECK(count_op(loaded.egraph, "split_0") == 2);
  CHECK(filter.empty());
}

TEST_CASE("self combinations are applied when not skipped") {
  auto loaded = load_graph(generate_benchmark("matmul-chain", 2));
  PreparedRules rules(parse_tensor_rules(kShareRule));
  FilterList filter;
  ExploreLimits limits;
  limits.skip_self_combinations = false;
  limits.max_iterations = 1;
  auto report = explore(loaded.egraph, loaded.root, rules, limits, FilterMode::None, filter);
  CHECK(report.rules.at("matmul-share-input").matches == 4);
  CHECK(report.rules.at("matmul-share-input").applied == 4);
  CHECK(count_op(loaded.egraph, "matmul") == 6);
}

TEST_CASE("limits stop exploration") {
  PreparedRules rules(parse_tensor_rules(default_rules_text()));
  {
    auto loaded = load_graph(generate_benchmark("matmul-chain", 4));
    FilterList filter;
    ExploreLimits limits;
    limits.node_limit = 30;
    auto report = explore(loaded.egraph, loaded.root, rules, limits, FilterMode::Efficient, filter);
    CHECK(report.stop == StopReason::NodeLimit);
    CHECK(report.iterations == 1);
  }
  {
    auto loaded = load_graph(generate_benchmark("rnn-cell-stack", 2));
    FilterList filter;
    ExploreLimits limits;
    limits.max_iterations = 1;
    auto report = explore(loaded.egraph, loaded.root, rules, limits, FilterMode::Efficient, filter);
    CHECK(report.stop == StopReason::IterationLimit);
  }
  {
    auto loaded = load_graph(generate_benchmark("matmul-chain", 2));
    FilterList filter;
    ExploreLimits limits;
    limits.multi_iterations = 3;
    limits.max_iterations = 2;
    CHECK_THROWS_AS(explore(loaded.egraph, loaded.root, rules, limits, FilterMode::Efficient, filter),
                    std::invalid_argument);
  }
}

TEST_CASE("shape checking blocks ill-typed targets") {
  TensorGraph g;
  auto x = g.input("x", {8, 16});
  auto w = g.weight("w", {16, 4});
  g.add_output(g.add("matmul", {"0"}, {x, w}));
  auto loaded = load_graph(g);
  PreparedRules rules(parse_tensor_rules("swap:\n (matmul ?a ?x ?w) => (matmul ?a ?w ?x)\n"));
  FilterList filter;
  auto report = explore(loaded.egraph, loaded.root, rules, ExploreLimits{}, FilterMode::None, filter);
  CHECK(report.rules.at("swap").skipped_shape == 1);
  CHECK(report.rules.at("swap").applied == 0);
}

TEST_CASE("a dependent matmul pair closes a cycle unless filtered") {
  PreparedRules rules(parse_tensor_rules(kShareRule));
  for (FilterMode mode : {FilterMode::None, FilterMode::Vanilla, FilterMode::Efficient}) {
    CAPTURE(to_string(mode));
    auto loaded = load_graph(dependent_pair());
    FilterList filter;
    ExploreLimits limits;
    limits.max_iterations = 1;
    auto report = explore(loaded.egraph, loaded.root, rules, limits, mode, filter);
    auto cycles = dfs_get_cycles(loaded.egraph, filter, loaded.root);
    if (mode == FilterMode::None) {
      CHECK(report.rules.at("matmul-share-input").applied == 2);
      CHECK_FALSE(cycles.empty());
    } else {
      CHECK(report.rules.at("matmul-share-input").skipped_cycle == 2);
      CHECK(cycles.empty());
    }
  }
}

TEST_CASE("exploration is deterministic") {
  PreparedRules rules(parse_tensor_rules(default_rules_text()));
  std::string first;
  for (int run = 0; run < 2; ++run) {
    auto loaded = load_graph(generate_benchmark("rnn-cell-stack", 2));
    FilterList filter;
    ExploreLimits limits;
    limits.max_iterations = 3;
    explore(loaded.egraph, loaded.root, rules, limits, FilterMode::Efficient, filter);
    if (run == 0) {
      first = dump(loaded.egraph);
    } else {
      CHECK(dump(loaded.egraph) == first);
    }
  }
}

TEST_CASE("stats list one entry per rule and wall-clock last") {
  auto loaded = load_graph(generate_benchmark("matmul-chain", 2));
  PreparedRules rules(parse_tensor_rules(kShareRule));
  FilterList filter;
  auto report = explore(loaded.egraph, loaded.root, rules, ExploreLimits{}, FilterMode::Efficient, filter);
  std::string s = report.to_stats();
  CHECK(s.find("rule.matmul-share-input.applied = 2\n") != std::string::npos);
  CHECK(s.find("explore.stop = saturated\n") != std::string::npos);
  auto last = s.rfind('\n', s.size() - 2);
  CHECK(s.compare(last + 1, 5, "time_") == 0);
}

}  // TEST_SUITE
