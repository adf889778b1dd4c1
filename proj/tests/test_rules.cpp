#include "doctest.h"
#include "tensorsat/default_rules.hpp"
#include "tensorsat/explorer.hpp"
#include "tensorsat/pipeline.hpp"
#include "tensorsat/rules.hpp"
#include "tensorsat/tensor/analysis.hpp"

using namespace tensorsat;

TEST_SUITE("rules") {

TEST_CASE("parse single, multi and bidirectional rules") {
  auto rules = parse_rules(R"(
# comment
comm:
  (f ?x ?y) => (f ?y ?x)
pair:
  (g ?a ?b) ; (g ?a ?c)
  => (h ?a ?b) ;
     (h ?a ?c)
both:
  (k ?x) <=> (m ?x)
)");
  REQUIRE(rules.size() == 4);
  CHECK(rules[0].name == "comm");
  CHECK_FALSE(rules[0].is_multi());
  CHECK(rules[1].is_multi());
  CHECK(rules[1].sources.size() == 2);
  CHECK(rules[1].shared_variables() == std::vector<std::string>{"?a"});
  CHECK(rules[2].name == "both");
  CHECK(rules[3].name == "both-rev");
  CHECK(to_string(rules[3].sources[0]) == "(m ?x)");
}

TEST_CASE("rule errors name the line") {
  auto line_of = [](const char* text) -> std::size_t {
    try {
      parse_rules(text);
    } catch (const RuleParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("r:\n  (f ?x)\n") == 1);                        // no arrow
  CHECK(line_of("a:\n (f ?x) => ?x\nb:\n (f ?x => (g ?x)\n") == 3);  // unbalanced
  CHECK(line_of("r:\n (f ?x) ; (f ?y) => (g ?x)\n") == 1);      // arity mismatch
  CHECK(line_of("r:\n (f ?x) => (g ?y)\n") == 1);               // unbound variable
  CHECK(line_of("r:\n ?x => (g ?x)\n") == 1);                   // bare source
  CHECK(line_of("(f ?x) => (g ?x)\n") == 1);                    // no name
  CHECK(line_of("r:\n (f ?x) => ?x\nr:\n (g ?x) => ?x\n") == 3);  // duplicate name
}

TEST_CASE("tensor validator rejects malformed patterns") {
  CHECK_THROWS_AS(parse_tensor_rules("r:\n (gemm ?x ?y) => ?x\n"), RuleParseError);
  CHECK_THROWS_AS(parse_tensor_rules("r:\n (relu ?x ?y) => ?x\n"), RuleParseError);
  CHECK_THROWS_AS(parse_tensor_rules("r:\n (noop ?x ?y) => (noop ?y ?x)\n"), RuleParseError);
  CHECK_THROWS_AS(parse_tensor_rules("r:\n (matmul (relu ?a) ?x ?w) => ?x\n"), RuleParseError);
  CHECK_THROWS_AS(parse_tensor_rules("r:\n (matmul 0 ?x ?w) => (matmul ?a ?x ?w)\n"), RuleParseError);
  CHECK(parse_tensor_rules("r:\n (matmul 0 ?x ?w) => (matmul 1 ?x ?w)\n").size() == 1);
}

TEST_CASE("default ruleset parses and shares canonical multi sources") {
  auto rules = parse_tensor_rules(default_rules_text());
  CHECK(rules.size() == 17);
  PreparedRules prepared(rules);
  CHECK(prepared.multi.size() == 3);
  CHECK(prepared.single.size() == 14);
  // matmul-share-input and conv-share-input each search one pattern for both
  // sources; the enlarge variant has its own (pad fixed to 0).
  CHECK(prepared.canonical_sources.size() == 3);
  for (const auto& m : prepared.multi) {
    if (m.rule->name == "matmul-share-input") CHECK(m.canonical_index[0] == m.canonical_index[1]);
  }
}

TEST_CASE("canonicalize renames in first-occurrence order") {
  auto c = canonicalize(parse_pattern("(matmul ?act ?input1 (relu ?input1) ?w)"));
  CHECK(to_string(c.pattern) == "(matmul ?v0 ?v1 (relu ?v1) ?v2)");
  CHECK(c.rename_map.at("?w") == "?v2");
}

TEST_CASE("compatible and combine") {
  Bindings a{{"?x", ClassId{1}}, {"?y", ClassId{2}}};
  Bindings b{{"?x", ClassId{1}}, {"?z", ClassId{3}}};
  Bindings c{{"?x", ClassId{4}}};
  std::vector<Bindings> ab{a, b}, ac{a, c};
  CHECK(compatible(ab));
  CHECK_FALSE(compatible(ac));
  CHECK(combine(ab).size() == 3);
}

TEST_CASE("shape check rejects target instantiations that do not infer") {
  TensorGraph g;
  auto x = g.input("x", {8, 16});
  auto w1 = g.weight("w1", {16, 4});
  auto y = g.input("y", {8, 16});
  auto w2 = g.weight("w2", {16, 4});
  g.add_output(g.add("matmul", {"0"}, {x, w1}));
  g.add_output(g.add("matmul", {"0"}, {y, w2}));
  auto loaded = load_graph(g);
  auto rules = parse_tensor_rules(R"(
merge:
  (ewadd (matmul 0 ?x ?w1) (matmul 0 ?y ?w2))
  => (matmul 0 (concat_2 1 ?x ?y) (concat_2 0 ?w1 ?w2))
bad:
  (matmul ?a ?x ?w) => (matmul ?a ?w ?x)
)");
  auto& eg = loaded.egraph;
  auto ms = eg.ematch(rules[1].sources[0]);
  REQUIRE(ms.size() == 2);
  for (const auto& m : ms) CHECK_FALSE(shape_check(eg, rules[1], m.bindings));
}

}  // TEST_SUITE
