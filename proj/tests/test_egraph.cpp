#include <random>
#include <set>

#include "doctest.h"
#include "support/fuzz.hpp"
#include "tensorsat/egraph.hpp"
#include "tensorsat/explorer.hpp"
#include "tensorsat/pattern.hpp"
#include "tensorsat/rules.hpp"
#include "tensorsat/union_find.hpp"

using namespace tensorsat;

TEST_SUITE("egraph") {

TEST_CASE("union-find keeps the smaller id as root") {
  UnionFind uf;
  for (int i = 0; i < 5; ++i) uf.make_set();
  CHECK(uf.unite(ClassId{3}, ClassId{1}) == ClassId{1});
  CHECK(uf.unite(ClassId{4}, ClassId{3}) == ClassId{1});
  CHECK(uf.find(ClassId{4}) == ClassId{1});
  CHECK(uf.find(ClassId{2}) == ClassId{2});
}

TEST_CASE("pattern parse and print round-trip") {
  auto p = parse_pattern("  (/ (* ?a 2)  2) ");
  CHECK(to_string(p) == "(/ (* ?a 2) 2)");
  CHECK(p.variables() == std::vector<std::string>{"?a"});
  CHECK(p.depth() == 3);
  CHECK_THROWS_AS(parse_pattern("(a b"), SexprError);
  CHECK_THROWS_AS(parse_pattern("(a) b"), SexprError);
}

TEST_CASE("term (a*2)/2 and the strength-reduction rewrite") {
  EGraph<> g;
  ClassId root = g.add_expr(parse_pattern("(/ (* a 2) 2)"));
  CHECK(g.num_classes() == 4);  // a, 2, a*2, (a*2)/2: the literal 2 is shared
  CHECK(g.num_nodes() == 4);

  auto matches = g.ematch(parse_pattern("(* ?x 2)"));
  REQUIRE(matches.size() == 1);
  ClassId shl = g.add_instantiation(parse_pattern("(<< ?x 1)"), matches[0].bindings);
  g.merge(shl, matches[0].eclass);
  g.rebuild();
  CHECK(g.num_classes() == 5);
  CHECK(g.num_nodes() == 6);
  CHECK(g.represented_terms(root, 8) == std::set<std::string>{"(/ (* a 2) 2)", "(/ (<< a 1) 2)"});
}

TEST_CASE("hashconsing returns the existing class") {
  EGraph<> g;
  ClassId a = g.add("a");
  ClassId f1 = g.add("f", {a});
  ClassId f2 = g.add("f", {a});
  CHECK(f1 == f2);
  CHECK(g.num_nodes() == 2);
}

TEST_CASE("congruence closure matches a naive fixpoint oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    EGraph<> g;
    std::vector<ClassId> cls;
    std::vector<ENode> terms;  // node per creation, children as creation indices
    std::vector<std::vector<std::size_t>> kid_index;
    std::vector<std::string> ops;
    int leaves = 3;
    for (int i = 0; i < leaves; ++i) {
      ops.push_back("l" + std::to_string(i));
      kid_index.push_back({});
      cls.push_back(g.add(ops.back()));
    }
    for (int i = 0; i < 15; ++i) {
      std::string op = (rng() & 1) ? "f" : "g";
      std::size_t arity = 1 + rng() % 2;
      std::vector<std::size_t> kids;
      std::vector<ClassId> kc;
      for (std::size_t k = 0; k < arity; ++k) {
        kids.push_back(rng() % cls.size());
        kc.push_back(cls[kids.back()]);
      }
      ops.push_back(op);
      kid_index.push_back(kids);
      cls.push_back(g.add(op, kc));
    }
    std::vector<std::pair<std::size_t, std::size_t>> unions;
    for (int i = 0; i < 3; ++i) {
      auto a = rng() % cls.size(), b = rng() % cls.size();
      unions.emplace_back(a, b);
      g.merge(cls[a], cls[b]);
    }
    g.rebuild();

    // Oracle: union-find over term indices, closed under congruence by
    // repeated full passes.
    std::vector<std::size_t> parent(cls.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = root(parent[x]);
    };
    for (auto [a, b] : unions) parent[root(a)] = root(b);
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < cls.size(); ++i) {
        for (std::size_t j = i + 1; j < cls.size(); ++j) {
          if (root(i) == root(j) || ops[i] != ops[j] || kid_index[i].size() != kid_index[j].size()) continue;
          bool same = true;
          for (std::size_t k = 0; k < kid_index[i].size(); ++k) {
            same = same && root(kid_index[i][k]) == root(kid_index[j][k]);
          }
          if (same) {
            parent[root(i)] = root(j);
            changed = true;
          }
        }
      }
    }
    for (std::size_t i = 0; i < cls.size(); ++i) {
      for (std::size_t j = 0; j < cls.size(); ++j) {
        CHECK((g.find(cls[i]) == g.find(cls[j])) == (root(i) == root(j)));
      }
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < cls.size(); ++i) roots.insert(root(i));
    CHECK(g.num_classes() == roots.size());
  }
}

TEST_CASE("ematch agrees with brute-force enumeration of bindings") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> patterns{"(f ?x)", "(f ?x ?y)", "(f ?x ?x)", "(g (f ?x) ?y)", "(f (g ?x ?y) ?x)",
                                          "?x", "(h ?x)"};
  for (int trial = 0; trial < 60; ++trial) {
    auto rg = testing::random_egraph(rng, 8);
    auto& g = rg.g;
    auto ids = g.class_ids();
    for (const auto& text : patterns) {
      Pattern p = parse_pattern(text);
      auto vars = p.variables();
      // Lookup-based instantiation check, independent of the matcher.
      std::function<std::optional<ClassId>(const Pattern&, const Bindings&)> inst =
          [&](const Pattern& q, const Bindings& s) -> std::optional<ClassId> {
        if (q.is_var()) return s.at(q.symbol);
        ENode n{q.symbol, {}};
        for (const auto& c : q.children) {
          auto k = inst(c, s);
          if (!k) return std::nullopt;
          n.children.push_back(*k);
        }
        auto id = g.lookup(n);
        if (!id) return std::nullopt;
        return g.class_of(*id);
      };
      std::set<std::pair<ClassId, Bindings>> expected;
      std::vector<std::size_t> pick(vars.size(), 0);
      for (;;) {
        Bindings s;
        for (std::size_t v = 0; v < vars.size(); ++v) s[vars[v]] = ids[pick[v]];
        if (auto c = inst(p, s)) expected.emplace(*c, s);
        std::size_t v = 0;
        while (v < pick.size() && ++pick[v] == ids.size()) pick[v++] = 0;
        if (v == pick.size()) break;
      }
      std::set<std::pair<ClassId, Bindings>> got;
      for (const auto& m : g.ematch(p)) got.emplace(m.eclass, m.bindings);
      CHECK(got == expected);
    }
  }
}

TEST_CASE("filtered e-nodes are invisible to ematch") {
  EGraph<> g;
  ClassId a = g.add("a");
  ClassId b = g.add("b");
  ClassId fa = g.add("f", {a});
  ClassId fb = g.add("f", {b});
  g.merge(fa, fb);
  g.rebuild();
  FilterList filter;
  filter.insert(*g.lookup(ENode{"f", {b}}));
  auto ms = g.ematch(parse_pattern("(f ?x)"), &filter);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].bindings.at("?x") == a);
  CHECK(g.ematch(parse_pattern("(f ?x)")).size() == 2);
}

TEST_CASE("ematch requires a rebuilt e-graph") {
  EGraph<> g;
  g.merge(g.add("a"), g.add("b"));
  CHECK_THROWS_AS(g.ematch(parse_pattern("?x")), std::logic_error);
}

TEST_CASE("toy algebra saturates and (a*2)/2 simplifies to a") {
  auto rules = parse_rules(R"(
mul2-shl:
  (* ?x 2) => (<< ?x 1)
reassoc:
  (/ (* ?x ?y) ?z) => (* ?x (/ ?y ?z))
div-self:
  (/ ?x ?x) => 1
mul-one:
  (* ?x 1) => ?x
)");
  EGraph<> g;
  ClassId root = g.add_expr(parse_pattern("(/ (* a 2) 2)"));
  PreparedRules prepared(rules);
  FilterList filter;
  auto report = explore(g, root, prepared, ExploreLimits{}, FilterMode::None, filter);
  CHECK(report.stop == StopReason::Saturated);
  CHECK(g.find(root) == g.class_of(*g.lookup(ENode{"a", {}})));
  CHECK(g.represented_terms(root, 1).count("a") == 1);

  auto again = explore(g, root, prepared, ExploreLimits{}, FilterMode::None, filter);
  std::size_t applied = 0;
  for (const auto& [name, s] : again.rules) applied += s.applied;
  CHECK(applied == 0);
  CHECK(again.iterations == 1);
}

}  // TEST_SUITE
