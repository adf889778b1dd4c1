#include <random>

#include "doctest.h"
#include "support/fuzz.hpp"
#include "tensorsat/tensor/analysis.hpp"
#include "tensorsat/tensor/graph.hpp"
#include "tensorsat/tensor/value.hpp"

using namespace tensorsat;

namespace {

Value lit(std::string s) { return Literal{std::move(s)}; }
Value shape(std::vector<std::int64_t> d) { return TensorShape(std::move(d)); }

Value run(std::string_view op, std::vector<Value> args) {
  std::vector<const Value*> ptrs;
  for (const auto& a : args) ptrs.push_back(&a);
  return infer(*parse_op(op), ptrs);
}

TensorShape as_shape(const Value& v) { return std::get<TensorShape>(v); }

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("operator symbols") {
  CHECK(symbol(*parse_op("concat_3")) == "concat_3");
  CHECK_FALSE(parse_op("concat_1"));
  CHECK_FALSE(parse_op("concat_03"));
  CHECK_FALSE(parse_op("gemm"));
  CHECK(tensor_arity(*parse_op("conv")) == 2);
  CHECK(tensor_arity(*parse_op("concat_4")) == 4);
}

TEST_CASE("matmul shapes") {
  CHECK(as_shape(run("matmul", {lit("0"), shape({64, 128}), shape({128, 32})})).dims ==
        std::vector<std::int64_t>{64, 32});
  CHECK(as_shape(run("matmul", {lit("1"), shape({4, 64, 128}), shape({4, 128, 32})})).dims ==
        std::vector<std::int64_t>{4, 64, 32});
  CHECK_THROWS_AS(run("matmul", {lit("0"), shape({64, 128}), shape({64, 32})}), ShapeError);
  CHECK_THROWS_AS(run("matmul", {lit("0"), shape({2, 64, 128}), shape({128, 32})}), ShapeError);
  CHECK_THROWS_AS(run("matmul", {lit("7"), shape({64, 128}), shape({128, 32})}), ShapeError);
}

TEST_CASE("conv output extents match a sliding-window count") {
  // Oracle: count window positions directly.
  auto positions = [](std::int64_t h, std::int64_t k, std::int64_t s, bool same) {
    std::int64_t n = 0;
    for (std::int64_t p = 0;; ++p) {
      std::int64_t start = p * s;
      if (same ? start >= h : start + k > h) break;
      ++n;
    }
    return n;
  };
  for (std::int64_t h : {5, 7, 8, 16}) {
    for (std::int64_t k : {1, 3, 5}) {
      for (std::int64_t s : {1, 2, 3}) {
        for (int pad : {0, 1}) {
          if (pad == 1 && k > h) continue;
          auto out = as_shape(run("conv", {lit(std::to_string(s)), lit(std::to_string(s)), lit(std::to_string(pad)),
                                           lit("0"), shape({2, 6, h, h + 1}), shape({4, 3, k, k})}));
          CHECK(out.dims[0] == 2);
          CHECK(out.dims[1] == 4);
          CHECK(out.dims[2] == positions(h, k, s, pad == 0));
          CHECK(out.dims[3] == positions(h + 1, k, s, pad == 0));
        }
      }
    }
  }
  // Grouped: 6 input channels, weight sees 3 -> 2 groups; 5 filters do not divide.
  CHECK_THROWS_AS(run("conv", {lit("1"), lit("1"), lit("0"), lit("0"), shape({1, 6, 8, 8}), shape({5, 3, 3, 3})}),
                  ShapeError);
  CHECK_THROWS_AS(run("conv", {lit("1"), lit("1"), lit("0"), lit("0"), shape({1, 6, 8, 8}), shape({4, 4, 3, 3})}),
                  ShapeError);
}

TEST_CASE("concat records a split origin that split consumes") {
  Value c = run("concat_2", {lit("1"), shape({8, 3}), shape({8, 5})});
  auto cs = as_shape(c);
  CHECK(cs.dims == std::vector<std::int64_t>{8, 8});
  CHECK(cs.splits[1] == std::vector<std::int64_t>{3});
  Value t = run("split", {lit("1"), c});
  auto& tt = std::get<TensorTuple>(t);
  CHECK(tt.first.dims == std::vector<std::int64_t>{8, 3});
  CHECK(tt.second.dims == std::vector<std::int64_t>{8, 5});
  CHECK(as_shape(run("split_1", {t})).dims == std::vector<std::int64_t>{8, 5});
  CHECK_THROWS_AS(run("split", {lit("0"), c}), MissingSplitOrigin);
  CHECK_THROWS_AS(run("split", {lit("1"), shape({8, 8})}), MissingSplitOrigin);
}

TEST_CASE("nested concats split back in reverse order") {
  Value inner = run("concat_2", {lit("0"), shape({2, 4}), shape({3, 4})});
  Value outer = run("concat_2", {lit("0"), inner, shape({1, 4})});
  auto t1 = std::get<TensorTuple>(run("split", {lit("0"), outer}));
  CHECK(t1.first.dims[0] == 5);
  CHECK(t1.second.dims[0] == 1);
  auto t2 = std::get<TensorTuple>(run("split", {lit("0"), t1.first}));
  CHECK(t2.first.dims[0] == 2);
  CHECK(t2.second.dims[0] == 3);
}

TEST_CASE("concat_3 splits at the first boundary first") {
  Value c = run("concat_3", {lit("1"), shape({2, 1}), shape({2, 2}), shape({2, 3})});
  auto t = std::get<TensorTuple>(run("split", {lit("1"), c}));
  CHECK(t.first.dims[1] == 1);
  CHECK(t.second.dims[1] == 5);
  auto t2 = std::get<TensorTuple>(run("split", {lit("1"), Value{t.second}}));
  CHECK(t2.first.dims[1] == 2);
  CHECK(t2.second.dims[1] == 3);
}

TEST_CASE("matmul keeps the split origin of the weight's last axis") {
  Value w = run("concat_2", {lit("1"), shape({16, 4}), shape({16, 6})});
  Value m = run("matmul", {lit("0"), shape({8, 16}), w});
  auto t = std::get<TensorTuple>(run("split", {lit("1"), m}));
  CHECK(t.first.dims == std::vector<std::int64_t>{8, 4});
  CHECK(t.second.dims == std::vector<std::int64_t>{8, 6});
}

TEST_CASE("conv carries the weight's output-channel origin to axis 1") {
  Value w = run("concat_2", {lit("0"), shape({4, 3, 3, 3}), shape({2, 3, 3, 3})});
  Value c = run("conv", {lit("1"), lit("1"), lit("0"), lit("0"), shape({1, 3, 8, 8}), w});
  auto t = std::get<TensorTuple>(run("split", {lit("1"), c}));
  CHECK(t.first.dims[1] == 4);
  CHECK(t.second.dims[1] == 2);
}

TEST_CASE("enlarge, merge, transpose, reshape, pool") {
  CHECK(as_shape(run("enlarge", {shape({4, 3, 1, 1}), shape({8, 3, 5, 3})})).dims ==
        std::vector<std::int64_t>{4, 3, 5, 3});
  CHECK_THROWS_AS(run("enlarge", {shape({4, 3, 5, 5}), shape({8, 3, 3, 3})}), ShapeError);
  CHECK(as_shape(run("merge", {shape({8, 3, 3, 3}), lit("2")})).dims == std::vector<std::int64_t>{8, 6, 3, 3});
  CHECK_THROWS_AS(run("merge", {shape({7, 3, 3, 3}), lit("2")}), ShapeError);
  CHECK(as_shape(run("transpose", {shape({2, 3, 4}), lit("2_0_1")})).dims == std::vector<std::int64_t>{4, 2, 3});
  CHECK_THROWS_AS(run("transpose", {shape({2, 3}), lit("0_0")}), ShapeError);
  CHECK(as_shape(run("reshape", {shape({2, 3, 4}), lit("6_4")})).dims == std::vector<std::int64_t>{6, 4});
  CHECK_THROWS_AS(run("reshape", {shape({2, 3, 4}), lit("5_4")}), ShapeError);
  CHECK(as_shape(run("poolmax", {shape({1, 3, 8, 8}), lit("2"), lit("2"), lit("2"), lit("2"), lit("1"), lit("0")}))
            .dims == std::vector<std::int64_t>{1, 3, 4, 4});
}

TEST_CASE("element-wise ops need equal shapes") {
  CHECK(as_shape(run("ewadd", {shape({2, 3}), shape({2, 3})})).dims == std::vector<std::int64_t>{2, 3});
  CHECK_THROWS_AS(run("ewadd", {shape({2, 3}), shape({3, 2})}), ShapeError);
}

TEST_CASE("join is commutative and associative on split stacks") {
  std::mt19937_64 rng(3);
  auto random_shape = [&] {
    TensorShape s({6, 6});
    for (auto& st : s.splits) {
      std::size_t n = rng() % 3;
      for (std::size_t i = 0; i < n; ++i) st.push_back(1 + static_cast<std::int64_t>(rng() % 5));
    }
    return Value{s};
  };
  for (int i = 0; i < 300; ++i) {
    Value a = random_shape(), b = random_shape(), c = random_shape();
    Value ab = a, ba = b;
    join(ab, b);
    join(ba, a);
    CHECK(ab == ba);
    Value ab_c = ab, bc = b;
    join(ab_c, c);
    join(bc, c);
    Value a_bc = a;
    join(a_bc, bc);
    CHECK(ab_c == a_bc);
    Value aa = a;
    CHECK_FALSE(join(aa, a));
  }
  Value x = shape({2, 3});
  CHECK_THROWS_AS(join(x, shape({3, 2})), ShapeError);
}

TEST_CASE("graph text round-trips") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    TensorGraph g = testing::random_tensor_graph(rng, 8);
    std::string text = emit_graph(g);
    TensorGraph back = parse_graph(text);
    CHECK(back == g);
    CHECK(emit_graph(back) == text);
  }
}

TEST_CASE("graph parse errors carry line numbers") {
  try {
    parse_graph("tensorgraph v1\nn0 = input() # params: id=x@4_4\nn1 = relu(n7)\noutputs: n1\n");
    FAIL("expected an error");
  } catch (const GraphSyntaxError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_graph("tensorgraph v2\n"), GraphError);
  CHECK_THROWS_AS(parse_graph("tensorgraph v1\nn0 = input() # params: id=x@4_4\n"), GraphError);
  try {
    parse_graph(
        "tensorgraph v1\nn0 = input() # params: id=x@4_4\nn1 = input() # params: id=y@5_4\nn2 = ewadd(n0,n1)\n"
        "outputs: n2\n");
    FAIL("expected a shape error");
  } catch (const GraphSyntaxError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("single-rooting and noop stripping are inverse") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 30; ++i) {
    TensorGraph g = testing::random_tensor_graph(rng, 6);
    TensorGraph r = g.make_single_rooted();
    CHECK(r.outputs().size() == 1);
    CHECK(r.root().has_value());
    CHECK(r.strip_noops().canonical() == g.canonical());
  }
}

TEST_CASE("load and reconstruct without rewrites gives the input back") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 30; ++i) {
    TensorGraph g = testing::random_tensor_graph(rng, 7);
    auto loaded = load_graph(g);
    auto& eg = loaded.egraph;
    Selection sel;
    for (ClassId c : eg.class_ids()) sel[c] = eg.eclass(c).nodes.front();
    CHECK(reconstruct(eg, sel, loaded.root).canonical() == g.canonical());
  }
}

TEST_CASE("reconstruct rejects cyclic and incomplete selections") {
  TensorGraph g;
  auto x = g.input("x", {4, 4});
  auto r = g.add("relu", {}, {x});
  g.add_output(g.add("relu", {}, {r}));
  auto loaded = load_graph(g);
  auto& eg = loaded.egraph;
  ClassId rx = eg.class_of(*eg.lookup(ENode{"relu", {eg.class_of(*eg.lookup(ENode{"input", {eg.class_of(
                                                                        *eg.lookup(ENode{"x@4_4", {}}))}}))}}));
  eg.merge(rx, loaded.root);
  eg.rebuild();
  Selection sel;
  for (ClassId c : eg.class_ids()) sel[c] = eg.eclass(c).nodes.back();
  CHECK_THROWS_AS(reconstruct(eg, sel, loaded.root), CycleDetected);
  Selection partial;
  partial[eg.find(loaded.root)] = eg.eclass(loaded.root).nodes.front();
  CHECK_THROWS_AS(reconstruct(eg, partial, loaded.root), DanglingClass);
}

}  // TEST_SUITE
