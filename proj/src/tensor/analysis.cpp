#include "tensorsat/tensor/analysis.hpp"

#include <functional>

namespace tensorsat {

std::optional<Value> TensorAnalysis::try_make(std::string_view op, std::span<const Value* const> kids,
                                              std::string* why) const {
  if (kids.empty()) return Literal{std::string(op)};
  auto parsed = parse_op(op);
  if (!parsed) {
    if (why) *why = "unknown operator '" + std::string(op) + "'";
    return std::nullopt;
  }
  try {
    return infer(*parsed, kids);
  } catch (const ShapeError& e) {
    if (why) *why = e.what();
    return std::nullopt;
  }
}

bool TensorAnalysis::merge(Value& into, const Value& other) const {
  try {
    return join(into, other);
  } catch (const ShapeError& e) {
    throw AnalysisConflict(e.what());
  }
}

void validate_tensor_pattern(const Pattern& p) {
  if (p.is_var() || p.children.empty()) return;
  auto op = parse_op(p.symbol);
  if (!op) throw std::invalid_argument("unknown operator '" + p.symbol + "'");
  if (op->kind == OpKind::Noop) throw std::invalid_argument("noop may not appear in rewrite rules");
  const Signature& sig = signature(*op);
  if (p.children.size() != sig.args.size()) {
    throw std::invalid_argument(p.symbol + " takes " + std::to_string(sig.args.size()) + " arguments, got " +
                                std::to_string(p.children.size()));
  }
  for (std::size_t i = 0; i < sig.args.size(); ++i) {
    const Pattern& c = p.children[i];
    ValueKind k = sig.args[i].kind;
    bool literal = !c.is_var() && c.children.empty();
    if (k == ValueKind::S || k == ValueKind::N) {
      if (!c.is_var() && !literal) {
        throw std::invalid_argument(p.symbol + " argument " + std::to_string(i) + " must be a parameter");
      }
      if (literal && k == ValueKind::N) {
        try {
          parse_int(c.symbol, sig.args[i].param);
        } catch (const ShapeError& e) {
          throw std::invalid_argument(e.what());
        }
      }
    } else {
      if (literal) throw std::invalid_argument(p.symbol + " argument " + std::to_string(i) + " must be a tensor");
      validate_tensor_pattern(c);
    }
  }
}

LoadedGraph load_graph(const TensorGraph& input) {
  TensorGraph g = input.root() ? input : input.make_single_rooted();
  LoadedGraph out;
  std::vector<ClassId> cls(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const GraphNode& n = g.node(i);
    std::vector<ClassId> kids;
    std::size_t pi = 0, ti = 0;
    for (const auto& a : signature(n.op).args) {
      if (a.kind == ValueKind::S || a.kind == ValueKind::N) {
        kids.push_back(out.egraph.add(n.params[pi++]));
      } else {
        kids.push_back(cls[n.inputs[ti++]]);
      }
    }
    cls[i] = out.egraph.add(symbol(n.op), std::move(kids));
  }
  out.root = cls[*g.root()];
  return out;
}

TensorGraph reconstruct(const TensorEGraph& g, const Selection& sel, ClassId root) {
  TensorGraph out;
  std::map<ClassId, std::size_t> built;
  std::map<ClassId, int> state;  // 1 = in progress
  std::function<std::size_t(ClassId)> build = [&](ClassId c) -> std::size_t {
    c = g.find(c);
    if (auto it = built.find(c); it != built.end()) return it->second;
    if (state[c] == 1) throw CycleDetected("selection contains a cycle through class " + std::to_string(c.value));
    auto s = sel.find(c);
    if (s == sel.end()) throw DanglingClass("no e-node selected for class " + std::to_string(c.value));
    state[c] = 1;
    const ENode& n = g.node(s->second);
    auto op = parse_op(n.op);
    if (!op || n.children.empty()) throw GraphError("class " + std::to_string(c.value) + " selects a parameter");
    std::vector<std::string> params;
    std::vector<std::size_t> inputs;
    const Signature& sig = signature(*op);
    for (std::size_t i = 0; i < sig.args.size(); ++i) {
      ClassId k = g.find(n.children[i]);
      if (sig.args[i].kind == ValueKind::S || sig.args[i].kind == ValueKind::N) {
        const auto* lit = std::get_if<Literal>(&g.data(k));
        if (!lit) throw GraphError("parameter class " + std::to_string(k.value) + " holds no literal");
        params.push_back(lit->text);
      } else {
        inputs.push_back(build(k));
      }
    }
    std::size_t id = out.add(*op, std::move(params), std::move(inputs));
    state[c] = 2;
    built.emplace(c, id);
    return id;
  };
  std::size_t r = build(root);
  out.add_output(r);
  return out.strip_noops();
}

}  // namespace tensorsat
