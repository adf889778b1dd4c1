#include "tensorsat/tensor/graph.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace tensorsat {

namespace {

std::string node_name(std::size_t id) { return "n" + std::to_string(id); }

}  // namespace

std::size_t TensorGraph::add(Op op, std::vector<std::string> params, std::vector<std::size_t> inputs) {
  const Signature& sig = signature(op);
  std::size_t id = nodes_.size();
  auto where = [&] { return "node " + node_name(id) + " (" + symbol(op) + "): "; };
  if (params.size() + inputs.size() != sig.args.size()) {
    throw GraphError(where() + "expected " + std::to_string(sig.args.size()) + " arguments, got " +
                     std::to_string(params.size() + inputs.size()));
  }
  std::vector<Value> literal_values;
  literal_values.reserve(params.size());
  for (const auto& p : params) literal_values.push_back(Literal{p});
  std::vector<const Value*> args;
  std::size_t pi = 0, ti = 0;
  for (const auto& a : sig.args) {
    if (a.kind == ValueKind::S || a.kind == ValueKind::N) {
      if (pi >= params.size()) throw GraphError(where() + "missing parameter '" + std::string(a.param) + "'");
      args.push_back(&literal_values[pi++]);
    } else {
      if (ti >= inputs.size()) throw GraphError(where() + "missing tensor input");
      if (inputs[ti] >= id) throw GraphError(where() + "input " + node_name(inputs[ti]) + " is not defined earlier");
      args.push_back(&nodes_[inputs[ti++]].value);
    }
  }
  if (pi != params.size() || ti != inputs.size()) throw GraphError(where() + "argument kinds do not match signature");
  Value v;
  try {
    v = infer(op, args);
  } catch (const ShapeError& e) {
    throw GraphError(where() + e.what());
  }
  nodes_.push_back(GraphNode{op, std::move(params), std::move(inputs), std::move(v)});
  return id;
}

std::size_t TensorGraph::add(std::string_view op_symbol, std::vector<std::string> params,
                             std::vector<std::size_t> inputs) {
  auto op = parse_op(op_symbol);
  if (!op) throw GraphError("unknown operator '" + std::string(op_symbol) + "'");
  return add(*op, std::move(params), std::move(inputs));
}

std::size_t TensorGraph::input(std::string_view name, const std::vector<std::int64_t>& dims) {
  return add(Op{OpKind::Input}, {std::string(name) + "@" + format_dims(dims)}, {});
}

std::size_t TensorGraph::weight(std::string_view name, const std::vector<std::int64_t>& dims) {
  return add(Op{OpKind::Weight}, {std::string(name) + "@" + format_dims(dims)}, {});
}

void TensorGraph::add_output(std::size_t id) {
  if (id >= nodes_.size()) throw GraphError("output " + node_name(id) + " does not exist");
  outputs_.push_back(id);
  root_.reset();
  if (outputs_.size() == 1) root_ = id;
}

const TensorShape& TensorGraph::shape(std::size_t id) const {
  const auto* s = std::get_if<TensorShape>(&nodes_.at(id).value);
  if (!s) throw GraphError("node " + node_name(id) + " is not a tensor");
  return *s;
}

TensorGraph TensorGraph::make_single_rooted() const {
  if (outputs_.empty()) throw GraphError("graph has no outputs");
  TensorGraph g = *this;
  std::size_t acc = outputs_.front();
  for (std::size_t i = 1; i < outputs_.size(); ++i) acc = g.add(Op{OpKind::Noop}, {}, {acc, outputs_[i]});
  g.outputs_ = {acc};
  g.root_ = acc;
  return g;
}

TensorGraph TensorGraph::strip_noops() const {
  std::vector<std::size_t> outs;
  std::function<void(std::size_t)> flatten = [&](std::size_t id) {
    const GraphNode& n = nodes_[id];
    if (n.op.kind == OpKind::Noop) {
      for (std::size_t k : n.inputs) flatten(k);
    } else {
      outs.push_back(id);
    }
  };
  for (std::size_t o : outputs_) flatten(o);

  std::vector<char> keep(nodes_.size(), 0);
  std::function<void(std::size_t)> mark = [&](std::size_t id) {
    if (keep[id]) return;
    keep[id] = 1;
    for (std::size_t k : nodes_[id].inputs) mark(k);
  };
  for (std::size_t o : outs) mark(o);

  TensorGraph g;
  std::vector<std::size_t> remap(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!keep[i]) continue;
    std::vector<std::size_t> ins;
    for (std::size_t k : nodes_[i].inputs) ins.push_back(remap[k]);
    remap[i] = g.add(nodes_[i].op, nodes_[i].params, std::move(ins));
  }
  for (std::size_t o : outs) g.add_output(remap[o]);
  return g;
}

TensorGraph TensorGraph::canonical() const {
  // Post-order DFS from outputs in declaration order gives an order that does
  // not depend on how the nodes happened to be numbered.
  std::vector<std::size_t> order;
  std::vector<char> seen(nodes_.size(), 0);
  std::function<void(std::size_t)> visit = [&](std::size_t id) {
    if (seen[id]) return;
    seen[id] = 1;
    for (std::size_t k : nodes_[id].inputs) visit(k);
    order.push_back(id);
  };
  for (std::size_t o : outputs_) visit(o);
  TensorGraph g;
  std::vector<std::size_t> remap(nodes_.size(), 0);
  for (std::size_t id : order) {
    std::vector<std::size_t> ins;
    for (std::size_t k : nodes_[id].inputs) ins.push_back(remap[k]);
    remap[id] = g.add(nodes_[id].op, nodes_[id].params, std::move(ins));
  }
  for (std::size_t o : outputs_) g.add_output(remap[o]);
  if (root_ && outputs_.size() == 1) g.root_ = remap[*root_];
  return g;
}

Pattern TensorGraph::to_sexpr(std::size_t id) const {
  const GraphNode& n = nodes_.at(id);
  Pattern p(symbol(n.op));
  std::size_t pi = 0, ti = 0;
  for (const auto& a : signature(n.op).args) {
    if (a.kind == ValueKind::S || a.kind == ValueKind::N) {
      p.children.emplace_back(n.params[pi++]);
    } else {
      p.children.push_back(to_sexpr(n.inputs[ti++]));
    }
  }
  return p;
}

Pattern TensorGraph::to_sexpr() const {
  if (!root_) throw GraphError("graph is not single-rooted");
  return to_sexpr(*root_);
}

bool TensorGraph::operator==(const TensorGraph& o) const {
  if (nodes_.size() != o.nodes_.size() || outputs_ != o.outputs_) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = o.nodes_[i];
    if (a.op != b.op || a.params != b.params || a.inputs != b.inputs) return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> named_params(const GraphNode& n) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pi = 0;
  for (const auto& a : signature(n.op).args) {
    if (a.kind == ValueKind::S || a.kind == ValueKind::N) out.emplace_back(std::string(a.param), n.params[pi++]);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t end = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::size_t parse_node_ref(std::string_view ref, const std::map<std::string, std::size_t, std::less<>>& ids,
                           std::size_t line) {
  auto it = ids.find(ref);
  if (it == ids.end()) throw GraphSyntaxError("undefined node '" + std::string(ref) + "'", line);
  return it->second;
}

bool valid_node_name(std::string_view s) {
  if (s.size() < 2 || s[0] != 'n') return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

TensorGraph parse_graph(std::string_view text) {
  TensorGraph g;
  std::map<std::string, std::size_t, std::less<>> ids;
  std::size_t line_no = 0;
  bool header = false;
  bool have_outputs = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!header) {
      if (line != "tensorgraph v1") throw GraphSyntaxError("expected header 'tensorgraph v1'", line_no);
      header = true;
      continue;
    }
    if (have_outputs) throw GraphSyntaxError("content after outputs line", line_no);
    if (line.starts_with("outputs:")) {
      auto refs = split_list(trim(line.substr(8)), ' ');
      std::vector<std::size_t> outs;
      for (auto r : refs) {
        if (r.empty()) continue;
        outs.push_back(parse_node_ref(r, ids, line_no));
      }
      if (outs.empty()) throw GraphSyntaxError("outputs line lists no nodes", line_no);
      for (auto o : outs) g.add_output(o);
      have_outputs = true;
      continue;
    }

    std::string_view params_text;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      params_text = trim(line.substr(hash + 1));
      line = trim(line.substr(0, hash));
      if (!params_text.starts_with("params:")) throw GraphSyntaxError("expected '# params:'", line_no);
      params_text = trim(params_text.substr(7));
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw GraphSyntaxError("expected 'nID = op(...)'", line_no);
    std::string_view name = trim(line.substr(0, eq));
    if (!valid_node_name(name)) throw GraphSyntaxError("invalid node name '" + std::string(name) + "'", line_no);
    if (ids.count(name)) throw GraphSyntaxError("duplicate node '" + std::string(name) + "'", line_no);
    std::string_view rhs = trim(line.substr(eq + 1));
    auto open = rhs.find('(');
    if (open == std::string_view::npos || rhs.back() != ')') throw GraphSyntaxError("expected 'op(args)'", line_no);
    std::string_view op_text = trim(rhs.substr(0, open));
    auto op = parse_op(op_text);
    if (!op) throw GraphSyntaxError("unknown operator '" + std::string(op_text) + "'", line_no);

    std::vector<std::size_t> inputs;
    for (auto r : split_list(rhs.substr(open + 1, rhs.size() - open - 2), ',')) {
      inputs.push_back(parse_node_ref(r, ids, line_no));
    }
    std::map<std::string, std::string, std::less<>> kv;
    for (auto item : split_list(params_text, ',')) {
      auto e = item.find('=');
      if (e == std::string_view::npos) throw GraphSyntaxError("expected k=v in params", line_no);
      std::string k(trim(item.substr(0, e)));
      if (!kv.emplace(k, std::string(trim(item.substr(e + 1)))).second) {
        throw GraphSyntaxError("duplicate parameter '" + k + "'", line_no);
      }
    }
    std::vector<std::string> params;
    for (const auto& a : signature(*op).args) {
      if (a.kind != ValueKind::S && a.kind != ValueKind::N) continue;
      auto it = kv.find(a.param);
      if (it == kv.end()) throw GraphSyntaxError("missing parameter '" + std::string(a.param) + "'", line_no);
      params.push_back(it->second);
      kv.erase(it);
    }
    if (!kv.empty()) throw GraphSyntaxError("unknown parameter '" + kv.begin()->first + "'", line_no);
    if (inputs.size() != tensor_arity(*op)) {
      throw GraphSyntaxError(symbol(*op) + " takes " + std::to_string(tensor_arity(*op)) + " inputs", line_no);
    }
    try {
      ids.emplace(std::string(name), g.add(*op, std::move(params), std::move(inputs)));
    } catch (const GraphError& e) {
      throw GraphSyntaxError(std::string(name) + ": " + e.what(), line_no);
    }
  }
  if (!header) throw GraphSyntaxError("empty graph file", line_no);
  if (!have_outputs) throw GraphSyntaxError("missing outputs line", line_no);
  return g;
}

std::string emit_graph(const TensorGraph& g) {
  std::ostringstream os;
  os << "tensorgraph v1\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const GraphNode& n = g.node(i);
    os << node_name(i) << " = " << symbol(n.op) << '(';
    for (std::size_t k = 0; k < n.inputs.size(); ++k) os << (k ? "," : "") << node_name(n.inputs[k]);
    os << ')';
    auto ps = named_params(n);
    if (!ps.empty()) {
      os << " # params: ";
      for (std::size_t k = 0; k < ps.size(); ++k) os << (k ? "," : "") << ps[k].first << '=' << ps[k].second;
    }
    os << '\n';
  }
  os << "outputs:";
  for (std::size_t o : g.outputs()) os << ' ' << node_name(o);
  os << '\n';
  return os.str();
}

}  // namespace tensorsat
