#include "tensorsat/cost.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace tensorsat {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

std::string cost_signature(Op op, std::span<const std::pair<std::string, std::string>> params,
                           std::span<const TensorShape* const> inputs) {
  std::vector<std::pair<std::string, std::string>> sorted(params.begin(), params.end());
  std::sort(sorted.begin(), sorted.end());
  std::string s = symbol(op) + "[";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) s += ',';
    s += sorted[i].first + "=" + sorted[i].second;
  }
  s += "](";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i) s += ',';
    s += format_dims(inputs[i]->dims, 'x');
  }
  s += ')';
  return s;
}

std::string canonical_signature(std::string_view sig) {
  auto lb = sig.find('[');
  auto rb = sig.find(']', lb == std::string_view::npos ? 0 : lb);
  if (lb == std::string_view::npos || rb == std::string_view::npos || rb + 1 >= sig.size() || sig[rb + 1] != '(' ||
      sig.back() != ')') {
    throw std::invalid_argument("malformed signature '" + std::string(sig) + "'");
  }
  std::string_view op = sig.substr(0, lb);
  if (!parse_op(op)) throw std::invalid_argument("unknown operator '" + std::string(op) + "'");
  std::vector<std::string> params;
  std::string_view body = sig.substr(lb + 1, rb - lb - 1);
  std::size_t pos = 0;
  while (!body.empty() && pos <= body.size()) {
    auto end = body.find(',', pos);
    auto item = body.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (item.find('=') == std::string_view::npos) {
      throw std::invalid_argument("parameter '" + std::string(item) + "' is not k=v");
    }
    params.emplace_back(item);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  std::sort(params.begin(), params.end());
  for (std::size_t i = 1; i < params.size(); ++i) {
    if (params[i].substr(0, params[i].find('=')) == params[i - 1].substr(0, params[i - 1].find('='))) {
      throw std::invalid_argument("repeated parameter in '" + std::string(sig) + "'");
    }
  }
  std::string out(op);
  out += '[';
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ',';
    out += params[i];
  }
  out += ']';
  out += sig.substr(rb + 1);
  return out;
}

CostModel CostModel::synthetic(SyntheticCoefficients c) {
  CostModel m;
  m.coeff_ = c;
  return m;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool zero_cost(OpKind k) {
  return k == OpKind::Noop || k == OpKind::Input || k == OpKind::Weight || k == OpKind::Split0 ||
         k == OpKind::Split1;
}

std::int64_t param_int(std::span<const std::pair<std::string, std::string>> params, std::string_view name) {
  for (const auto& [k, v] : params) {
    if (k == name) return parse_int(v, name);
  }
  throw std::invalid_argument("missing parameter " + std::string(name));
}

}  // namespace

CostModel CostModel::load_table(std::string_view text, bool strict, SyntheticCoefficients fallback) {
  CostModel m;
  m.coeff_ = fallback;
  m.table_mode_ = true;
  m.strict_ = strict;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.rfind('=');
    if (eq == std::string_view::npos) throw CostTableError("expected 'signature = cost'", line_no);
    // The signature itself contains '=' inside [...]; the separator follows ')'.
    std::string_view sig = trim(line.substr(0, eq));
    std::string_view val = trim(line.substr(eq + 1));
    if (sig.empty() || sig.back() != ')') throw CostTableError("expected 'signature = cost'", line_no);
    double cost = 0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), cost);
    if (ec != std::errc{} || ptr != val.data() + val.size() || !std::isfinite(cost) || cost < 0) {
      throw CostTableError("invalid cost '" + std::string(val) + "'", line_no);
    }
    std::string key;
    try {
      key = canonical_signature(sig);
    } catch (const std::invalid_argument& e) {
      throw CostTableError(e.what(), line_no);
    }
    if (!m.table_.emplace(key, cost).second) throw CostTableError("duplicate signature '" + key + "'", line_no);
  }
  return m;
}

void CostModel::set(std::string_view signature, double cost_ms) {
  table_mode_ = true;
  table_[canonical_signature(signature)] = cost_ms;
}

std::string CostModel::emit_table() const {
  std::string out;
  for (const auto& [k, v] : table_) out += k + " = " + format_double(v) + "\n";
  return out;
}

double CostModel::node_cost(Op op, std::span<const std::pair<std::string, std::string>> params,
                            std::span<const TensorShape* const> inputs, const Value& output) const {
  if (zero_cost(op.kind)) return 0;
  if (table_mode_) {
    auto it = table_.find(cost_signature(op, params, inputs));
    if (it != table_.end()) return it->second;
    if (strict_) throw UnknownSignature("no cost for " + cost_signature(op, params, inputs));
  }
  return synthetic_cost(op, params, inputs, output);
}

double CostModel::synthetic_cost(Op op, std::span<const std::pair<std::string, std::string>> params,
                                 std::span<const TensorShape* const> inputs, const Value& output) const {
  const auto* out = std::get_if<TensorShape>(&output);
  double out_numel = out ? static_cast<double>(out->numel()) : 0.0;
  const SyntheticCoefficients& c = coeff_;
  switch (op.kind) {
    case OpKind::Matmul: {
      const TensorShape& a = *inputs[0];
      double k = static_cast<double>(a.dims.back());
      return c.launch + c.mac * out_numel * k;
    }
    case OpKind::Conv: {
      const TensorShape& w = *inputs[1];
      double per_output = static_cast<double>(w.dims[1] * w.dims[2] * w.dims[3]);
      return c.launch + c.mac * out_numel * per_output;
    }
    case OpKind::EwAdd:
    case OpKind::EwMul:
    case OpKind::Relu:
    case OpKind::Tanh:
    case OpKind::Sigmoid:
    case OpKind::Transpose:
      return c.launch + c.elem * out_numel;
    case OpKind::PoolMax:
    case OpKind::PoolAvg: {
      double window = static_cast<double>(param_int(params, "kernel_h") * param_int(params, "kernel_w"));
      return c.launch + c.elem * out_numel * window;
    }
    case OpKind::Split:
      return c.move_factor * c.elem * static_cast<double>(inputs[0]->numel());
    case OpKind::Concat:
    case OpKind::Reshape:
    case OpKind::Enlarge:
    case OpKind::Merge:
      return c.move_factor * c.elem * out_numel;
    default:
      return 0;
  }
}

double node_cost(const TensorGraph& g, std::size_t id, const CostModel& model) {
  const GraphNode& n = g.node(id);
  if (zero_cost(n.op.kind)) return 0;
  std::vector<const TensorShape*> ins;
  for (std::size_t k : n.inputs) ins.push_back(&std::get<TensorShape>(g.node(k).value));
  return model.node_cost(n.op, named_params(n), ins, n.value);
}

double graph_cost(const TensorGraph& g, const CostModel& model) {
  // Summed in sorted order so renumbering the nodes cannot change the bits.
  std::vector<double> parts;
  parts.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) parts.push_back(node_cost(g, i, model));
  std::sort(parts.begin(), parts.end());
  double total = 0;
  for (double c : parts) total += c;
  return total;
}

std::vector<double> egraph_costs(const TensorEGraph& g, const CostModel& model) {
  std::vector<double> costs(g.node_capacity(), 0.0);
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<const TensorShape*> ins;
  for (std::uint32_t i = 0; i < g.node_capacity(); ++i) {
    NodeId id{i};
    if (!g.is_live(id)) continue;
    const ENode& n = g.node(id);
    if (n.children.empty()) continue;
    auto op = parse_op(n.op);
    if (!op || zero_cost(op->kind)) continue;
    params.clear();
    ins.clear();
    const Signature& sig = signature(*op);
    for (std::size_t k = 0; k < sig.args.size(); ++k) {
      const Value& v = g.data(n.children[k]);
      if (sig.args[k].kind == ValueKind::S || sig.args[k].kind == ValueKind::N) {
        params.emplace_back(std::string(sig.args[k].param), std::get<Literal>(v).text);
      } else {
        ins.push_back(&std::get<TensorShape>(v));
      }
    }
    costs[i] = model.node_cost(*op, params, ins, g.data(g.class_of(id)));
  }
  return costs;
}

}  // namespace tensorsat
