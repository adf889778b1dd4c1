#include "tensorsat/tensor/value.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace tensorsat {

std::int64_t TensorShape::numel() const {
  return std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
}

ValueKind kind_of(const Value& v) {
  if (std::holds_alternative<TensorTuple>(v)) return ValueKind::TT;
  if (const auto* l = std::get_if<Literal>(&v)) {
    try {
      parse_int(l->text, "");
      return ValueKind::N;
    } catch (const ShapeError&) {
      return ValueKind::S;
    }
  }
  return ValueKind::T;
}

namespace {

std::string shape_text(const TensorShape& s) { return "(" + format_dims(s.dims, ',') + ")"; }

}  // namespace

std::string describe(const Value& v) {
  struct Visitor {
    std::string operator()(const Literal& l) const { return "'" + l.text + "'"; }
    std::string operator()(const TensorShape& s) const { return "tensor" + shape_text(s); }
    std::string operator()(const TensorTuple& t) const {
      return "tuple[" + shape_text(t.first) + ", " + shape_text(t.second) + "]";
    }
    std::string operator()(const NoopValue&) const { return "noop"; }
  };
  return std::visit(Visitor{}, v);
}

std::ostream& operator<<(std::ostream& os, const Value& v) { return os << describe(v); }

namespace {

[[noreturn]] void fail(Op op, const std::string& msg) { throw ShapeError(symbol(op) + ": " + msg); }

const TensorShape& tensor_arg(Op op, std::span<const Value* const> args, std::size_t i) {
  const auto* t = std::get_if<TensorShape>(args[i]);
  if (!t) fail(op, "argument " + std::to_string(i) + " must be a tensor, got " + describe(*args[i]));
  return *t;
}

const std::string& literal_arg(Op op, std::span<const Value* const> args, std::size_t i) {
  const auto* l = std::get_if<Literal>(args[i]);
  if (!l) fail(op, "argument " + std::to_string(i) + " must be a parameter, got " + describe(*args[i]));
  return l->text;
}

std::int64_t int_arg(Op op, std::span<const Value* const> args, std::size_t i) {
  const std::string& text = literal_arg(op, args, i);
  try {
    return parse_int(text, signature(op).args[i].param);
  } catch (const ShapeError& e) {
    fail(op, e.what());
  }
}

void check_activation(Op op, std::int64_t act) {
  if (act < 0 || act > 3) fail(op, "activation mode must be 0..3, got " + std::to_string(act));
}

// Key under which empty stacks sort last, so the join keeps recorded info.
bool stack_less(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  if (a.empty() != b.empty()) return b.empty();
  return a < b;
}

std::vector<std::int64_t> join_stack(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  return stack_less(b, a) ? b : a;
}

TensorShape elementwise(Op op, const TensorShape& a, const TensorShape& b) {
  if (a.dims != b.dims) fail(op, "shape mismatch " + shape_text(a) + " vs " + shape_text(b));
  TensorShape out = a;
  for (std::size_t i = 0; i < out.rank(); ++i) out.splits[i] = join_stack(a.splits[i], b.splits[i]);
  return out;
}

TensorShape matmul(Op op, const TensorShape& a, const TensorShape& b) {
  if (a.rank() < 2 || a.rank() != b.rank()) fail(op, "operands must have equal rank >= 2");
  std::size_t r = a.rank();
  for (std::size_t i = 0; i + 2 < r; ++i) {
    if (a.dims[i] != b.dims[i]) fail(op, "batch dimension mismatch");
  }
  if (a.dims[r - 1] != b.dims[r - 2]) {
    fail(op, "inner dimension mismatch " + shape_text(a) + " x " + shape_text(b));
  }
  TensorShape out = a;
  out.dims[r - 1] = b.dims[r - 1];
  out.splits[r - 1] = b.splits[r - 1];
  return out;
}

std::int64_t window_out(Op op, std::int64_t in, std::int64_t k, std::int64_t stride, Padding pad) {
  if (stride < 1) fail(op, "stride must be positive");
  if (k < 1) fail(op, "kernel extent must be positive");
  if (pad == Padding::Same) return (in + stride - 1) / stride;
  if (in < k) fail(op, "kernel larger than input with VALID padding");
  return (in - k) / stride + 1;
}

Padding padding_arg(Op op, std::int64_t p) {
  if (p != 0 && p != 1) fail(op, "padding mode must be 0 (SAME) or 1 (VALID), got " + std::to_string(p));
  return static_cast<Padding>(p);
}

TensorShape conv(Op op, std::span<const Value* const> args) {
  std::int64_t sh = int_arg(op, args, 0);
  std::int64_t sw = int_arg(op, args, 1);
  Padding pad = padding_arg(op, int_arg(op, args, 2));
  check_activation(op, int_arg(op, args, 3));
  const TensorShape& x = tensor_arg(op, args, 4);
  const TensorShape& w = tensor_arg(op, args, 5);
  if (x.rank() != 4 || w.rank() != 4) fail(op, "input and weight must be rank 4");
  if (x.dims[1] % w.dims[1] != 0) fail(op, "input channels not divisible by weight input channels");
  std::int64_t groups = x.dims[1] / w.dims[1];
  if (w.dims[0] % groups != 0) fail(op, "output channels not divisible by group count");
  TensorShape out({x.dims[0], w.dims[0], window_out(op, x.dims[2], w.dims[2], sh, pad),
                   window_out(op, x.dims[3], w.dims[3], sw, pad)});
  out.splits[0] = x.splits[0];
  out.splits[1] = w.splits[0];
  return out;
}

TensorShape pool(Op op, std::span<const Value* const> args) {
  const TensorShape& x = tensor_arg(op, args, 0);
  std::int64_t kh = int_arg(op, args, 1);
  std::int64_t kw = int_arg(op, args, 2);
  std::int64_t sh = int_arg(op, args, 3);
  std::int64_t sw = int_arg(op, args, 4);
  Padding pad = padding_arg(op, int_arg(op, args, 5));
  check_activation(op, int_arg(op, args, 6));
  if (x.rank() != 4) fail(op, "input must be rank 4");
  TensorShape out({x.dims[0], x.dims[1], window_out(op, x.dims[2], kh, sh, pad), window_out(op, x.dims[3], kw, sw, pad)});
  out.splits[0] = x.splits[0];
  out.splits[1] = x.splits[1];
  return out;
}

TensorShape transpose(Op op, const TensorShape& x, const std::string& perm_text) {
  std::vector<std::int64_t> perm;
  try {
    perm = parse_dims(perm_text);
  } catch (const ShapeError&) {
    fail(op, "malformed permutation '" + perm_text + "'");
  }
  if (perm.size() != x.rank()) fail(op, "permutation length differs from rank");
  std::vector<std::int64_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<std::int64_t>(i)) fail(op, "'" + perm_text + "' is not a permutation");
  }
  TensorShape out;
  for (auto p : perm) {
    out.dims.push_back(x.dims[p]);
    out.splits.push_back(x.splits[p]);
  }
  return out;
}

TensorShape enlarge(Op op, const TensorShape& w, const TensorShape& ref) {
  if (w.rank() != 4 || ref.rank() != 4) fail(op, "kernel and reference must be rank 4");
  if (w.dims[2] > ref.dims[2] || w.dims[3] > ref.dims[3]) fail(op, "kernel larger than reference");
  TensorShape out({w.dims[0], w.dims[1], ref.dims[2], ref.dims[3]});
  out.splits[0] = w.splits[0];
  out.splits[1] = w.splits[1];
  return out;
}

std::size_t axis_arg(Op op, std::span<const Value* const> args, std::size_t i, std::size_t rank) {
  std::int64_t axis = int_arg(op, args, i);
  if (axis < 0 || axis >= static_cast<std::int64_t>(rank)) {
    fail(op, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(axis);
}

TensorShape concat(Op op, std::span<const Value* const> args) {
  std::vector<const TensorShape*> xs;
  for (std::size_t i = 1; i < args.size(); ++i) xs.push_back(&tensor_arg(op, args, i));
  std::size_t rank = xs.front()->rank();
  std::size_t axis = axis_arg(op, args, 0, rank);
  TensorShape out = *xs.front();
  std::vector<std::int64_t> boundaries;
  std::vector<std::int64_t> inherited = xs.front()->splits[axis];
  std::int64_t offset = xs.front()->dims[axis];
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const TensorShape& x = *xs[k];
    if (x.rank() != rank) fail(op, "rank mismatch");
    for (std::size_t i = 0; i < rank; ++i) {
      if (i == axis) continue;
      if (x.dims[i] != out.dims[i]) fail(op, "extent mismatch on axis " + std::to_string(i));
      out.splits[i] = join_stack(out.splits[i], x.splits[i]);
    }
    boundaries.push_back(offset);
    for (auto p : x.splits[axis]) inherited.push_back(p + offset);
    offset += x.dims[axis];
  }
  out.dims[axis] = offset;
  // Earliest boundary on top, so repeated splits peel inputs left to right.
  std::reverse(boundaries.begin(), boundaries.end());
  inherited.insert(inherited.end(), boundaries.begin(), boundaries.end());
  out.splits[axis] = std::move(inherited);
  return out;
}

TensorTuple split(Op op, std::span<const Value* const> args) {
  const TensorShape& x = tensor_arg(op, args, 1);
  std::size_t axis = axis_arg(op, args, 0, x.rank());
  const auto& stack = x.splits[axis];
  if (stack.empty()) {
    throw MissingSplitOrigin(symbol(op) + ": no recorded concat on axis " + std::to_string(axis));
  }
  std::int64_t pos = stack.back();
  TensorTuple out{x, x};
  out.first.dims[axis] = pos;
  out.second.dims[axis] = x.dims[axis] - pos;
  out.first.splits[axis].clear();
  out.second.splits[axis].clear();
  for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
    if (stack[i] < pos) out.first.splits[axis].push_back(stack[i]);
    if (stack[i] > pos) out.second.splits[axis].push_back(stack[i] - pos);
  }
  return out;
}

TensorShape merge_weight(Op op, const TensorShape& w, std::int64_t count) {
  if (w.rank() != 4) fail(op, "weight must be rank 4");
  if (count < 1) fail(op, "count must be positive");
  if (w.dims[0] % count != 0) fail(op, "count must divide the output channel count");
  TensorShape out({w.dims[0], w.dims[1] * count, w.dims[2], w.dims[3]});
  out.splits[0] = w.splits[0];
  return out;
}

TensorShape reshape(Op op, const TensorShape& x, const std::string& shape_text_arg) {
  std::vector<std::int64_t> dims;
  try {
    dims = parse_dims(shape_text_arg);
  } catch (const ShapeError&) {
    fail(op, "malformed shape '" + shape_text_arg + "'");
  }
  if (dims.empty() || dims.size() > 4) fail(op, "rank must be 1..4");
  for (auto d : dims) {
    if (d < 1) fail(op, "extents must be positive");
  }
  TensorShape out(std::move(dims));
  if (out.numel() != x.numel()) fail(op, "element count changes from " + shape_text(x) + " to " + shape_text(out));
  return out;
}

TensorShape source(Op op, const std::string& id) {
  auto at = id.rfind('@');
  if (at == std::string::npos || at == 0) fail(op, "identifier '" + id + "' is not name@dims");
  std::vector<std::int64_t> dims;
  try {
    dims = parse_dims(std::string_view(id).substr(at + 1));
  } catch (const ShapeError&) {
    fail(op, "identifier '" + id + "' has malformed dims");
  }
  if (dims.empty() || dims.size() > 4) fail(op, "rank must be 1..4");
  for (auto d : dims) {
    if (d < 1) fail(op, "extents must be positive");
  }
  return TensorShape(std::move(dims));
}

}  // namespace

Value infer(Op op, std::span<const Value* const> args) {
  const Signature& sig = signature(op);
  if (args.size() != sig.args.size()) {
    fail(op, "expected " + std::to_string(sig.args.size()) + " arguments, got " + std::to_string(args.size()));
  }
  switch (op.kind) {
    case OpKind::EwAdd:
    case OpKind::EwMul:
      return elementwise(op, tensor_arg(op, args, 0), tensor_arg(op, args, 1));
    case OpKind::Matmul:
      check_activation(op, int_arg(op, args, 0));
      return matmul(op, tensor_arg(op, args, 1), tensor_arg(op, args, 2));
    case OpKind::Conv:
      return conv(op, args);
    case OpKind::Relu:
    case OpKind::Tanh:
    case OpKind::Sigmoid:
      return tensor_arg(op, args, 0);
    case OpKind::PoolMax:
    case OpKind::PoolAvg:
      return pool(op, args);
    case OpKind::Transpose:
      return transpose(op, tensor_arg(op, args, 0), literal_arg(op, args, 1));
    case OpKind::Enlarge:
      return enlarge(op, tensor_arg(op, args, 0), tensor_arg(op, args, 1));
    case OpKind::Concat:
      return concat(op, args);
    case OpKind::Split:
      return split(op, args);
    case OpKind::Split0:
    case OpKind::Split1: {
      const auto* t = std::get_if<TensorTuple>(args[0]);
      if (!t) fail(op, "argument must be a split result, got " + describe(*args[0]));
      return op.kind == OpKind::Split0 ? t->first : t->second;
    }
    case OpKind::Merge:
      return merge_weight(op, tensor_arg(op, args, 0), int_arg(op, args, 1));
    case OpKind::Reshape:
      return reshape(op, tensor_arg(op, args, 0), literal_arg(op, args, 1));
    case OpKind::Input:
    case OpKind::Weight:
      return source(op, literal_arg(op, args, 0));
    case OpKind::Noop:
      for (std::size_t i = 0; i < 2; ++i) {
        if (!std::holds_alternative<TensorShape>(*args[i]) && !std::holds_alternative<NoopValue>(*args[i])) {
          fail(op, "argument " + std::to_string(i) + " must be a tensor or noop, got " + describe(*args[i]));
        }
      }
      return NoopValue{};
  }
  fail(op, "unknown operator");
}

namespace {

bool join_shape(TensorShape& into, const TensorShape& other) {
  if (into.dims != other.dims) {
    throw ShapeError("cannot merge " + shape_text(into) + " with " + shape_text(other));
  }
  bool changed = false;
  for (std::size_t i = 0; i < into.rank(); ++i) {
    auto j = join_stack(into.splits[i], other.splits[i]);
    if (j != into.splits[i]) {
      into.splits[i] = std::move(j);
      changed = true;
    }
  }
  return changed;
}

}  // namespace

bool join(Value& into, const Value& other) {
  if (into.index() != other.index()) {
    throw ShapeError("cannot merge " + describe(into) + " with " + describe(other));
  }
  if (auto* t = std::get_if<TensorShape>(&into)) return join_shape(*t, std::get<TensorShape>(other));
  if (auto* tt = std::get_if<TensorTuple>(&into)) {
    const auto& o = std::get<TensorTuple>(other);
    bool a = join_shape(tt->first, o.first);
    bool b = join_shape(tt->second, o.second);
    return a || b;
  }
  if (auto* l = std::get_if<Literal>(&into)) {
    if (l->text != std::get<Literal>(other).text) {
      throw ShapeError("cannot merge parameters '" + l->text + "' and '" + std::get<Literal>(other).text + "'");
    }
  }
  return false;
}

}  // namespace tensorsat
