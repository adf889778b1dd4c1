#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tensorsat/tensor/ops.hpp"

namespace tensorsat {

/// Tensor extents plus, per axis, the stack of boundaries recorded by concat.
/// The most recent concat's boundary is at the back; split consumes it.
struct TensorShape {
  std::vector<std::int64_t> dims;
  std::vector<std::vector<std::int64_t>> splits;  // same length as dims

  TensorShape() = default;
  explicit TensorShape(std::vector<std::int64_t> d) : dims(std::move(d)), splits(dims.size()) {}

  std::size_t rank() const { return dims.size(); }
  std::int64_t numel() const;
  bool operator==(const TensorShape&) const = default;
};

struct Literal {
  std::string text;
  bool operator==(const Literal&) const = default;
};

struct TensorTuple {
  TensorShape first;
  TensorShape second;
  bool operator==(const TensorTuple&) const = default;
};

/// Result of a noop: carries no tensor.
struct NoopValue {
  bool operator==(const NoopValue&) const = default;
};

using Value = std::variant<Literal, TensorShape, TensorTuple, NoopValue>;

ValueKind kind_of(const Value& v);
std::string describe(const Value& v);
std::ostream& operator<<(std::ostream& os, const Value& v);

/// Output of `op` applied to `args` (positional, S-expression order).
/// Throws ShapeError / MissingSplitOrigin.
Value infer(Op op, std::span<const Value* const> args);

/// Commutative, associative join used when e-classes merge: shapes must be
/// equal; split stacks are reconciled. Returns whether `into` changed.
/// Throws ShapeError on conflicting values.
bool join(Value& into, const Value& other);

}  // namespace tensorsat
