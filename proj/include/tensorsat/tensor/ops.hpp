#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tensorsat {

enum class OpKind : std::uint8_t {
  EwAdd,
  EwMul,
  Matmul,
  Conv,
  Relu,
  Tanh,
  Sigmoid,
  PoolMax,
  PoolAvg,
  Transpose,
  Enlarge,
  Concat,
  Split,
  Split0,
  Split1,
  Merge,
  Reshape,
  Input,
  Weight,
  Noop,
};

/// T = tensor, S = string, N = integer, TT = pair of tensors.
enum class ValueKind : std::uint8_t { T, S, N, TT };

/// Padding and activation modes are small integers in the term language.
enum class Padding : int { Same = 0, Valid = 1 };
enum class Activation : int { None = 0, Relu = 1, Sigmoid = 2, Tanh = 3 };

/// Operator kind plus the input count for concat (one operator per arity).
struct Op {
  OpKind kind = OpKind::Noop;
  int concat_arity = 0;

  bool operator==(const Op&) const = default;
};

struct ArgSpec {
  ValueKind kind;
  std::string_view param;  // parameter name for S/N arguments, empty for tensors
};

/// Positional argument list of the S-expression form and the result kind.
struct Signature {
  std::vector<ArgSpec> args;
  ValueKind result;
};

const Signature& signature(Op op);
std::string symbol(Op op);
/// Parses an operator symbol (`concat_3` -> Concat with arity 3).
std::optional<Op> parse_op(std::string_view symbol);

/// Number of tensor-valued (T or TT) arguments.
std::size_t tensor_arity(Op op);

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingSplitOrigin : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

/// Integer parameter text; throws ShapeError when malformed.
std::int64_t parse_int(std::string_view text, std::string_view what);

/// `"64_128"` <-> {64, 128}.
std::vector<std::int64_t> parse_dims(std::string_view text);
std::string format_dims(const std::vector<std::int64_t>& dims, char sep = '_');

}  // namespace tensorsat
