#include "tensorsat/tensor/ops.hpp"

#include <array>
#include <charconv>
#include <map>

namespace tensorsat {

namespace {

using VK = ValueKind;

const Signature kEw{{{VK::T, ""}, {VK::T, ""}}, VK::T};
const Signature kUnary{{{VK::T, ""}}, VK::T};
const Signature kMatmul{{{VK::N, "act"}, {VK::T, ""}, {VK::T, ""}}, VK::T};
const Signature kConv{{{VK::N, "stride_h"}, {VK::N, "stride_w"}, {VK::N, "pad"}, {VK::N, "act"}, {VK::T, ""}, {VK::T, ""}},
                      VK::T};
const Signature kPool{{{VK::T, ""},
                       {VK::N, "kernel_h"},
                       {VK::N, "kernel_w"},
                       {VK::N, "stride_h"},
                       {VK::N, "stride_w"},
                       {VK::N, "pad"},
                       {VK::N, "act"}},
                      VK::T};
const Signature kTranspose{{{VK::T, ""}, {VK::S, "perm"}}, VK::T};
const Signature kEnlarge{{{VK::T, ""}, {VK::T, ""}}, VK::T};
const Signature kSplit{{{VK::N, "axis"}, {VK::T, ""}}, VK::TT};
const Signature kSplitHalf{{{VK::TT, ""}}, VK::T};
const Signature kMerge{{{VK::T, ""}, {VK::N, "count"}}, VK::T};
const Signature kReshape{{{VK::T, ""}, {VK::S, "shape"}}, VK::T};
const Signature kSource{{{VK::S, "id"}}, VK::T};
const Signature kNoop{{{VK::T, ""}, {VK::T, ""}}, VK::T};

constexpr std::array<std::pair<OpKind, std::string_view>, 19> kNames{{
    {OpKind::EwAdd, "ewadd"},
    {OpKind::EwMul, "ewmul"},
    {OpKind::Matmul, "matmul"},
    {OpKind::Conv, "conv"},
    {OpKind::Relu, "relu"},
    {OpKind::Tanh, "tanh"},
    {OpKind::Sigmoid, "sigmoid"},
    {OpKind::PoolMax, "poolmax"},
    {OpKind::PoolAvg, "poolavg"},
    {OpKind::Transpose, "transpose"},
    {OpKind::Enlarge, "enlarge"},
    {OpKind::Split, "split"},
    {OpKind::Split0, "split_0"},
    {OpKind::Split1, "split_1"},
    {OpKind::Merge, "merge"},
    {OpKind::Reshape, "reshape"},
    {OpKind::Input, "input"},
    {OpKind::Weight, "weight"},
    {OpKind::Noop, "noop"},
}};

}  // namespace

const Signature& signature(Op op) {
  switch (op.kind) {
    case OpKind::EwAdd:
    case OpKind::EwMul:
      return kEw;
    case OpKind::Matmul:
      return kMatmul;
    case OpKind::Conv:
      return kConv;
    case OpKind::Relu:
    case OpKind::Tanh:
    case OpKind::Sigmoid:
      return kUnary;
    case OpKind::PoolMax:
    case OpKind::PoolAvg:
      return kPool;
    case OpKind::Transpose:
      return kTranspose;
    case OpKind::Enlarge:
      return kEnlarge;
    case OpKind::Concat: {
      static std::map<int, Signature> cache;
      auto it = cache.find(op.concat_arity);
      if (it == cache.end()) {
        Signature s{{{VK::N, "axis"}}, VK::T};
        for (int i = 0; i < op.concat_arity; ++i) s.args.push_back({VK::T, ""});
        it = cache.emplace(op.concat_arity, std::move(s)).first;
      }
      return it->second;
    }
    case OpKind::Split:
      return kSplit;
    case OpKind::Split0:
    case OpKind::Split1:
      return kSplitHalf;
    case OpKind::Merge:
      return kMerge;
    case OpKind::Reshape:
      return kReshape;
    case OpKind::Input:
    case OpKind::Weight:
      return kSource;
    case OpKind::Noop:
      return kNoop;
  }
  throw std::logic_error("unknown op kind");
}

std::string symbol(Op op) {
  if (op.kind == OpKind::Concat) return "concat_" + std::to_string(op.concat_arity);
  for (const auto& [k, name] : kNames) {
    if (k == op.kind) return std::string(name);
  }
  throw std::logic_error("unknown op kind");
}

std::optional<Op> parse_op(std::string_view s) {
  for (const auto& [k, name] : kNames) {
    if (name == s) return Op{k, 0};
  }
  constexpr std::string_view prefix = "concat_";
  if (s.starts_with(prefix) && s.size() > prefix.size()) {
    int n = 0;
    auto digits = s.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && n >= 2 && digits.front() != '0') {
      return Op{OpKind::Concat, n};
    }
  }
  return std::nullopt;
}

std::size_t tensor_arity(Op op) {
  std::size_t n = 0;
  for (const auto& a : signature(op).args) {
    if (a.kind == VK::T || a.kind == VK::TT) ++n;
  }
  return n;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ShapeError(std::string(what) + ": expected integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::int64_t> parse_dims(std::string_view text) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t end = text.find('_', pos);
    auto part = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    out.push_back(parse_int(part, "dimension"));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::string format_dims(const std::vector<std::int64_t>& dims, char sep) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(dims[i]);
  }
  return out;
}

}  // namespace tensorsat
