#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>

namespace tensorsat {

/// E-class identifier. Only canonical after `EGraph::find`.
struct ClassId {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr ClassId() = default;
  constexpr explicit ClassId(std::uint32_t v) : value(v) {}

  constexpr auto operator<=>(const ClassId&) const = default;
  constexpr bool valid() const { return value != std::numeric_limits<std::uint32_t>::max(); }
};

/// E-node identifier: the global insertion index. Never reused, so it doubles
/// as a recency order.
struct NodeId {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}

  constexpr auto operator<=>(const NodeId&) const = default;
  constexpr bool valid() const { return value != std::numeric_limits<std::uint32_t>::max(); }
};

inline std::ostream& operator<<(std::ostream& os, ClassId id) { return os << 'c' << id.value; }
inline std::ostream& operator<<(std::ostream& os, NodeId id) { return os << 'n' << id.value; }

}  // namespace tensorsat

template <>
struct std::hash<tensorsat::ClassId> {
  std::size_t operator()(tensorsat::ClassId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<tensorsat::NodeId> {
  std::size_t operator()(tensorsat::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
