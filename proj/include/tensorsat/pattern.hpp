#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/ids.hpp"

namespace tensorsat {

/// S-expression term, optionally containing variables (`?name` leaves).
/// A ground pattern (no variables) is a plain term.
struct Pattern {
  std::string symbol;
  std::vector<Pattern> children;

  Pattern() = default;
  explicit Pattern(std::string sym, std::vector<Pattern> kids = {})
      : symbol(std::move(sym)), children(std::move(kids)) {}

  static Pattern var(std::string_view name);

  bool is_var() const { return !symbol.empty() && symbol.front() == '?'; }
  bool is_ground() const;
  std::size_t depth() const;

  /// Distinct variable names in first-occurrence pre-order.
  std::vector<std::string> variables() const;

  bool operator==(const Pattern&) const = default;
};

std::string to_string(const Pattern& p);
std::ostream& operator<<(std::ostream& os, const Pattern& p);

class SexprError : public std::runtime_error {
 public:
  SexprError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses exactly one S-expression (surrounding whitespace allowed).
Pattern parse_pattern(std::string_view text);

/// Variable name -> e-class. Ordered so that matches compare and sort
/// deterministically.
using Bindings = std::map<std::string, ClassId>;

}  // namespace tensorsat
