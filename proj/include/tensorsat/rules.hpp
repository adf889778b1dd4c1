#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tensorsat/egraph.hpp"
#include "tensorsat/pattern.hpp"

namespace tensorsat {

/// Source/target pattern lists with positionally matched outputs. One source
/// makes a single-pattern rule; more make a multi-pattern rule.
struct RewriteRule {
  std::string name;
  std::vector<Pattern> sources;
  std::vector<Pattern> targets;

  bool is_multi() const { return sources.size() > 1; }
  /// Variables occurring in more than one source pattern.
  std::vector<std::string> shared_variables() const;
};

/// Pattern with variables renamed ?v0, ?v1, ... in first-occurrence
/// pre-order. `rename_map` maps original names to canonical names.
struct CanonicalPattern {
  Pattern pattern;
  std::map<std::string, std::string> rename_map;
};

CanonicalPattern canonicalize(const Pattern& p);

/// Re-keys canonical bindings by the original variable names.
std::vector<Match> decanonicalize(std::span<const Match> matches,
                                  const std::map<std::string, std::string>& rename_map);

/// True iff every variable bound in several matches is bound to the same
/// class in all of them.
bool compatible(std::span<const Bindings> matches);

/// Union of compatible bindings.
Bindings combine(std::span<const Bindings> matches);

class RuleParseError : public std::runtime_error {
 public:
  RuleParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Language hook: throws std::invalid_argument if a pattern is not well formed
/// for the client language (unknown operator, wrong arity, ...).
using PatternValidator = std::function<void(const Pattern&)>;

/// Parses the rule file format:
///
///   # comment
///   name:
///     (src ...) ; (src ...)
///     => (tgt ...) ; (tgt ...)
///
/// `<=>` declares a single-pattern rule in both directions (the reverse rule
/// is named `name-rev`).
std::vector<RewriteRule> parse_rules(std::string_view text, const PatternValidator& validate = {});

/// Structural validation shared by the parser and programmatic construction.
void validate_rule(const RewriteRule& rule);

/// Rules prepared for exploration: canonical multi-pattern sources are
/// deduplicated so each is searched once per iteration.
struct PreparedRules {
  struct Multi {
    const RewriteRule* rule;
    std::vector<std::size_t> canonical_index;  // per source: index into canonical_sources
    std::vector<std::map<std::string, std::string>> rename_maps;
  };

  std::vector<RewriteRule> rules;
  std::vector<Pattern> canonical_sources;
  std::vector<Multi> multi;
  std::vector<const RewriteRule*> single;

  explicit PreparedRules(std::vector<RewriteRule> rs);
  PreparedRules(const PreparedRules&) = delete;
  PreparedRules& operator=(const PreparedRules&) = delete;
};

/// Infers the analysis data of `pattern` instantiated with `sigma`, without
/// touching the e-graph. nullopt if any node fails to infer.
template <EClassAnalysis A>
std::optional<typename A::Data> infer_instantiation(const EGraph<A>& g, const Pattern& pattern,
                                                    const Bindings& sigma, std::string* why = nullptr) {
  using Data = typename A::Data;
  if (pattern.is_var()) {
    auto it = sigma.find(pattern.symbol);
    if (it == sigma.end()) {
      if (why) *why = "unbound variable " + pattern.symbol;
      return std::nullopt;
    }
    return g.data(it->second);
  }
  std::vector<Data> kids;
  kids.reserve(pattern.children.size());
  for (const auto& c : pattern.children) {
    auto d = infer_instantiation(g, c, sigma, why);
    if (!d) return std::nullopt;
    kids.push_back(std::move(*d));
  }
  std::vector<const Data*> ptrs;
  ptrs.reserve(kids.size());
  for (const auto& k : kids) ptrs.push_back(&k);
  return g.analysis().try_make(pattern.symbol, ptrs, why);
}

/// Shape checking: true iff every target pattern infers under `sigma`.
template <EClassAnalysis A>
bool shape_check(const EGraph<A>& g, const RewriteRule& rule, const Bindings& sigma) {
  for (const auto& target : rule.targets) {
    if (!infer_instantiation(g, target, sigma)) return false;
  }
  return true;
}

}  // namespace tensorsat
