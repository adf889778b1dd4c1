#include "tensorsat/rules.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

namespace tensorsat {

std::vector<std::string> RewriteRule::shared_variables() const {
  std::map<std::string, int> seen;
  for (const auto& s : sources) {
    for (const auto& v : s.variables()) ++seen[v];
  }
  std::vector<std::string> out;
  for (const auto& [v, n] : seen) {
    if (n > 1) out.push_back(v);
  }
  return out;
}

namespace {

Pattern rename(const Pattern& p, const std::map<std::string, std::string>& m) {
  if (p.is_var()) return Pattern(m.at(p.symbol));
  Pattern out(p.symbol);
  out.children.reserve(p.children.size());
  for (const auto& c : p.children) out.children.push_back(rename(c, m));
  return out;
}

}  // namespace

CanonicalPattern canonicalize(const Pattern& p) {
  CanonicalPattern out;
  std::size_t next = 0;
  for (const auto& v : p.variables()) out.rename_map.emplace(v, "?v" + std::to_string(next++));
  out.pattern = rename(p, out.rename_map);
  return out;
}

std::vector<Match> decanonicalize(std::span<const Match> matches,
                                  const std::map<std::string, std::string>& rename_map) {
  std::vector<Match> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    Match r{m.eclass, {}};
    for (const auto& [orig, canon] : rename_map) {
      auto it = m.bindings.find(canon);
      if (it != m.bindings.end()) r.bindings.emplace(orig, it->second);
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool compatible(std::span<const Bindings> matches) {
  std::unordered_map<std::string, ClassId> seen;
  for (const auto& b : matches) {
    for (const auto& [v, c] : b) {
      auto [it, inserted] = seen.emplace(v, c);
      if (!inserted && it->second != c) return false;
    }
  }
  return true;
}

Bindings combine(std::span<const Bindings> matches) {
  Bindings out;
  for (const auto& b : matches) out.insert(b.begin(), b.end());
  return out;
}

void validate_rule(const RewriteRule& rule) {
  if (rule.sources.empty()) throw std::invalid_argument("rule '" + rule.name + "' has no source pattern");
  if (rule.sources.size() != rule.targets.size()) {
    throw std::invalid_argument("rule '" + rule.name + "' has " + std::to_string(rule.sources.size()) +
                                " sources but " + std::to_string(rule.targets.size()) + " targets");
  }
  std::set<std::string> bound;
  for (const auto& s : rule.sources) {
    if (s.is_var()) throw std::invalid_argument("rule '" + rule.name + "' has a bare variable as source");
    for (const auto& v : s.variables()) bound.insert(v);
  }
  for (const auto& t : rule.targets) {
    for (const auto& v : t.variables()) {
      if (!bound.count(v)) {
        throw std::invalid_argument("rule '" + rule.name + "' target uses unbound variable " + v);
      }
    }
  }
}

namespace {

struct Stanza {
  std::string name;
  std::size_t line = 0;
  std::string body;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_rule_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

// Splits on ';' at paren depth 0.
std::vector<std::string> split_patterns(std::string_view s, std::size_t line) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth < 0) throw RuleParseError("unbalanced ')'", line);
    if (s[i] == ';' && depth == 0) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (depth != 0) throw RuleParseError("unbalanced '('", line);
  out.emplace_back(trim(s.substr(start)));
  for (const auto& p : out) {
    if (p.empty()) throw RuleParseError("empty pattern", line);
  }
  return out;
}

std::vector<Pattern> parse_side(std::string_view s, std::size_t line, const PatternValidator& validate) {
  std::vector<Pattern> out;
  for (const auto& text : split_patterns(s, line)) {
    try {
      out.push_back(parse_pattern(text));
    } catch (const SexprError& e) {
      throw RuleParseError(e.what(), line);
    }
    if (validate) {
      try {
        validate(out.back());
      } catch (const std::invalid_argument& e) {
        throw RuleParseError(e.what(), line);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<RewriteRule> parse_rules(std::string_view text, const PatternValidator& validate) {
  std::vector<Stanza> stanzas;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    bool indented = !line.empty() && std::isspace(static_cast<unsigned char>(line.front()));
    std::string_view t = trim(line);
    if (t.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!indented) {
      auto colon = t.find(':');
      if (colon == std::string_view::npos) throw RuleParseError("expected 'name:' to start a rule", line_no);
      std::string_view name = trim(t.substr(0, colon));
      if (!valid_rule_name(name)) throw RuleParseError("invalid rule name '" + std::string(name) + "'", line_no);
      stanzas.push_back(Stanza{std::string(name), line_no, std::string(trim(t.substr(colon + 1)))});
    } else {
      if (stanzas.empty()) throw RuleParseError("rule body before any rule name", line_no);
      stanzas.back().body += ' ';
      stanzas.back().body += t;
    }
    if (end == text.size()) break;
  }

  std::vector<RewriteRule> rules;
  std::set<std::string> names;
  for (const auto& st : stanzas) {
    std::string_view body = st.body;
    bool both = false;
    std::size_t arrow = body.find("<=>");
    std::size_t arrow_len = 3;
    if (arrow != std::string_view::npos) {
      both = true;
    } else {
      arrow = body.find("=>");
      arrow_len = 2;
    }
    if (arrow == std::string_view::npos) throw RuleParseError("rule '" + st.name + "' has no '=>'", st.line);
    RewriteRule r;
    r.name = st.name;
    r.sources = parse_side(body.substr(0, arrow), st.line, validate);
    r.targets = parse_side(body.substr(arrow + arrow_len), st.line, validate);
    try {
      validate_rule(r);
    } catch (const std::invalid_argument& e) {
      throw RuleParseError(e.what(), st.line);
    }
    if (!names.insert(r.name).second) throw RuleParseError("duplicate rule name '" + r.name + "'", st.line);
    if (both) {
      if (r.is_multi()) throw RuleParseError("'<=>' is only allowed for single-pattern rules", st.line);
      RewriteRule rev{r.name + "-rev", r.targets, r.sources};
      try {
        validate_rule(rev);
      } catch (const std::invalid_argument& e) {
        throw RuleParseError(std::string("reverse direction: ") + e.what(), st.line);
      }
      if (!names.insert(rev.name).second) throw RuleParseError("duplicate rule name '" + rev.name + "'", st.line);
      rules.push_back(std::move(r));
      rules.push_back(std::move(rev));
    } else {
      rules.push_back(std::move(r));
    }
  }
  return rules;
}

PreparedRules::PreparedRules(std::vector<RewriteRule> rs) : rules(std::move(rs)) {
  for (const auto& r : rules) validate_rule(r);
  std::map<std::string, std::size_t> index;
  for (const auto& r : rules) {
    if (!r.is_multi()) {
      single.push_back(&r);
      continue;
    }
    Multi m{&r, {}, {}};
    for (const auto& src : r.sources) {
      CanonicalPattern cp = canonicalize(src);
      std::string key = to_string(cp.pattern);
      auto [it, inserted] = index.emplace(key, canonical_sources.size());
      if (inserted) canonical_sources.push_back(cp.pattern);
      m.canonical_index.push_back(it->second);
      m.rename_maps.push_back(std::move(cp.rename_map));
    }
    multi.push_back(std::move(m));
  }
}

}  // namespace tensorsat
