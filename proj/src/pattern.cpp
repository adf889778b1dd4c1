#include "tensorsat/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>

namespace tensorsat {

Pattern Pattern::var(std::string_view name) {
  if (!name.empty() && name.front() == '?') return Pattern(std::string(name));
  return Pattern("?" + std::string(name));
}

bool Pattern::is_ground() const {
  if (is_var()) return false;
  return std::all_of(children.begin(), children.end(), [](const Pattern& c) { return c.is_ground(); });
}

std::size_t Pattern::depth() const {
  std::size_t d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

void collect_vars(const Pattern& p, std::vector<std::string>& out) {
  if (p.is_var()) {
    if (std::find(out.begin(), out.end(), p.symbol) == out.end()) out.push_back(p.symbol);
    return;
  }
  for (const auto& c : p.children) collect_vars(c, out);
}

void print(const Pattern& p, std::ostream& os) {
  if (p.children.empty()) {
    os << p.symbol;
    return;
  }
  os << '(' << p.symbol;
  for (const auto& c : p.children) {
    os << ' ';
    print(c, os);
  }
  os << ')';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Pattern parse_all() {
    skip_ws();
    Pattern p = parse_one();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after expression");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SexprError(msg + " at offset " + std::to_string(pos_), pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool is_atom_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ';';
  }

  std::string atom() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_atom_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected atom");
    return std::string(text_.substr(start, pos_ - start));
  }

  Pattern parse_one() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      std::string a = atom();
      if (a == "?") fail("empty variable name");
      return Pattern(std::move(a));
    }
    ++pos_;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') fail("operator position must be an atom");
    std::string head = atom();
    if (head.front() == '?') fail("variable '" + head + "' in operator position");
    Pattern p(std::move(head));
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated list");
      if (text_[pos_] == ')') {
        ++pos_;
        break;
      }
      p.children.push_back(parse_one());
    }
    if (p.children.empty()) fail("operator '" + p.symbol + "' applied to no arguments");
    return p;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> Pattern::variables() const {
  std::vector<std::string> out;
  collect_vars(*this, out);
  return out;
}

std::string to_string(const Pattern& p) {
  std::ostringstream os;
  print(p, os);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Pattern& p) {
  print(p, os);
  return os;
}

Pattern parse_pattern(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace tensorsat
