#include "tensorsat/cycles.hpp"

#include <bit>
#include <numeric>

namespace tensorsat {

SccResult strongly_connected(const std::vector<std::vector<std::uint32_t>>& succ) {
  constexpr std::uint32_t unset = std::numeric_limits<std::uint32_t>::max();
  const auto n = static_cast<std::uint32_t>(succ.size());
  SccResult r;
  r.component.assign(n, unset);
  std::vector<std::uint32_t> index(n, unset), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> call;  // vertex, next successor position
  std::uint32_t counter = 0;

  for (std::uint32_t s = 0; s < n; ++s) {
    if (index[s] != unset) continue;
    call.emplace_back(s, 0);
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = 1;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < succ[v].size()) {
        std::uint32_t w = succ[v][pos++];
        if (index[w] == unset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::uint32_t done = v;
      call.pop_back();
      if (!call.empty()) {
        std::uint32_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        for (;;) {
          std::uint32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          r.component[w] = r.count;
          if (w == done) break;
        }
        ++r.count;
      }
    }
  }
  return r;
}

bool on_cycle(const std::vector<std::vector<std::uint32_t>>& succ, const SccResult& scc, std::uint32_t v) {
  for (std::uint32_t w : succ[v]) {
    if (w == v || scc.component[w] == scc.component[v]) return true;
  }
  return false;
}

std::size_t Bitset::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

DescendantsMap::DescendantsMap(ClassGraph graph) : graph_(std::move(graph)) {
  const auto n = graph_.classes.size();
  scc_ = strongly_connected(graph_.succ);
  std::vector<std::vector<std::uint32_t>> members(scc_.count);
  for (std::uint32_t v = 0; v < n; ++v) members[scc_.component[v]].push_back(v);
  closure_.assign(scc_.count, Bitset(n));
  // Successor components always have smaller ids, so ascending order is a
  // valid bottom-up order.
  for (std::uint32_t c = 0; c < scc_.count; ++c) {
    Bitset& b = closure_[c];
    for (std::uint32_t v : members[c]) {
      for (std::uint32_t w : graph_.succ[v]) {
        b.set(w);
        std::uint32_t cw = scc_.component[w];
        if (cw != c) b |= closure_[cw];
      }
    }
  }
}

bool DescendantsMap::reaches(ClassId from, ClassId to) const {
  auto f = graph_.index_of(from);
  auto t = graph_.index_of(to);
  if (f == ClassGraph::npos || t == ClassGraph::npos) return false;
  return closure_[scc_.component[f]].test(t);
}

bool DescendantsMap::same_component(ClassId a, ClassId b) const {
  auto x = graph_.index_of(a);
  auto y = graph_.index_of(b);
  if (x == ClassGraph::npos || y == ClassGraph::npos) return false;
  return scc_.component[x] == scc_.component[y];
}

std::vector<ClassId> DescendantsMap::descendants(ClassId c) const {
  std::vector<ClassId> out;
  auto i = graph_.index_of(c);
  if (i == ClassGraph::npos) return out;
  const Bitset& b = closure_[scc_.component[i]];
  for (std::uint32_t v = 0; v < graph_.classes.size(); ++v) {
    if (b.test(v)) out.push_back(graph_.classes[v]);
  }
  return out;
}

namespace {

bool has_cycle(const std::vector<std::vector<std::uint32_t>>& succ) {
  SccResult scc = strongly_connected(succ);
  for (std::uint32_t v = 0; v < succ.size(); ++v) {
    if (on_cycle(succ, scc, v)) return true;
  }
  return false;
}

}  // namespace

namespace {

bool same_instance(const Pattern& a, const Pattern& b, const Bindings& sigma) {
  if (a.is_var() || b.is_var()) return a.is_var() && b.is_var() && sigma.at(a.symbol) == sigma.at(b.symbol);
  if (a.symbol != b.symbol || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_instance(a.children[i], b.children[i], sigma)) return false;
  }
  return true;
}

}  // namespace

bool will_create_cycle(const DescendantsMap& d, const RewriteRule& rule, const Bindings& sigma,
                       std::span<const ClassId> matched) {
  // Involved snapshot classes: matched outputs plus classes bound to target
  // variables. A small graph over them captures every way the application can
  // close a cycle: new e-nodes (matched -> bound), unions (bare-variable
  // targets), and existing reachability between involved classes.
  std::vector<ClassId> involved(matched.begin(), matched.end());
  for (const auto& t : rule.targets) {
    for (const auto& v : t.variables()) involved.push_back(sigma.at(v));
  }
  std::sort(involved.begin(), involved.end());
  involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
  auto slot = [&](ClassId c) {
    return static_cast<std::uint32_t>(std::lower_bound(involved.begin(), involved.end(), c) - involved.begin());
  };

  UnionFind groups;
  for (std::size_t i = 0; i < involved.size(); ++i) groups.make_set();
  for (std::size_t i = 0; i < rule.targets.size(); ++i) {
    if (rule.targets[i].is_var()) groups.unite(ClassId{slot(matched[i])}, ClassId{slot(sigma.at(rule.targets[i].symbol))});
    // Targets instantiating to the same term hashcons into one class.
    for (std::size_t j = 0; j < i; ++j) {
      if (same_instance(rule.targets[i], rule.targets[j], sigma)) groups.unite(ClassId{slot(matched[i])}, ClassId{slot(matched[j])});
    }
  }
  auto group = [&](ClassId c) { return groups.find(ClassId{slot(c)}).value; };

  std::vector<std::vector<std::uint32_t>> succ(involved.size());
  for (std::size_t i = 0; i < rule.targets.size(); ++i) {
    const Pattern& t = rule.targets[i];
    if (t.is_var()) continue;
    for (const auto& v : t.variables()) succ[group(matched[i])].push_back(group(sigma.at(v)));
  }
  for (ClassId a : involved) {
    for (ClassId b : involved) {
      if (a == b || d.same_component(a, b)) continue;
      if (d.reaches(a, b)) succ[group(a)].push_back(group(b));
    }
  }
  return has_cycle(succ);
}

NodeId resolve_cycle(FilterList& filter, std::span<const NodeId> cycle) {
  if (cycle.empty()) throw std::invalid_argument("resolve_cycle: empty cycle");
  NodeId newest = *std::max_element(cycle.begin(), cycle.end());
  filter.insert(newest);
  return newest;
}

namespace detail {

bool creates_new_cycle(const std::vector<std::vector<std::uint32_t>>& before,
                       std::vector<std::vector<std::uint32_t>> after,
                       std::span<const std::pair<std::uint32_t, std::uint32_t>> merges,
                       std::span<const std::uint32_t> watched) {
  UnionFind uf;
  for (std::size_t i = 0; i < after.size(); ++i) uf.make_set();
  for (auto [a, b] : merges) uf.unite(ClassId{a}, ClassId{b});

  std::vector<std::vector<std::uint32_t>> quotient(after.size());
  for (std::uint32_t v = 0; v < after.size(); ++v) {
    auto gv = uf.find(ClassId{v}).value;
    for (std::uint32_t w : after[v]) quotient[gv].push_back(uf.find(ClassId{w}).value);
  }
  SccResult scc_after = strongly_connected(quotient);
  SccResult scc_before = strongly_connected(before);

  std::vector<std::vector<std::uint32_t>> members(after.size());
  for (std::uint32_t v = 0; v < before.size(); ++v) members[uf.find(ClassId{v}).value].push_back(v);

  for (std::uint32_t m : watched) {
    auto gm = uf.find(ClassId{m}).value;
    if (!on_cycle(quotient, scc_after, gm)) continue;
    bool was_cyclic = std::any_of(members[gm].begin(), members[gm].end(),
                                  [&](std::uint32_t v) { return on_cycle(before, scc_before, v); });
    if (!was_cyclic) return true;
  }
  return false;
}

}  // namespace detail

}  // namespace tensorsat
