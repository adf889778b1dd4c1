#include <algorithm>
#include <chrono>
#include <limits>

#include "tensorsat/extract/problem.hpp"

namespace tensorsat {

std::uint32_t ExtractionProblem::class_index(ClassId c) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || *it != c) {
    // Pruned problems put the root first, so the order is not guaranteed.
    it = std::find(classes.begin(), classes.end(), c);
    if (it == classes.end()) throw std::out_of_range("class not in extraction problem");
  }
  return static_cast<std::uint32_t>(it - classes.begin());
}

std::vector<std::uint32_t> ExtractionProblem::child_classes(std::uint32_t node) const {
  std::vector<std::uint32_t> out = nodes[node].children;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint32_t> ExtractionProblem::reachable() const {
  std::vector<char> seen(classes.size(), 0);
  std::vector<std::uint32_t> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    std::uint32_t c = stack.back();
    stack.pop_back();
    for (std::uint32_t n : class_nodes[c]) {
      if (nodes[n].filtered) continue;
      for (std::uint32_t k : nodes[n].children) {
        if (!seen[k]) {
          seen[k] = 1;
          stack.push_back(k);
        }
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < classes.size(); ++c) {
    if (seen[c]) out.push_back(c);
  }
  return out;
}

std::vector<std::int64_t> reachable_selection(const ExtractionProblem& p, const std::vector<std::int64_t>& choice) {
  std::vector<std::int64_t> out(p.classes.size(), -1);
  std::vector<char> state(p.classes.size(), 0);  // 1 on stack, 2 done
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;
  auto enter = [&](std::uint32_t c) {
    if (choice[c] < 0) throw std::invalid_argument("no node selected for class " + std::to_string(p.classes[c].value));
    state[c] = 1;
    out[c] = choice[c];
    stack.emplace_back(c, 0);
  };
  enter(p.root);
  while (!stack.empty()) {
    auto& [c, pos] = stack.back();
    const auto& kids = p.nodes[static_cast<std::size_t>(choice[c])].children;
    if (pos == kids.size()) {
      state[c] = 2;
      stack.pop_back();
      continue;
    }
    std::uint32_t k = kids[pos++];
    if (state[k] == 1) throw ExtractionCycle("selected nodes form a cycle through class " + std::to_string(p.classes[k].value));
    if (state[k] == 0) enter(k);
  }
  return out;
}

double selection_cost(const ExtractionProblem& p, const std::vector<std::int64_t>& reachable_choice) {
  double total = 0;
  for (auto n : reachable_choice) {
    if (n >= 0) total += p.nodes[static_cast<std::size_t>(n)].cost;
  }
  return total;
}

ExtractionResult to_result(const ExtractionProblem& p, const std::vector<std::int64_t>& reachable_choice) {
  ExtractionResult r;
  for (std::uint32_t c = 0; c < reachable_choice.size(); ++c) {
    if (reachable_choice[c] >= 0) r.selection.emplace(p.classes[c], p.nodes[static_cast<std::size_t>(reachable_choice[c])].id);
  }
  r.cost = selection_cost(p, reachable_choice);
  return r;
}

ExtractionResult greedy_extract(const ExtractionProblem& p) {
  auto start = std::chrono::steady_clock::now();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(p.classes.size(), inf);
  std::vector<std::int64_t> fixpoint(p.classes.size(), -1);
  auto subtree = [&](const ExtractionProblem::Node& n) {
    double s = n.cost;
    for (std::uint32_t k : n.children) s += best[k];
    return s;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint32_t i = 0; i < p.nodes.size(); ++i) {
      const auto& n = p.nodes[i];
      if (n.filtered) continue;
      double s = subtree(n);
      if (s < best[n.cls]) {
        best[n.cls] = s;
        fixpoint[n.cls] = i;
        changed = true;
      }
    }
  }
  if (best[p.root] == inf) throw NoFiniteExtraction("root class has no finite-cost extraction");

  // Final pick: smallest subtree cost, then smallest id. Zero-cost ties can
  // close a cycle; the fixpoint's own choices never do.
  std::vector<std::int64_t> choice = fixpoint;
  for (std::uint32_t c = 0; c < p.classes.size(); ++c) {
    for (std::uint32_t i : p.class_nodes[c]) {
      const auto& n = p.nodes[i];
      if (n.filtered) continue;
      if (subtree(n) <= best[c]) {
        choice[c] = i;
        break;
      }
    }
  }
  std::vector<std::int64_t> reach;
  try {
    reach = reachable_selection(p, choice);
  } catch (const ExtractionCycle&) {
    reach = reachable_selection(p, fixpoint);
  }
  ExtractionResult r = to_result(p, reach);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace tensorsat
