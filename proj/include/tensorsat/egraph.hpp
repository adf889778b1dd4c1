#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tensorsat/ids.hpp"
#include "tensorsat/pattern.hpp"
#include "tensorsat/union_find.hpp"

namespace tensorsat {

/// An operator symbol paired with its children e-classes.
struct ENode {
  std::string op;
  std::vector<ClassId> children;

  bool operator==(const ENode&) const = default;
};

struct ENodeHash {
  std::size_t operator()(const ENode& n) const noexcept {
    std::size_t h = std::hash<std::string>{}(n.op);
    for (ClassId c : n.children) h = h * 1000003u ^ std::hash<std::uint32_t>{}(c.value);
    return h;
  }
};

/// Raised when analysis data cannot be computed for a node (e.g. a shape
/// error) or two classes with incompatible data are merged.
class AnalysisConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// E-class analysis contract. `try_make` computes data for a node from its
/// children's data (nullopt + reason on failure); `merge` joins `other` into
/// `into`, returns whether `into` changed, and throws AnalysisConflict when
/// the two cannot describe equal terms. The join must be commutative and
/// associative.
template <class A>
concept EClassAnalysis = requires(const A& a, typename A::Data& into, const typename A::Data& other,
                                  std::string_view op, std::span<const typename A::Data* const> kids,
                                  std::string* why) {
  { a.try_make(op, kids, why) } -> std::same_as<std::optional<typename A::Data>>;
  { a.merge(into, other) } -> std::same_as<bool>;
};

/// Analysis that carries no data; used by purely syntactic languages.
struct NoAnalysis {
  struct Data {
    bool operator==(const Data&) const = default;
  };
  std::optional<Data> try_make(std::string_view, std::span<const Data* const>, std::string*) const {
    return Data{};
  }
  bool merge(Data&, const Data&) const { return false; }
};

/// Set of e-node ids treated as deleted by matching, reachability, and
/// extraction.
class FilterList {
 public:
  bool contains(NodeId id) const { return id.value < flags_.size() && flags_[id.value] != 0; }

  bool insert(NodeId id) {
    if (id.value >= flags_.size()) flags_.resize(id.value + 1, 0);
    if (flags_[id.value]) return false;
    flags_[id.value] = 1;
    order_.push_back(id);
    return true;
  }

  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  /// Ids in insertion order.
  const std::vector<NodeId>& ids() const { return order_; }

 private:
  std::vector<char> flags_;
  std::vector<NodeId> order_;
};

/// A pattern occurrence: the e-class the pattern root matched plus the
/// variable bindings.
struct Match {
  ClassId eclass;
  Bindings bindings;

  auto operator<=>(const Match&) const = default;
};

template <EClassAnalysis A = NoAnalysis>
class EGraph {
 public:
  using Analysis = A;
  using Data = typename A::Data;

  struct EClass {
    ClassId id;
    std::vector<NodeId> nodes;
    Data data;
  };

  EGraph() = default;
  explicit EGraph(A analysis) : analysis_(std::move(analysis)) {}

  const A& analysis() const { return analysis_; }

  // -- construction -------------------------------------------------------

  ClassId add(std::string op, std::vector<ClassId> children = {}) {
    return add_node(ENode{std::move(op), std::move(children)});
  }

  ClassId add_node(ENode node) {
    for (ClassId& c : node.children) c = find(c);
    if (auto it = memo_.find(node); it != memo_.end() && live_[it->second.value]) {
      return find(node_class_[it->second.value]);
    }
    std::vector<const Data*> kids;
    kids.reserve(node.children.size());
    for (ClassId c : node.children) kids.push_back(&classes_[c.value].data);
    std::string why;
    std::optional<Data> data = analysis_.try_make(node.op, kids, &why);
    if (!data) throw AnalysisConflict("cannot add '" + node.op + "': " + why);

    NodeId nid{static_cast<std::uint32_t>(nodes_.size())};
    ClassId cid = uf_.make_set();
    memo_.emplace(node, nid);
    nodes_.push_back(std::move(node));
    node_class_.push_back(cid);
    live_.push_back(1);
    ++live_count_;
    classes_.push_back(EClass{cid, {nid}, std::move(*data)});
    ++class_count_;
    return cid;
  }

  /// Adds a ground term bottom-up.
  ClassId add_expr(const Pattern& term) {
    if (term.is_var()) throw std::invalid_argument("add_expr: unbound variable " + term.symbol);
    std::vector<ClassId> kids;
    kids.reserve(term.children.size());
    for (const auto& c : term.children) kids.push_back(add_expr(c));
    return add(term.symbol, std::move(kids));
  }

  /// Adds `pattern` with its variables replaced by their bound classes.
  ClassId add_instantiation(const Pattern& pattern, const Bindings& sigma) {
    if (pattern.is_var()) {
      auto it = sigma.find(pattern.symbol);
      if (it == sigma.end()) throw std::invalid_argument("unbound variable " + pattern.symbol);
      return find(it->second);
    }
    std::vector<ClassId> kids;
    kids.reserve(pattern.children.size());
    for (const auto& c : pattern.children) kids.push_back(add_instantiation(c, sigma));
    return add(pattern.symbol, std::move(kids));
  }

  /// Merges two classes. Congruence is restored lazily by `rebuild`.
  ClassId merge(ClassId a, ClassId b) {
    ClassId ra = find(a);
    ClassId rb = find(b);
    if (ra == rb) return ra;
    return merge_roots(ra, rb);
  }

  /// Restores congruence closure, canonicalizes the hashcons, drops e-nodes
  /// made redundant by congruence (keeping the oldest), and brings analysis
  /// data to a fixpoint.
  void rebuild() {
    if (!dirty_) return;
    for (;;) {
      uf_.compress();
      memo_.clear();
      bool merged = false;
      for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (!live_[i]) continue;
        ENode& n = nodes_[i];
        for (ClassId& c : n.children) c = find(c);
        auto [it, inserted] = memo_.try_emplace(n, NodeId{i});
        if (inserted) continue;
        ClassId keep = find(node_class_[it->second.value]);
        ClassId mine = find(node_class_[i]);
        if (keep != mine) {
          merge_roots(keep, mine);
          merged = true;
        }
        live_[i] = 0;
        --live_count_;
      }
      if (!merged) break;
    }
    for (auto& cls : classes_) cls.nodes.clear();
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      node_class_[i] = find(node_class_[i]);
      if (live_[i]) classes_[node_class_[i].value].nodes.push_back(NodeId{i});
    }
    refresh_analysis();
    dirty_ = false;
  }

  // -- queries ------------------------------------------------------------

  ClassId find(ClassId id) const { return uf_.find(id); }
  bool dirty() const { return dirty_; }

  std::size_t num_classes() const { return class_count_; }
  std::size_t num_nodes() const { return live_count_; }
  /// Upper bound on node ids ever issued.
  std::size_t node_capacity() const { return nodes_.size(); }
  std::size_t class_capacity() const { return classes_.size(); }
  std::uint64_t merges_performed() const { return merges_; }

  bool is_live(NodeId id) const { return live_[id.value] != 0; }
  const ENode& node(NodeId id) const { return nodes_[id.value]; }
  ClassId class_of(NodeId id) const { return find(node_class_[id.value]); }

  /// Children canonicalized against the current union-find.
  ENode canonical(NodeId id) const {
    ENode n = nodes_[id.value];
    for (ClassId& c : n.children) c = find(c);
    return n;
  }

  const EClass& eclass(ClassId id) const { return classes_[find(id).value]; }
  const Data& data(ClassId id) const { return classes_[find(id).value].data; }

  /// Canonical class ids, ascending.
  std::vector<ClassId> class_ids() const {
    std::vector<ClassId> out;
    out.reserve(class_count_);
    for (std::uint32_t i = 0; i < classes_.size(); ++i) {
      if (uf_.find(ClassId{i}).value == i) out.push_back(ClassId{i});
    }
    return out;
  }

  /// Existing live e-node equal to `node` after canonicalization, if any.
  std::optional<NodeId> lookup(ENode node) const {
    for (ClassId& c : node.children) c = find(c);
    auto it = memo_.find(node);
    if (it == memo_.end() || !live_[it->second.value]) return std::nullopt;
    return it->second;
  }

  // -- matching -----------------------------------------------------------

  /// All matches of `pattern`, skipping filter-listed e-nodes. Ordered by
  /// e-class id, then bindings. Requires a rebuilt e-graph.
  std::vector<Match> ematch(const Pattern& pattern, const FilterList* filter = nullptr) const {
    require_clean("ematch");
    std::vector<Match> out;
    std::vector<ClassId> roots;
    if (pattern.is_var()) {
      roots = class_ids();
    } else {
      for (ClassId c : class_ids()) {
        for (NodeId n : classes_[c.value].nodes) {
          if (nodes_[n.value].op == pattern.symbol) {
            roots.push_back(c);
            break;
          }
        }
      }
    }
    for (ClassId root : roots) {
      std::set<Bindings> found;
      Bindings sigma;
      match_class(pattern, root, sigma, filter, [&] { found.insert(sigma); });
      for (const auto& b : found) out.push_back(Match{root, b});
    }
    return out;
  }

  /// Terms represented by `cls` whose tree depth is at most `depth_limit`.
  std::set<std::string> represented_terms(ClassId cls, std::size_t depth_limit,
                                          const FilterList* filter = nullptr) const {
    std::map<std::pair<std::uint32_t, std::size_t>, std::set<std::string>> memo;
    return terms_of(find(cls), depth_limit, filter, memo);
  }

  /// Line-oriented dump used for golden tests.
  void dump(std::ostream& os) const {
    os << "egraph classes=" << num_classes() << " nodes=" << num_nodes() << '\n';
    for (ClassId c : class_ids()) {
      os << "class " << c.value << '\n';
      std::vector<NodeId> ns;
      for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (live_[i] && find(node_class_[i]) == c) ns.push_back(NodeId{i});
      }
      for (NodeId n : ns) {
        os << "  node " << n.value << ' ' << nodes_[n.value].op;
        for (ClassId k : nodes_[n.value].children) os << ' ' << find(k).value;
        os << '\n';
      }
    }
  }

 private:
  void require_clean(const char* what) const {
    if (dirty_) throw std::logic_error(std::string(what) + " requires a rebuilt e-graph");
  }

  ClassId merge_roots(ClassId ra, ClassId rb) {
    Data joined = classes_[std::min(ra, rb).value].data;
    analysis_.merge(joined, classes_[std::max(ra, rb).value].data);
    ClassId root = uf_.unite(ra, rb);
    ClassId gone = root == ra ? rb : ra;
    EClass& keep = classes_[root.value];
    EClass& drop = classes_[gone.value];
    keep.nodes.insert(keep.nodes.end(), drop.nodes.begin(), drop.nodes.end());
    drop.nodes.clear();
    keep.data = std::move(joined);
    --class_count_;
    ++merges_;
    dirty_ = true;
    return root;
  }

  void refresh_analysis() {
    std::vector<const Data*> kids;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (!live_[i]) continue;
        const ENode& n = nodes_[i];
        kids.clear();
        for (ClassId c : n.children) kids.push_back(&classes_[c.value].data);
        std::string why;
        std::optional<Data> d = analysis_.try_make(n.op, kids, &why);
        if (!d) throw AnalysisConflict("analysis failed for e-node " + std::to_string(i) + " '" + n.op + "': " + why);
        changed |= analysis_.merge(classes_[node_class_[i].value].data, *d);
      }
    }
  }

  template <class Yield>
  void match_class(const Pattern& p, ClassId cls, Bindings& sigma, const FilterList* filter,
                   const Yield& yield) const {
    if (p.is_var()) {
      auto it = sigma.find(p.symbol);
      if (it != sigma.end()) {
        if (it->second == cls) yield();
        return;
      }
      auto pos = sigma.emplace(p.symbol, cls).first;
      yield();
      sigma.erase(pos);
      return;
    }
    for (NodeId n : classes_[cls.value].nodes) {
      if (filter && filter->contains(n)) continue;
      const ENode& node = nodes_[n.value];
      if (node.op != p.symbol || node.children.size() != p.children.size()) continue;
      match_children(p, node, 0, sigma, filter, yield);
    }
  }

  template <class Yield>
  void match_children(const Pattern& p, const ENode& node, std::size_t i, Bindings& sigma,
                      const FilterList* filter, const Yield& yield) const {
    if (i == p.children.size()) {
      yield();
      return;
    }
    std::function<void()> next = [&] { match_children(p, node, i + 1, sigma, filter, yield); };
    match_class(p.children[i], find(node.children[i]), sigma, filter, next);
  }

  const std::set<std::string>& terms_of(
      ClassId cls, std::size_t depth, const FilterList* filter,
      std::map<std::pair<std::uint32_t, std::size_t>, std::set<std::string>>& memo) const {
    auto key = std::make_pair(cls.value, depth);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::set<std::string> out;
    if (depth > 0) {
      for (NodeId n : classes_[cls.value].nodes) {
        if (filter && filter->contains(n)) continue;
        const ENode& node = nodes_[n.value];
        if (node.children.empty()) {
          out.insert(node.op);
          continue;
        }
        std::vector<std::string> partial{"(" + node.op};
        for (ClassId k : node.children) {
          const auto& sub = terms_of(find(k), depth - 1, filter, memo);
          std::vector<std::string> next;
          for (const auto& pre : partial) {
            for (const auto& t : sub) next.push_back(pre + " " + t);
          }
          partial = std::move(next);
          if (partial.empty()) break;
        }
        for (auto& t : partial) out.insert(t + ")");
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  }

  A analysis_{};
  UnionFind uf_;
  std::vector<ENode> nodes_;
  std::vector<ClassId> node_class_;
  std::vector<char> live_;
  std::vector<EClass> classes_;
  std::unordered_map<ENode, NodeId, ENodeHash> memo_;
  std::size_t live_count_ = 0;
  std::size_t class_count_ = 0;
  std::uint64_t merges_ = 0;
  bool dirty_ = false;
};

}  // namespace tensorsat
