#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tensorsat/cycles.hpp"
#include "tensorsat/egraph.hpp"
#include "tensorsat/rules.hpp"

namespace tensorsat {

struct ExploreLimits {
  std::size_t node_limit = 50000;
  std::size_t max_iterations = 15;
  std::size_t multi_iterations = 1;
  double timeout_seconds = 0;  // 0 = none
  /// Skip multi-pattern combinations that pick the same match for every source.
  bool skip_self_combinations = true;
};

enum class FilterMode { None, Vanilla, Efficient };
enum class StopReason { Saturated, NodeLimit, IterationLimit, Timeout };

std::string to_string(FilterMode m);
std::string to_string(StopReason r);
FilterMode parse_filter_mode(std::string_view s);

struct RuleStats {
  std::size_t matches = 0;  // candidate combinations (multi) or matches (single)
  std::size_t applied = 0;  // applications that changed the e-graph
  std::size_t skipped_incompatible = 0;
  std::size_t skipped_self = 0;
  std::size_t skipped_shape = 0;
  std::size_t skipped_cycle = 0;
};

struct ExploreReport {
  std::size_t iterations = 0;
  StopReason stop = StopReason::IterationLimit;
  std::vector<std::size_t> nodes_per_iteration;    // after each iteration
  std::vector<std::size_t> classes_per_iteration;  // after each iteration
  std::size_t initial_nodes = 0;
  std::size_t initial_classes = 0;
  std::size_t node_overshoot = 0;  // nodes beyond the limit when it stopped exploration
  std::map<std::string, RuleStats> rules;
  std::size_t cycle_checks = 0;
  std::size_t descendant_builds = 0;
  std::size_t dfs_passes = 0;
  std::size_t filtered_nodes = 0;
  double seconds = 0;

  /// Flat `key = value` lines; wall-clock keys start with `time_`.
  std::string to_stats() const;
};

template <EClassAnalysis A>
struct ExploreHooks {
  /// Called with the rebuilt e-graph at the start of every iteration.
  std::function<void(const EGraph<A>&, const FilterList&, std::size_t iteration)> iteration_start;
  /// Called after every iteration's rebuild (and cycle removal).
  std::function<void(const EGraph<A>&, const FilterList&, std::size_t iteration)> iteration_end;
  /// Called for each application rejected by the cycle check.
  std::function<void(const RewriteRule&, const Bindings&, const std::vector<ClassId>& matched)> cycle_reject;
};

namespace detail {

template <EClassAnalysis A>
class Explorer {
 public:
  Explorer(EGraph<A>& g, ClassId root, const PreparedRules& rules, const ExploreLimits& limits, FilterMode mode,
           FilterList& filter, const ExploreHooks<A>* hooks)
      : g_(g), root_(root), rules_(rules), limits_(limits), mode_(mode), filter_(filter), hooks_(hooks) {}

  ExploreReport run() {
    start_ = std::chrono::steady_clock::now();
    g_.rebuild();
    report_.initial_nodes = g_.num_nodes();
    report_.initial_classes = g_.num_classes();
    for (const auto& r : rules_.rules) report_.rules[r.name];
    bool stopped = false;
    for (std::size_t iter = 0; iter < limits_.max_iterations && !stopped; ++iter) {
      if (timed_out()) {
        report_.stop = StopReason::Timeout;
        stopped = true;
        break;
      }
      if (hooks_ && hooks_->iteration_start) hooks_->iteration_start(g_, filter_, iter);
      std::size_t nodes_before = g_.node_capacity();
      std::uint64_t merges_before = g_.merges_performed();
      if (mode_ == FilterMode::Efficient) {
        descendants_ = get_descendants(g_, filter_);
        ++report_.descendant_builds;
      }

      std::vector<std::vector<Match>> canonical;
      if (iter < limits_.multi_iterations) {
        for (const auto& p : rules_.canonical_sources) canonical.push_back(g_.ematch(p, &filter_));
      }
      std::vector<std::vector<Match>> single;
      for (const auto* r : rules_.single) single.push_back(g_.ematch(r->sources[0], &filter_));

      if (iter < limits_.multi_iterations) {
        for (const auto& m : rules_.multi) {
          if (!apply_multi(m, canonical)) {
            stopped = true;
            break;
          }
        }
      }
      if (!stopped) {
        for (std::size_t i = 0; i < rules_.single.size(); ++i) {
          if (!apply_single(*rules_.single[i], single[i])) {
            stopped = true;
            break;
          }
        }
      }

      g_.rebuild();
      remove_cycles_if_needed();
      ++report_.iterations;
      report_.nodes_per_iteration.push_back(g_.num_nodes());
      report_.classes_per_iteration.push_back(g_.num_classes());
      if (hooks_ && hooks_->iteration_end) hooks_->iteration_end(g_, filter_, iter);
      bool changed = g_.node_capacity() != nodes_before || g_.merges_performed() != merges_before;
      if (!stopped && !changed) {
        report_.stop = StopReason::Saturated;
        stopped = true;
      }
    }
    if (!stopped) report_.stop = StopReason::IterationLimit;
    report_.filtered_nodes = filter_.size();
    report_.seconds = elapsed();
    return report_;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool timed_out() const { return limits_.timeout_seconds > 0 && elapsed() >= limits_.timeout_seconds; }

  // Returns false when a limit stops exploration.
  bool check_limits() {
    if (g_.num_nodes() >= limits_.node_limit) {
      report_.stop = StopReason::NodeLimit;
      report_.node_overshoot = g_.num_nodes() - limits_.node_limit;
      return false;
    }
    if (timed_out()) {
      report_.stop = StopReason::Timeout;
      return false;
    }
    return true;
  }

  bool cycle_ok(const RewriteRule& rule, const Bindings& sigma, const std::vector<ClassId>& matched) {
    if (mode_ == FilterMode::None) return true;
    ++report_.cycle_checks;
    bool creates = mode_ == FilterMode::Efficient ? will_create_cycle(descendants_, rule, sigma, matched)
                                                  : vanilla_check(g_, &filter_, rule, sigma, matched);
    if (creates && hooks_ && hooks_->cycle_reject) hooks_->cycle_reject(rule, sigma, matched);
    return !creates;
  }

  // Instantiates every target and unions it with its matched class.
  bool apply(const RewriteRule& rule, const Bindings& sigma, const std::vector<ClassId>& matched) {
    std::size_t nodes_before = g_.node_capacity();
    std::uint64_t merges_before = g_.merges_performed();
    for (std::size_t i = 0; i < rule.targets.size(); ++i) {
      ClassId c = g_.add_instantiation(rule.targets[i], sigma);
      g_.merge(c, matched[i]);
    }
    return g_.node_capacity() != nodes_before || g_.merges_performed() != merges_before;
  }

  bool try_apply(const RewriteRule& rule, RuleStats& stats, const Bindings& sigma,
                 const std::vector<ClassId>& matched) {
    if (!shape_check(g_, rule, sigma)) {
      ++stats.skipped_shape;
      return true;
    }
    if (!cycle_ok(rule, sigma, matched)) {
      ++stats.skipped_cycle;
      return true;
    }
    if (apply(rule, sigma, matched)) ++stats.applied;
    return check_limits();
  }

  bool apply_multi(const typename PreparedRules::Multi& m, const std::vector<std::vector<Match>>& canonical) {
    const RewriteRule& rule = *m.rule;
    RuleStats& stats = report_.rules[rule.name];
    std::size_t k = rule.sources.size();
    std::vector<std::vector<Match>> lists(k);
    for (std::size_t i = 0; i < k; ++i) {
      lists[i] = decanonicalize(canonical[m.canonical_index[i]], m.rename_maps[i]);
      if (lists[i].empty()) return true;
    }
    bool one_pattern = std::all_of(m.canonical_index.begin(), m.canonical_index.end(),
                                   [&](std::size_t c) { return c == m.canonical_index[0]; });
    std::vector<std::size_t> pick(k, 0);
    std::vector<Bindings> parts(k);
    std::vector<ClassId> matched(k);
    for (;;) {
      ++stats.matches;
      bool self = one_pattern && std::all_of(pick.begin(), pick.end(), [&](std::size_t p) { return p == pick[0]; });
      if (self && limits_.skip_self_combinations) {
        ++stats.skipped_self;
      } else {
        for (std::size_t i = 0; i < k; ++i) {
          parts[i] = lists[i][pick[i]].bindings;
          matched[i] = lists[i][pick[i]].eclass;
        }
        if (!compatible(parts)) {
          ++stats.skipped_incompatible;
        } else if (!try_apply(rule, stats, combine(parts), matched)) {
          return false;
        }
      }
      std::size_t i = k;
      while (i > 0) {
        --i;
        if (++pick[i] < lists[i].size()) break;
        pick[i] = 0;
        if (i == 0) return true;
      }
    }
  }

  bool apply_single(const RewriteRule& rule, const std::vector<Match>& matches) {
    RuleStats& stats = report_.rules[rule.name];
    std::vector<ClassId> matched(1);
    for (const auto& mt : matches) {
      ++stats.matches;
      matched[0] = mt.eclass;
      if (!try_apply(rule, stats, mt.bindings, matched)) return false;
    }
    return true;
  }

  void remove_cycles_if_needed() {
    // Vanilla checks are complete against the state they see, but unions
    // found later by congruence closure can still close a cycle, so both
    // filtering modes finish with the DFS pass.
    if (mode_ == FilterMode::None) return;
    remove_cycles(g_, filter_, root_, &report_.dfs_passes);
  }

  EGraph<A>& g_;
  ClassId root_;
  const PreparedRules& rules_;
  const ExploreLimits& limits_;
  FilterMode mode_;
  FilterList& filter_;
  const ExploreHooks<A>* hooks_;
  DescendantsMap descendants_;
  ExploreReport report_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Equality saturation over `g`: per iteration, multi-pattern rules (while
/// iteration < multi_iterations) then single-pattern rules, each searched on
/// the rebuilt e-graph and applied from that snapshot. The filter list is
/// updated in place and persists across iterations.
template <EClassAnalysis A>
ExploreReport explore(EGraph<A>& g, ClassId root, const PreparedRules& rules, const ExploreLimits& limits,
                      FilterMode mode, FilterList& filter, const ExploreHooks<A>* hooks = nullptr) {
  if (limits.multi_iterations > limits.max_iterations) {
    throw std::invalid_argument("multi-pattern iteration limit exceeds the iteration limit");
  }
  return detail::Explorer<A>(g, root, rules, limits, mode, filter, hooks).run();
}

}  // namespace tensorsat
