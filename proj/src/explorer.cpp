#include "tensorsat/explorer.hpp"

#include <iomanip>
#include <sstream>

namespace tensorsat {

std::string to_string(FilterMode m) {
  switch (m) {
    case FilterMode::None:
      return "none";
    case FilterMode::Vanilla:
      return "vanilla";
    case FilterMode::Efficient:
      return "efficient";
  }
  return "?";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Saturated:
      return "saturated";
    case StopReason::NodeLimit:
      return "node-limit";
    case StopReason::IterationLimit:
      return "iter-limit";
    case StopReason::Timeout:
      return "timeout";
  }
  return "?";
}

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "none") return FilterMode::None;
  if (s == "vanilla") return FilterMode::Vanilla;
  if (s == "efficient") return FilterMode::Efficient;
  throw std::invalid_argument("unknown filter mode '" + std::string(s) + "'");
}

namespace {

template <class T>
std::string join_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string ExploreReport::to_stats() const {
  std::ostringstream os;
  os << "explore.iterations = " << iterations << '\n';
  os << "explore.stop = " << to_string(stop) << '\n';
  os << "explore.initial_nodes = " << initial_nodes << '\n';
  os << "explore.initial_classes = " << initial_classes << '\n';
  os << "explore.nodes_per_iteration = " << join_list(nodes_per_iteration) << '\n';
  os << "explore.classes_per_iteration = " << join_list(classes_per_iteration) << '\n';
  os << "explore.node_overshoot = " << node_overshoot << '\n';
  os << "explore.cycle_checks = " << cycle_checks << '\n';
  os << "explore.descendant_builds = " << descendant_builds << '\n';
  os << "explore.dfs_passes = " << dfs_passes << '\n';
  os << "explore.filtered_nodes = " << filtered_nodes << '\n';
  for (const auto& [name, s] : rules) {
    std::string p = "rule." + name + ".";
    os << p << "matches = " << s.matches << '\n';
    os << p << "applied = " << s.applied << '\n';
    os << p << "skipped_incompatible = " << s.skipped_incompatible << '\n';
    os << p << "skipped_self = " << s.skipped_self << '\n';
    os << p << "skipped_shape = " << s.skipped_shape << '\n';
    os << p << "skipped_cycle = " << s.skipped_cycle << '\n';
  }
  os << std::fixed << std::setprecision(6) << "time_explore_s = " << seconds << '\n';
  return os.str();
}

}  // namespace tensorsat
