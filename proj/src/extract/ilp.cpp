#include "tensorsat/extract/ilp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "tensorsat/cost.hpp"

namespace tensorsat {

std::string to_string(TopoMode m) { return m == TopoMode::Real ? "real" : "int"; }

TopoMode parse_topo_mode(std::string_view s) {
  if (s == "real") return TopoMode::Real;
  if (s == "int" || s == "integer") return TopoMode::Integer;
  throw std::invalid_argument("unknown topological-order mode '" + std::string(s) + "'");
}

namespace {

ExtractionProblem prune(const ExtractionProblem& p) {
  std::vector<std::uint32_t> keep = p.reachable();
  std::vector<std::int64_t> remap(p.classes.size(), -1);
  std::uint32_t next = 1;
  remap[p.root] = 0;
  for (std::uint32_t c : keep) {
    if (c != p.root) remap[c] = next++;
  }
  ExtractionProblem out;
  out.classes.resize(keep.size());
  out.class_nodes.resize(keep.size());
  for (std::uint32_t c : keep) out.classes[static_cast<std::size_t>(remap[c])] = p.classes[c];
  for (const auto& n : p.nodes) {
    if (remap[n.cls] < 0) continue;
    ExtractionProblem::Node m = n;
    m.cls = static_cast<std::uint32_t>(remap[n.cls]);
    m.children.clear();
    for (std::uint32_t k : n.children) {
      // Filtered nodes may point outside the kept set; they are pinned to 0.
      if (remap[k] >= 0) m.children.push_back(static_cast<std::uint32_t>(remap[k]));
    }
    out.class_nodes[m.cls].push_back(static_cast<std::uint32_t>(out.nodes.size()));
    out.nodes.push_back(std::move(m));
  }
  out.root = 0;
  return out;
}

}  // namespace

ILPModel build_ilp(const ExtractionProblem& input, bool with_cycle, TopoMode topo) {
  ILPModel model;
  model.problem = prune(input);
  const ExtractionProblem& p = model.problem;
  const std::size_t M = p.classes.size();
  model.num_classes = M;
  model.with_cycle = with_cycle;
  model.topo = topo;
  if (topo == TopoMode::Real) {
    model.epsilon = 1.0 / (2.0 * static_cast<double>(M));
    model.big_a = 2.0;
  } else {
    model.epsilon = 0;
    model.big_a = static_cast<double>(M);
  }
  LinearProgram& lp = model.lp;

  for (const auto& n : p.nodes) {
    model.x_var.push_back(lp.add_var(Variable{"x" + std::to_string(n.id.value), VarType::Binary, 0, 1, n.cost}));
  }
  model.t_var.assign(M, -1);
  if (with_cycle) {
    for (std::size_t c = 0; c < M; ++c) {
      Variable t{"t" + std::to_string(c), VarType::Continuous, 0, 1, 0};
      if (topo == TopoMode::Integer) {
        t.type = VarType::Integer;
        t.upper = static_cast<double>(M) - 1;
      }
      model.t_var[c] = lp.add_var(std::move(t));
    }
  }

  Constraint root{"root", {}, Sense::Equal, 1};
  for (std::uint32_t i : p.class_nodes[p.root]) root.terms.push_back({model.x_var[i], 1});
  lp.add_constraint(std::move(root));
  model.root_constraints = 1;

  for (std::uint32_t i = 0; i < p.nodes.size(); ++i) {
    const auto& n = p.nodes[i];
    const std::string tag = std::to_string(n.id.value);
    if (n.filtered) {
      lp.add_constraint(Constraint{"pin_" + tag, {{model.x_var[i], 1}}, Sense::Equal, 0});
      ++model.pin_constraints;
      continue;
    }
    for (std::uint32_t m : p.child_classes(i)) {
      Constraint c{"child_" + tag + "_" + std::to_string(m), {{model.x_var[i], -1}}, Sense::GreaterEqual, 0};
      for (std::uint32_t j : p.class_nodes[m]) {
        if (j == i) {
          c.terms.front().coef += 1;
        } else {
          c.terms.push_back({model.x_var[j], 1});
        }
      }
      lp.add_constraint(std::move(c));
      ++model.child_constraints;
    }
    if (!with_cycle) continue;
    for (std::uint32_t m : p.child_classes(i)) {
      Constraint c{"topo_" + tag + "_" + std::to_string(m), {}, Sense::GreaterEqual, 0};
      if (m != n.cls) {
        c.terms.push_back({static_cast<std::uint32_t>(model.t_var[n.cls]), 1});
        c.terms.push_back({static_cast<std::uint32_t>(model.t_var[m]), -1});
      }
      c.terms.push_back({model.x_var[i], -model.big_a});
      c.rhs = topo == TopoMode::Real ? model.epsilon - model.big_a : 1 - model.big_a;
      lp.add_constraint(std::move(c));
      ++model.topo_constraints;
    }
  }
  return model;
}

ExtractionResult decode_solution(const ILPModel& model, const std::vector<double>& values) {
  const ExtractionProblem& p = model.problem;
  std::vector<std::int64_t> choice(p.classes.size(), -1);
  for (std::uint32_t c = 0; c < p.classes.size(); ++c) {
    for (std::uint32_t i : p.class_nodes[c]) {
      if (values[model.x_var[i]] < 0.5) continue;
      auto cur = choice[c];
      if (cur < 0 || p.nodes[i].cost < p.nodes[static_cast<std::size_t>(cur)].cost) choice[c] = i;
    }
  }
  return to_result(p, reachable_selection(p, choice));
}

ExtractionResult solve_ilp(const ILPModel& model, double time_limit_seconds) {
  const ExtractionProblem& p = model.problem;
  MilpOptions opt;
  opt.time_limit_seconds = time_limit_seconds;
  opt.implicit_binary_upper = true;
  // Topological-order rows make every relaxation much larger; there the extra
  // LP solves of strong branching cost more than the nodes they save.
  if (model.with_cycle) opt.strong_branching_candidates = 0;

  try {
    ExtractionResult greedy = greedy_extract(p);
    std::vector<double> x(model.lp.vars.size(), 0.0);
    std::vector<std::int64_t> choice(p.classes.size(), -1);
    for (std::uint32_t i = 0; i < p.nodes.size(); ++i) {
      auto it = greedy.selection.find(p.classes[p.nodes[i].cls]);
      if (it != greedy.selection.end() && it->second == p.nodes[i].id) {
        x[model.x_var[i]] = 1;
        choice[p.nodes[i].cls] = i;
      }
    }
    if (model.with_cycle) {
      // Post-order rank: every selected parent ranks above its children.
      std::vector<std::int64_t> rank(p.classes.size(), -1);
      std::int64_t next = 0;
      std::vector<std::pair<std::uint32_t, std::size_t>> stack{{p.root, 0}};
      std::vector<char> seen(p.classes.size(), 0);
      seen[p.root] = 1;
      while (!stack.empty()) {
        auto& [c, pos] = stack.back();
        const auto& kids = p.nodes[static_cast<std::size_t>(choice[c])].children;
        if (pos < kids.size()) {
          std::uint32_t k = kids[pos++];
          if (!seen[k]) {
            seen[k] = 1;
            stack.emplace_back(k, 0);
          }
          continue;
        }
        rank[c] = next++;
        stack.pop_back();
      }
      double scale = model.topo == TopoMode::Real ? 1.0 / static_cast<double>(p.classes.size()) : 1.0;
      for (std::size_t c = 0; c < p.classes.size(); ++c) {
        x[static_cast<std::size_t>(model.t_var[c])] = rank[c] < 0 ? 0.0 : static_cast<double>(rank[c]) * scale;
      }
    }
    opt.incumbent = std::move(x);
  } catch (const NoFiniteExtraction&) {
  }

  MilpResult r = solve_milp(model.lp, opt);
  if (!r.has_solution) {
    if (r.status == MilpResult::Status::TimeLimit) throw std::runtime_error("ILP time limit reached without a solution");
    throw std::runtime_error("extraction ILP is infeasible");
  }
  ExtractionResult out;
  try {
    out = decode_solution(model, r.x);
  } catch (const ExtractionCycle& e) {
    throw ExtractionCycle(std::string("ILP solution without cycle constraints is cyclic (filter list insufficient): ") +
                          e.what());
  }
  out.optimal = r.status == MilpResult::Status::Optimal;
  out.bb_nodes = r.nodes;
  out.lp_solves = r.lp_solves;
  out.seconds = r.seconds;
  return out;
}

namespace {

void write_terms(std::ostream& os, const LinearProgram& lp, const std::vector<Term>& terms) {
  std::size_t on_line = 0;
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0) continue;
    if (on_line == 8) {
      os << "\n  ";
      on_line = 0;
    }
    double a = std::abs(t.coef);
    os << (t.coef < 0 ? (first ? "-" : " -") : (first ? "" : " +"));
    if (!first || t.coef < 0) os << ' ';
    if (a != 1) os << format_double(a) << ' ';
    os << lp.vars[t.var].name;
    first = false;
    ++on_line;
  }
  if (first) os << "0 " << lp.vars[terms.empty() ? 0 : terms.front().var].name;
}

}  // namespace

std::string export_lp(const ILPModel& model) {
  const LinearProgram& lp = model.lp;
  std::ostringstream os;
  os << "\\ extraction model: " << model.num_classes << " classes, " << lp.vars.size() << " variables, "
     << lp.constraints.size() << " constraints\n";
  os << "\\ cycle constraints: " << (model.with_cycle ? "on" : "off") << ", topological order: "
     << to_string(model.topo) << "\n";
  os << "Minimize\n obj: ";
  std::vector<Term> obj;
  for (std::uint32_t j = 0; j < lp.vars.size(); ++j) {
    if (lp.vars[j].objective != 0) obj.push_back({j, lp.vars[j].objective});
  }
  if (obj.empty() && !lp.vars.empty()) obj.push_back({0, 0});
  write_terms(os, lp, obj);
  os << "\nSubject To\n";
  for (const auto& c : lp.constraints) {
    os << ' ' << c.name << ": ";
    write_terms(os, lp, c.terms);
    os << (c.sense == Sense::Equal ? " = " : c.sense == Sense::GreaterEqual ? " >= " : " <= ") << format_double(c.rhs)
       << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : lp.vars) {
    if (v.type == VarType::Binary) continue;
    os << ' ' << format_double(v.lower) << " <= " << v.name << " <= ";
    if (std::isfinite(v.upper)) {
      os << format_double(v.upper);
    } else {
      os << "+inf";
    }
    os << '\n';
  }
  std::vector<std::string> general, binary;
  for (const auto& v : lp.vars) {
    if (v.type == VarType::Integer) general.push_back(v.name);
    if (v.type == VarType::Binary) binary.push_back(v.name);
  }
  auto list = [&](const char* head, const std::vector<std::string>& names) {
    if (names.empty()) return;
    os << head << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
      os << (i % 10 == 0 ? " " : " ") << names[i];
      if (i % 10 == 9 || i + 1 == names.size()) os << '\n';
    }
  };
  list("General", general);
  list("Binary", binary);
  os << "End\n";
  return os.str();
}

std::vector<double> import_solution(const ILPModel& model, std::string_view text) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t j = 0; j < model.lp.vars.size(); ++j) index.emplace(model.lp.vars[j].name, j);
  std::vector<double> x(model.lp.vars.size(), 0.0);
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("solution line " + std::to_string(line_no) + ": expected name=value");
    }
    auto name = trim(line.substr(0, eq));
    auto val = trim(line.substr(eq + 1));
    auto it = index.find(name);
    if (it == index.end()) {
      throw std::invalid_argument("solution line " + std::to_string(line_no) + ": unknown variable '" +
                                  std::string(name) + "'");
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || ptr != val.data() + val.size()) {
      throw std::invalid_argument("solution line " + std::to_string(line_no) + ": bad value '" + std::string(val) + "'");
    }
    x[it->second] = v;
  }
  return x;
}

}  // namespace tensorsat
