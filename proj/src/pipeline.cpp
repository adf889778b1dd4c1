#include "tensorsat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <random>
#include <sstream>

#include "tensorsat/tensor/analysis.hpp"

namespace tensorsat {

std::string to_string(Extractor e) { return e == Extractor::Greedy ? "greedy" : "ilp"; }

Extractor parse_extractor(std::string_view s) {
  if (s == "greedy") return Extractor::Greedy;
  if (s == "ilp") return Extractor::Ilp;
  throw std::invalid_argument("unknown extractor '" + std::string(s) + "'");
}

void RunOptions::validate() const {
  if (extractor == Extractor::Ilp && !ilp_cycle_constraints && filter == FilterMode::None) {
    throw std::invalid_argument("ILP extraction without cycle constraints requires --filter vanilla or efficient");
  }
  if (limits.multi_iterations > limits.max_iterations) {
    throw std::invalid_argument("--k-multi must not exceed --k-max");
  }
  if (solution_text && extractor != Extractor::Ilp) {
    throw std::invalid_argument("an imported solution requires --extract ilp");
  }
}

std::vector<RewriteRule> parse_tensor_rules(std::string_view text) {
  return parse_rules(text, validate_tensor_pattern);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Explored {
  LoadedGraph loaded;
  FilterList filter;
  ExploreReport report;
};

Explored run_explore(const TensorGraph& input, const std::vector<RewriteRule>& rules, const RunOptions& options) {
  Explored e{load_graph(input), {}, {}};
  PreparedRules prepared(rules);
  e.report = explore(e.loaded.egraph, e.loaded.root, prepared, options.limits, options.filter, e.filter);
  e.loaded.egraph.rebuild();
  return e;
}

}  // namespace

ILPModel explore_and_build_ilp(const TensorGraph& input, const std::vector<RewriteRule>& rules,
                               const CostModel& costs, const RunOptions& options, ExploreReport* report) {
  options.validate();
  Explored e = run_explore(input, rules, options);
  if (report) *report = e.report;
  auto node_costs = egraph_costs(e.loaded.egraph, costs);
  auto problem = make_problem(e.loaded.egraph, node_costs, &e.filter, e.loaded.root);
  return build_ilp(problem, options.ilp_cycle_constraints, options.topo);
}

RunResult optimize(const TensorGraph& input, const std::vector<RewriteRule>& rules, const CostModel& costs,
                   const RunOptions& options) {
  options.validate();
  RunResult r;
  r.cost_before = graph_cost(input, costs);

  auto t0 = Clock::now();
  Explored e = run_explore(input, rules, options);
  r.explore = e.report;
  r.explore_seconds = since(t0);
  const TensorEGraph& g = e.loaded.egraph;
  r.egraph_nodes = g.num_nodes();
  r.egraph_classes = g.num_classes();

  auto t1 = Clock::now();
  auto node_costs = egraph_costs(g, costs);
  auto problem = make_problem(g, node_costs, &e.filter, e.loaded.root);
  if (options.extractor == Extractor::Greedy) {
    r.extraction = greedy_extract(problem);
  } else {
    ILPModel model = build_ilp(problem, options.ilp_cycle_constraints, options.topo);
    r.ilp_variables = model.lp.vars.size();
    r.ilp_constraints = model.lp.constraints.size();
    if (options.want_lp) r.lp_text = export_lp(model);
    if (options.solution_text) {
      r.extraction = decode_solution(model, import_solution(model, *options.solution_text));
    } else {
      r.extraction = solve_ilp(model, options.time_limit_seconds);
    }
  }
  r.optimized = reconstruct(g, r.extraction.selection, e.loaded.root);
  r.extract_seconds = since(t1);
  r.cost_after = graph_cost(r.optimized, costs);
  return r;
}

std::string format_stats(const RunOptions& options, const TensorGraph& input, const RunResult& r) {
  std::ostringstream os;
  os << "config.extract = " << to_string(options.extractor) << '\n';
  os << "config.filter = " << to_string(options.filter) << '\n';
  os << "config.ilp_cycle_constraints = " << (options.ilp_cycle_constraints ? "on" : "off") << '\n';
  os << "config.topo = " << to_string(options.topo) << '\n';
  os << "config.k_multi = " << options.limits.multi_iterations << '\n';
  os << "config.k_max = " << options.limits.max_iterations << '\n';
  os << "config.n_max = " << options.limits.node_limit << '\n';
  os << "graph.input_nodes = " << input.size() << '\n';
  os << "graph.output_nodes = " << r.optimized.size() << '\n';
  os << "cost.before = " << format_double(r.cost_before) << '\n';
  os << "cost.after = " << format_double(r.cost_after) << '\n';
  os << "cost.delta = " << format_double(r.cost_after - r.cost_before) << '\n';
  os << "egraph.nodes = " << r.egraph_nodes << '\n';
  os << "egraph.classes = " << r.egraph_classes << '\n';
  std::istringstream explore(r.explore.to_stats());
  for (std::string line; std::getline(explore, line);) {
    if (line.rfind("time_", 0) != 0) os << line << '\n';
  }
  os << "extract.cost = " << format_double(r.extraction.cost) << '\n';
  os << "extract.selected_classes = " << r.extraction.selection.size() << '\n';
  if (options.extractor == Extractor::Ilp) {
    os << "extract.optimal = " << (r.extraction.optimal ? "true" : "false") << '\n';
    os << "extract.bb_nodes = " << r.extraction.bb_nodes << '\n';
    os << "extract.lp_solves = " << r.extraction.lp_solves << '\n';
    os << "ilp.variables = " << r.ilp_variables << '\n';
    os << "ilp.constraints = " << r.ilp_constraints << '\n';
  }
  os << std::fixed << std::setprecision(6);
  os << "time_explore_s = " << r.explore_seconds << '\n';
  os << "time_extract_s = " << r.extract_seconds << '\n';
  return os.str();
}

// -- benchmark generators ------------------------------------------------------

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"matmul-chain", "rnn-cell-stack", "conv-fanout", "inception-block"};
  return names;
}

namespace {

std::string num(std::int64_t v) { return std::to_string(v); }

// N matmuls sharing their left input.
TensorGraph matmul_chain(int n, std::int64_t m, std::int64_t k, std::int64_t out) {
  TensorGraph g;
  auto x = g.input("x", {m, k});
  for (int i = 0; i < n; ++i) {
    auto w = g.weight("w" + num(i), {k, out});
    g.add_output(g.add("matmul", {"0"}, {x, w}));
  }
  return g;
}

// h' = tanh(x_i W_i + h U_i), stacked n times.
TensorGraph rnn_cell_stack(int n, std::int64_t batch, std::int64_t hidden) {
  TensorGraph g;
  auto h = g.input("h0", {batch, hidden});
  for (int i = 0; i < n; ++i) {
    auto x = g.input("x" + num(i), {batch, hidden});
    auto w = g.weight("w" + num(i), {hidden, hidden});
    auto u = g.weight("u" + num(i), {hidden, hidden});
    auto a = g.add("matmul", {"0"}, {x, w});
    auto b = g.add("matmul", {"0"}, {h, u});
    h = g.add("tanh", {}, {g.add("ewadd", {}, {a, b})});
  }
  g.add_output(h);
  return g;
}

// N 3x3 convolutions reading the same activation.
TensorGraph conv_fanout(int n, std::int64_t c, std::int64_t hw, std::int64_t out) {
  TensorGraph g;
  auto x = g.input("x", {1, c, hw, hw});
  for (int i = 0; i < n; ++i) {
    auto w = g.weight("w" + num(i), {out, c, 3, 3});
    g.add_output(g.add("conv", {"1", "1", "0", "0"}, {x, w}));
  }
  return g;
}

// Branches with 1x1, 3x3, 5x5, ... kernels concatenated along channels.
TensorGraph inception_block(int n, std::int64_t c, std::int64_t hw, std::int64_t out) {
  TensorGraph g;
  auto x = g.input("x", {1, c, hw, hw});
  std::vector<std::size_t> branches;
  for (int i = 0; i < n; ++i) {
    std::int64_t k = 1 + 2 * (i % 3);
    auto w = g.weight("w" + num(i), {out, c, k, k});
    branches.push_back(g.add("conv", {"1", "1", "0", "1"}, {x, w}));
  }
  if (branches.size() == 1) {
    g.add_output(branches.front());
  } else {
    g.add_output(g.add(Op{OpKind::Concat, static_cast<int>(branches.size())}, {"1"}, branches));
  }
  return g;
}

}  // namespace

TensorGraph generate_benchmark(std::string_view name, int size, std::optional<std::uint64_t> random_seed) {
  if (std::find(benchmark_names().begin(), benchmark_names().end(), name) == benchmark_names().end()) {
    throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
  }
  if (size < 1) throw std::invalid_argument("benchmark size must be at least 1");
  if (size > 64) throw std::invalid_argument("benchmark size must be at most 64");
  std::mt19937_64 rng(random_seed.value_or(0));
  auto pick = [&](std::initializer_list<std::int64_t> choices, std::int64_t fixed) {
    if (!random_seed) return fixed;
    std::uniform_int_distribution<std::size_t> d(0, choices.size() - 1);
    return *(choices.begin() + d(rng));
  };
  if (name == "matmul-chain") {
    auto m = pick({16, 32, 64}, 64);
    auto k = pick({32, 64, 128}, 128);
    auto out = pick({16, 32, 64}, 32);
    return matmul_chain(size, m, k, out);
  }
  if (name == "rnn-cell-stack") {
    auto batch = pick({16, 32, 64}, 64);
    auto hidden = pick({32, 64, 128}, 128);
    return rnn_cell_stack(size, batch, hidden);
  }
  if (name == "conv-fanout") {
    auto c = pick({8, 16, 32}, 16);
    auto hw = pick({8, 16}, 16);
    auto out = pick({8, 16, 32}, 16);
    return conv_fanout(size, c, hw, out);
  }
  auto c = pick({8, 16, 32}, 16);
  auto hw = pick({8, 16}, 16);
  auto out = pick({8, 16}, 8);
  return inception_block(size, c, hw, out);
}

// -- ablation ------------------------------------------------------------------

Sweep parse_sweep(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos) throw std::invalid_argument("sweep must look like parameter=v1,v2,...");
  Sweep s;
  s.parameter = std::string(text.substr(0, eq));
  if (s.parameter != "k_multi" && s.parameter != "extractor" && s.parameter != "filter") {
    throw std::invalid_argument("unknown sweep parameter '" + s.parameter + "' (k_multi, extractor, filter)");
  }
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto v = rest.substr(0, comma);
    if (v.empty()) throw std::invalid_argument("empty value in sweep");
    s.values.emplace_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (s.values.empty()) throw std::invalid_argument("sweep has no values");
  return s;
}

std::string run_ablation(const TensorGraph& input, const std::vector<RewriteRule>& rules, const CostModel& costs,
                         const RunOptions& base, const Sweep& sweep) {
  std::ostringstream os;
  os << "# setting\tstatus\tcost_before\tcost_after\tegraph_nodes\tegraph_classes\tfiltered\ttime_explore_s\t"
        "time_extract_s\n";
  for (const auto& v : sweep.values) {
    os << sweep.parameter << '=' << v << '\t';
    try {
      RunOptions o = base;
      if (sweep.parameter == "k_multi") {
        o.limits.multi_iterations = static_cast<std::size_t>(parse_int(v, "k_multi"));
        o.limits.max_iterations = std::max(o.limits.max_iterations, o.limits.multi_iterations);
      } else if (sweep.parameter == "extractor") {
        o.extractor = parse_extractor(v);
      } else {
        o.filter = parse_filter_mode(v);
        // Dropping the filter needs the cycle constraints back.
        if (o.filter == FilterMode::None) o.ilp_cycle_constraints = true;
      }
      RunResult r = optimize(input, rules, costs, o);
      os << "ok\t" << format_double(r.cost_before) << '\t' << format_double(r.cost_after) << '\t' << r.egraph_nodes
         << '\t' << r.egraph_classes << '\t' << r.explore.filtered_nodes << '\t' << std::fixed << std::setprecision(6)
         << r.explore_seconds << '\t' << r.extract_seconds << std::defaultfloat << '\n';
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), '\t', ' ');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << "error: " << msg << "\t-\t-\t-\t-\t-\t-\t-\n";
    }
  }
  return os.str();
}

}  // namespace tensorsat
