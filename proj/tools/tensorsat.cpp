// tensorsat: tensor graph superoptimizer driver.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tensorsat/cost.hpp"
#include "tensorsat/default_rules.hpp"
#include "tensorsat/pipeline.hpp"

using namespace tensorsat;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Wraps a loader so its message names the file it came from.
template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f(std::string_view{})) {
  std::string text = read_file(path);
  try {
    return f(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

struct Config {
  std::string graph;
  std::string rules;
  std::string costs;
  bool strict_costs = false;
  std::size_t k_multi = 1;
  std::size_t k_max = 15;
  std::size_t n_max = 50000;
  double explore_timeout = 0;
  std::string extract = "ilp";
  std::string cycle_constraints = "off";
  std::string topo = "real";
  std::string filter = "efficient";
  double time_limit = 60;

  RunOptions options() const {
    RunOptions o;
    o.limits.multi_iterations = k_multi;
    o.limits.max_iterations = k_max;
    o.limits.node_limit = n_max;
    o.limits.timeout_seconds = explore_timeout;
    o.extractor = parse_extractor(extract);
    o.ilp_cycle_constraints = cycle_constraints == "on";
    o.topo = parse_topo_mode(topo);
    o.filter = parse_filter_mode(filter);
    o.time_limit_seconds = time_limit;
    return o;
  }

  TensorGraph load_graph() const {
    return with_path(graph, [](std::string_view t) { return parse_graph(t); });
  }

  std::vector<RewriteRule> load_rules() const {
    if (rules.empty()) return parse_tensor_rules(default_rules_text());
    return with_path(rules, [](std::string_view t) { return parse_tensor_rules(t); });
  }

  CostModel load_costs() const {
    if (costs.empty()) return CostModel::synthetic();
    bool strict = strict_costs;
    return with_path(costs, [strict](std::string_view t) { return CostModel::load_table(t, strict); });
  }
};

void add_config_flags(CLI::App* cmd, Config& c) {
  cmd->add_option("--graph", c.graph, "Input graph file (tensorgraph v1 text)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--rules", c.rules, "Rewrite rule file (default: built-in ruleset)")->check(CLI::ExistingFile);
  cmd->add_option("--costs", c.costs, "Cost table file, `signature = ms` lines (default: synthetic model)")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--strict-costs", c.strict_costs, "Fail on signatures missing from the cost table");
  cmd->add_option("--k-multi", c.k_multi, "Iterations that apply multi-pattern rules")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--k-max", c.k_max, "Maximum exploration iterations")->capture_default_str();
  cmd->add_option("--n-max", c.n_max, "E-node limit for exploration")->capture_default_str();
  cmd->add_option("--explore-timeout", c.explore_timeout, "Exploration wall-clock limit in seconds (0 = none)")
      ->capture_default_str();
  cmd->add_option("--extract", c.extract, "Extractor")
      ->capture_default_str()
      ->check(CLI::IsMember({"greedy", "ilp"}));
  cmd->add_option("--ilp-cycle-constraints", c.cycle_constraints, "Topological-order constraints in the ILP")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--topo", c.topo, "Topological-order variables: real in [0,1] or integers")
      ->capture_default_str()
      ->check(CLI::IsMember({"real", "int"}));
  cmd->add_option("--filter", c.filter, "Cycle filtering during exploration")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "vanilla", "efficient"}));
  cmd->add_option("--time-limit", c.time_limit, "ILP solver time limit in seconds (0 = none)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensorsat: tensor graph superoptimizer based on equality saturation"};
  app.require_subcommand(1);

  Config opt_cfg;
  std::string opt_out, opt_stats, opt_lp, opt_solution;
  auto* optimize_cmd = app.add_subcommand("optimize", "Explore rewrites and extract the cheapest acyclic graph");
  add_config_flags(optimize_cmd, opt_cfg);
  optimize_cmd->add_option("--out", opt_out, "Optimized graph output (default: stdout)");
  optimize_cmd->add_option("--stats-out", opt_stats, "Stats output, flat `key = value` lines");
  optimize_cmd->add_option("--emit-lp", opt_lp, "Also write the extraction ILP in LP format (ILP only)");
  optimize_cmd->add_option("--solution", opt_solution, "Use an external `name=value` solution instead of solving")
      ->check(CLI::ExistingFile);

  std::string bench_name, bench_out;
  int bench_size = 0;
  bool bench_random = false;
  auto* genbench_cmd = app.add_subcommand("genbench", "Write a generated benchmark graph");
  genbench_cmd->add_option("name", bench_name, "matmul-chain, rnn-cell-stack, conv-fanout or inception-block")
      ->required();
  genbench_cmd->add_option("size", bench_size, "Size parameter (>= 1)")->required();
  genbench_cmd->add_flag("--random", bench_random, "Draw tensor sizes from TENSORSAT_SEED (default seed 0)");
  genbench_cmd->add_option("--out", bench_out, "Output file (default: stdout)");

  Config abl_cfg;
  std::string abl_sweep, abl_out;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run one setting per sweep value and tabulate the results");
  add_config_flags(ablate_cmd, abl_cfg);
  ablate_cmd->add_option("--sweep", abl_sweep, "k_multi=1,2 | extractor=greedy,ilp | filter=vanilla,efficient")
      ->required();
  ablate_cmd->add_option("--out", abl_out, "Report output (default: stdout)");

  Config lp_cfg;
  std::string lp_out;
  auto* emit_cmd = app.add_subcommand("emit-lp", "Explore and write the extraction ILP without solving it");
  add_config_flags(emit_cmd, lp_cfg);
  emit_cmd->add_option("--out", lp_out, "LP output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize_cmd) {
      RunOptions o = opt_cfg.options();
      o.want_lp = !opt_lp.empty();
      if (o.want_lp && o.extractor != Extractor::Ilp) throw std::invalid_argument("--emit-lp requires --extract ilp");
      if (!opt_solution.empty()) o.solution_text = read_file(opt_solution);
      o.validate();
      TensorGraph g = opt_cfg.load_graph();
      RunResult r = optimize(g, opt_cfg.load_rules(), opt_cfg.load_costs(), o);
      write_output(opt_out, emit_graph(r.optimized));
      if (!opt_stats.empty()) write_output(opt_stats, format_stats(o, g, r));
      if (o.want_lp) write_output(opt_lp, r.lp_text);
    } else if (*genbench_cmd) {
      std::optional<std::uint64_t> seed;
      if (bench_random) {
        seed = 0;
        if (const char* env = std::getenv("TENSORSAT_SEED")) seed = std::stoull(env);
      }
      write_output(bench_out, emit_graph(generate_benchmark(bench_name, bench_size, seed)));
    } else if (*ablate_cmd) {
      RunOptions o = abl_cfg.options();
      Sweep sweep = parse_sweep(abl_sweep);
      write_output(abl_out, run_ablation(abl_cfg.load_graph(), abl_cfg.load_rules(), abl_cfg.load_costs(), o, sweep));
    } else if (*emit_cmd) {
      RunOptions o = lp_cfg.options();
      if (o.extractor != Extractor::Ilp) throw std::invalid_argument("emit-lp requires --extract ilp");
      ILPModel m = explore_and_build_ilp(lp_cfg.load_graph(), lp_cfg.load_rules(), lp_cfg.load_costs(), o);
      write_output(lp_out, export_lp(m));
    }
  } catch (const std::exception& e) {
    std::cerr << "tensorsat: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
