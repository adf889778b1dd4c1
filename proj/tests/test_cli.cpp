#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "tensorsat/cost.hpp"
#include "tensorsat/pipeline.hpp"

using namespace tensorsat;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

Run sh(const std::string& args) {
  std::string cmd = std::string(TENSORSAT_CLI) + " " + args + " 2>&1";
  Run r{0, {}};
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "tensorsat_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::map<std::string, std::string> stats_of(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::string without_times(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("time_", 0) != 0) out += line + "\n";
  }
  return out;
}

const char* kShareRule = R"(matmul-share-input:
  (matmul ?act ?input1 ?input2) ; (matmul ?act ?input1 ?input3)
  => (split_0 (split 1 (matmul ?act ?input1 (concat_2 1 ?input2 ?input3)))) ;
     (split_1 (split 1 (matmul ?act ?input1 (concat_2 1 ?input2 ?input3))))
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("genbench writes the documented shapes") {
  auto d = scratch();
  auto r = sh("genbench matmul-chain 4 --out " + (d / "mc4.tg").string());
  REQUIRE(r.status == 0);
  auto g = parse_graph(slurp(d / "mc4.tg"));
  int matmuls = 0;
  for (const auto& n : g.nodes()) {
    if (n.op.kind == OpKind::Matmul) {
      ++matmuls;
      CHECK(n.inputs[0] == 0);
    }
  }
  CHECK(matmuls == 4);
  CHECK(g.outputs().size() == 4);

  r = sh("genbench conv-fanout 2");
  REQUIRE(r.status == 0);
  auto cg = parse_graph(r.out);
  int convs = 0;
  for (const auto& n : cg.nodes()) convs += n.op.kind == OpKind::Conv;
  CHECK(convs == 2);

  for (const auto& name : benchmark_names()) {
    for (int size : {1, 3}) {
      auto out = sh("genbench " + name + " " + std::to_string(size));
      CHECK(out.status == 0);
      auto bg = parse_graph(out.out);
      CHECK(bg.make_single_rooted().root().has_value());
    }
  }
  CHECK(sh("genbench matmul-chain 0").status != 0);
  CHECK(sh("genbench resnet 2").status != 0);
}

TEST_CASE("genbench --random follows TENSORSAT_SEED") {
  auto a = sh("genbench matmul-chain 3 --random");
  auto b = sh("genbench matmul-chain 3 --random");
  CHECK(a.out == b.out);
  bool differs = false;
  for (int seed = 1; seed < 6 && !differs; ++seed) {
    auto c = sh("genbench matmul-chain 3 --random");
    setenv("TENSORSAT_SEED", std::to_string(seed).c_str(), 1);
    auto s = sh("genbench matmul-chain 3 --random");
    unsetenv("TENSORSAT_SEED");
    differs = s.out != c.out;
  }
  CHECK(differs);
}

TEST_CASE("optimize merges the shared-input pair") {
  auto d = scratch();
  write(d / "share.rules", kShareRule);
  REQUIRE(sh("genbench matmul-chain 2 --out " + (d / "mc2.tg").string()).status == 0);
  auto r = sh("optimize --graph " + (d / "mc2.tg").string() + " --rules " + (d / "share.rules").string() +
              " --extract ilp --out " + (d / "opt.tg").string() + " --stats-out " + (d / "opt.stats").string());
  REQUIRE(r.status == 0);
  auto g = parse_graph(slurp(d / "opt.tg"));
  int matmuls = 0, splits = 0;
  for (const auto& n : g.nodes()) {
    matmuls += n.op.kind == OpKind::Matmul;
    splits += n.op.kind == OpKind::Split;
  }
  CHECK(matmuls == 1);
  CHECK(splits == 1);
  auto s = stats_of(slurp(d / "opt.stats"));
  CHECK(std::stod(s["cost.after"]) < std::stod(s["cost.before"]));
  CHECK(s.count("time_explore_s") == 1);
  CHECK(s.count("time_extract_s") == 1);
}

TEST_CASE("no rules gives the input back") {
  auto d = scratch();
  write(d / "empty.rules", "# nothing\n");
  for (const auto& name : benchmark_names()) {
    REQUIRE(sh("genbench " + name + " 3 --out " + (d / "in.tg").string()).status == 0);
    auto r = sh("optimize --graph " + (d / "in.tg").string() + " --rules " + (d / "empty.rules").string() +
                " --stats-out " + (d / "s.txt").string());
    REQUIRE(r.status == 0);
    auto in = parse_graph(slurp(d / "in.tg"));
    CHECK(parse_graph(r.out).canonical() == in.canonical());
    CHECK(std::stod(stats_of(slurp(d / "s.txt"))["cost.delta"]) == 0);
  }
}

TEST_CASE("runs are byte-identical apart from wall-clock fields") {
  auto d = scratch();
  REQUIRE(sh("genbench rnn-cell-stack 2 --out " + (d / "rnn.tg").string()).status == 0);
  std::string base = "optimize --graph " + (d / "rnn.tg").string() + " --k-max 4";
  for (const char* extra : {"", " --extract greedy", " --ilp-cycle-constraints on --topo int"}) {
    auto a = sh(base + extra + " --stats-out " + (d / "a.stats").string());
    auto b = sh(base + extra + " --stats-out " + (d / "b.stats").string());
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(without_times(slurp(d / "a.stats")) == without_times(slurp(d / "b.stats")));
  }
}

TEST_CASE("flags are validated") {
  auto d = scratch();
  REQUIRE(sh("genbench matmul-chain 2 --out " + (d / "mc2.tg").string()).status == 0);
  std::string g = " --graph " + (d / "mc2.tg").string();
  CHECK(sh("optimize" + g + " --bogus 1").status != 0);
  CHECK(sh("optimize" + g + " --extract magic").status != 0);
  CHECK(sh("optimize" + g + " --filter none --ilp-cycle-constraints off").status != 0);
  CHECK(sh("optimize" + g + " --filter none --ilp-cycle-constraints on").status == 0);
  CHECK(sh("optimize" + g + " --filter none --extract greedy").status == 0);
  CHECK(sh("optimize --graph /nonexistent.tg").status != 0);
  CHECK(sh("").status != 0);
  write(d / "bad.tg", "tensorgraph v1\nn0 = input() # params: id=x@4_4\nn1 = relu(n5)\noutputs: n1\n");
  auto bad = sh("optimize --graph " + (d / "bad.tg").string());
  CHECK(bad.status != 0);
  CHECK(bad.out.find("line 3") != std::string::npos);
}

TEST_CASE("help documents every flag") {
  auto r = sh("optimize --help");
  for (const char* flag : {"--graph", "--rules", "--costs", "--k-multi", "--k-max", "--n-max", "--extract",
                           "--ilp-cycle-constraints", "--topo", "--filter", "--out", "--stats-out", "--emit-lp",
                           "--time-limit", "--solution"}) {
    CHECK_MESSAGE(r.out.find(flag) != std::string::npos, flag);
  }
  auto top = sh("--help");
  for (const char* cmd : {"optimize", "genbench", "ablate", "emit-lp"}) CHECK(top.out.find(cmd) != std::string::npos);
}

TEST_CASE("emit-lp and an external solution round-trip") {
  auto d = scratch();
  write(d / "share.rules", kShareRule);
  REQUIRE(sh("genbench matmul-chain 2 --out " + (d / "mc2.tg").string()).status == 0);
  std::string common = " --graph " + (d / "mc2.tg").string() + " --rules " + (d / "share.rules").string();
  auto lp = sh("emit-lp" + common + " --out " + (d / "m.lp").string());
  REQUIRE(lp.status == 0);
  auto opt = sh("optimize" + common + " --emit-lp " + (d / "m2.lp").string() + " --out " + (d / "opt.tg").string());
  REQUIRE(opt.status == 0);
  CHECK(slurp(d / "m.lp") == slurp(d / "m2.lp"));
  CHECK(slurp(d / "m.lp").rfind("\\ extraction model", 0) == 0);

  // Hand-written solution selecting the unmerged graph (all original nodes).
  std::string text = slurp(d / "m.lp");
  CHECK(text.find("Binary") != std::string::npos);
  write(d / "bad.sol", "x9999 = 1\n");
  CHECK(sh("optimize" + common + " --solution " + (d / "bad.sol").string()).status != 0);
}

TEST_CASE("ablation sweeps") {
  auto d = scratch();
  REQUIRE(sh("genbench matmul-chain 2 --out " + (d / "mc2.tg").string()).status == 0);
  std::string g = " --graph " + (d / "mc2.tg").string();
  auto rows = [](const std::string& out) {
    std::vector<std::vector<std::string>> table;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, '\t');) cells.push_back(c);
      table.push_back(cells);
    }
    return table;
  };
  auto k = rows(sh("ablate" + g + " --sweep k_multi=1,2").out);
  REQUIRE(k.size() == 2);
  CHECK(std::stoul(k[1][4]) > std::stoul(k[0][4]));

  auto e = rows(sh("ablate" + g + " --sweep extractor=greedy,ilp").out);
  REQUIRE(e.size() == 2);
  CHECK(std::stod(e[0][3]) > std::stod(e[1][3]));

  auto f = rows(sh("ablate" + g + " --sweep filter=vanilla,efficient").out);
  REQUIRE(f.size() == 2);
  CHECK(f[0][3] == f[1][3]);

  auto bad = rows(sh("ablate" + g + " --sweep k_multi=1,99").out);
  REQUIRE(bad.size() == 2);
  CHECK(bad[0][1] == "ok");
  CHECK(bad[1][1].rfind("error", 0) == 0);
  CHECK(sh("ablate" + g + " --sweep colour=red").status != 0);
}

}  // TEST_SUITE
