// adinfer: adaptive marginal inference on factor graphs with a user-chosen
// spanning tree. See README.md for the file formats.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adinfer/bench.hpp"
#include "adinfer/engine.hpp"
#include "adinfer/graph_io.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw adinfer::ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ADAPTIVE_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw adinfer::ParseError("ADAPTIVE_SEED is not a number: '" + std::string(env) + "'");
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive inference on factor graphs"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--seed", seed, "contraction seed (default: ADAPTIVE_SEED or 1)")
      ->each([&](const std::string&) { seed_given = true; });

  std::string graph_path, script_path, vertex;
  bool do_normalize = false;
  std::vector<int> sizes{128, 256, 512, 1024};
  int trials = 100;

  auto* cmd_build = app.add_subcommand("build", "build the cluster tree and print its shape");
  cmd_build->add_option("graph", graph_path, "graph file")->required();

  auto* cmd_query = app.add_subcommand("query", "print the marginal of a vertex");
  cmd_query->add_option("graph", graph_path, "graph file")->required();
  cmd_query->add_option("vertex", vertex, "variable (or factor) id")->required();
  cmd_query->add_flag("--normalize", do_normalize, "normalize the marginal to mass 1");

  auto* cmd_oracle = app.add_subcommand("oracle", "brute-force marginal of a variable");
  cmd_oracle->add_option("graph", graph_path, "graph file")->required();
  cmd_oracle->add_option("vertex", vertex, "variable id")->required();

  auto* cmd_apply = app.add_subcommand("apply", "replay an update script, printing query results");
  cmd_apply->add_option("graph", graph_path, "graph file")->required();
  cmd_apply->add_option("script", script_path, "script file")->required();

  auto* cmd_measure = app.add_subcommand("measure", "print the measure of the graph");
  cmd_measure->add_option("graph", graph_path, "graph file")->required();

  auto* cmd_bench = app.add_subcommand("bench", "time updates against from-scratch rebuilds");
  cmd_bench->add_option("--sizes", sizes, "chain sizes")->delimiter(',');
  cmd_bench->add_option("--trials", trials, "trials per measurement");

  // let `adinfer <cmd> ... --seed N` reach the global option
  for (auto* sub : {cmd_build, cmd_query, cmd_oracle, cmd_apply, cmd_measure, cmd_bench})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!seed_given) seed = default_seed();

    if (cmd_build->parsed()) {
      adinfer::Engine eng(adinfer::parse_graph(slurp(graph_path)), seed);
      std::printf("depth %d\n", eng.depth());
      std::printf("measure %d\n", eng.graph().measure_graph());
      std::printf("characteristic %llu\n",
                  static_cast<unsigned long long>(eng.graph().characteristic()));
      std::printf("clusters %d\n", eng.cluster_count());
    } else if (cmd_query->parsed()) {
      adinfer::Engine eng(adinfer::parse_graph(slurp(graph_path)), seed);
      adinfer::FactorTable t = eng.query(vertex);
      if (do_normalize) t = t.normalize();
      std::printf("%s\n", adinfer::format_table_line(vertex, t).c_str());
    } else if (cmd_oracle->parsed()) {
      adinfer::FactorGraph g = adinfer::parse_graph(slurp(graph_path));
      std::printf("%s\n", adinfer::format_table_line(vertex, g.brute_force_marginal(vertex)).c_str());
    } else if (cmd_apply->parsed()) {
      adinfer::Engine eng(adinfer::parse_graph(slurp(graph_path)), seed);
      auto out = adinfer::apply_script(eng, adinfer::parse_script(slurp(script_path)));
      for (const auto& line : out) std::printf("%s\n", line.c_str());
    } else if (cmd_measure->parsed()) {
      std::printf("%d\n", adinfer::parse_graph(slurp(graph_path)).measure_graph());
    } else if (cmd_bench->parsed()) {
      std::fputs(adinfer::run_bench(sizes, trials, seed).to_csv().c_str(), stdout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
