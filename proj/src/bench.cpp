#include "adinfer/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "adinfer/chain_gen.hpp"
#include "adinfer/engine.hpp"
#include "adinfer/rng.hpp"

namespace adinfer {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string BenchReport::to_csv() const {
  std::string out = "n,op,mean_time_s,mean_touched,rebuild_time_s,depth\n";
  for (const BenchRow& r : rows) {
    out += std::to_string(r.n) + "," + r.op + "," + fmt(r.mean_time_s) + "," +
           fmt(r.mean_touched) + "," + fmt(r.rebuild_time_s) + "," + std::to_string(r.depth) +
           "\n";
  }
  return out;
}

BenchReport run_bench(const std::vector<int>& sizes, int trials, std::uint64_t seed) {
  BenchReport report;
  if (trials <= 0) return report;

  for (int n : sizes) {
    FactorGraph g = gen_chain(n, 2, 2, hash_combine(seed, static_cast<std::uint64_t>(n)));
    SplitMix64 rng(hash_combine(seed, static_cast<std::uint64_t>(n) * 3 + 1));
    auto random_var = [&] { return "x" + std::to_string(1 + rng.next_below(static_cast<std::uint64_t>(n))); };

    // build (and keep one warm engine for the update measurements)
    auto t0 = Clock::now();
    Engine eng(g, seed);
    double first_build = seconds_since(t0);
    int depth = eng.depth();
    int clusters = eng.cluster_count();

    double rebuild = 0.0;
    double build_only = first_build;
    {
      double acc = 0.0;
      for (int t = 0; t < trials; ++t) {
        std::string v = random_var();
        auto tb = Clock::now();
        Engine fresh(g, seed);
        fresh.query(v);
        acc += seconds_since(tb);
      }
      rebuild = acc / trials;
    }

    double query_time = 0.0;
    {
      double acc = 0.0;
      for (int t = 0; t < trials; ++t) {
        std::string v = random_var();
        auto tb = Clock::now();
        eng.query(v);
        acc += seconds_since(tb);
      }
      query_time = acc / trials;
    }

    double replace_time = 0.0, replace_touched = 0.0;
    {
      double acc = 0.0, touched = 0.0;
      for (int t = 0; t < trials; ++t) {
        std::string f = "f" + std::to_string(1 + rng.next_below(static_cast<std::uint64_t>(n - 1)));
        const FactorTable& cur = eng.graph().factor(f);
        SplitMix64 vr(rng.next());
        std::vector<double> vals(cur.size());
        for (double& x : vals) x = vr.next_unit();
        FactorTable repl(cur.vars(), cur.sizes(), std::move(vals));
        auto tb = Clock::now();
        eng.replace_factor(f, std::move(repl));
        acc += seconds_since(tb);
        touched += eng.touched_clusters();
      }
      replace_time = acc / trials;
      replace_touched = touched / trials;
    }

    double pair_time = 0.0, pair_touched = 0.0;
    {
      std::vector<EdgeRef> nontree = eng.graph().nontree_edges();
      double acc = 0.0, touched = 0.0;
      for (int t = 0; t < trials; ++t) {
        const EdgeRef& e = nontree[rng.next_below(nontree.size())];
        FactorTable original = eng.graph().factor(e.factor);
        std::vector<std::string> shrunk = original.vars();
        shrunk.erase(std::find(shrunk.begin(), shrunk.end(), e.var));
        FactorTable without = original.marginalize(shrunk);
        auto tb = Clock::now();
        eng.delete_nontree_edge(e.var, e.factor, std::move(without));
        int steps = eng.touched_clusters();
        eng.insert_nontree_edge(e.var, e.factor, std::move(original));
        steps += eng.touched_clusters();
        acc += seconds_since(tb);
        touched += steps;
      }
      pair_time = acc / trials;
      pair_touched = touched / trials;
    }

    report.rows.push_back({n, "build", build_only, static_cast<double>(clusters), rebuild, depth});
    report.rows.push_back({n, "query", query_time, 0.0, rebuild, depth});
    report.rows.push_back({n, "replace_factor", replace_time, replace_touched, rebuild, depth});
    report.rows.push_back({n, "nontree_pair", pair_time, pair_touched, rebuild, depth});
  }
  return report;
}

}  // namespace adinfer
