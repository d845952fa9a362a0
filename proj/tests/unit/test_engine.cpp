#include <set>
#include <stdexcept>
#include <vector>

#include "adinfer/chain_gen.hpp"
#include "adinfer/engine.hpp"
#include "adinfer/rng.hpp"
#include "doctest.h"
#include "test_graphs.hpp"

using adinfer::EdgeRef;
using adinfer::Engine;
using adinfer::FactorGraph;
using adinfer::FactorTable;
using adinfer::SplitMix64;
using testsupport::random_graph;
using testsupport::random_table;
using testsupport::random_update;

namespace {

FactorGraph two_var_chain() {
  FactorGraph g;
  g.add_variable("x1", 2);
  g.add_variable("x2", 2);
  g.add_factor("f", FactorTable({"x1", "x2"}, {2, 2}, {1, 2, 3, 4}));
  g.set_spanning_tree({{"x1", "f"}, {"x2", "f"}});
  return g;
}

void expect_all_marginals_match(const Engine& eng, double rtol = 1e-9) {
  auto oracle = eng.graph().brute_force_marginals();
  for (const auto& t : oracle) {
    FactorTable got = eng.query(t.vars()[0]);
    CAPTURE(t.vars()[0]);
    CHECK(got.approx_equal(t, rtol, 1e-12));
  }
}

}  // namespace

TEST_CASE("build on a single variable") {
  FactorGraph g;
  g.add_variable("x", 2);
  Engine eng(g, 3);
  CHECK(eng.cluster_count() == 1);
  CHECK(eng.depth() == 1);
  // no factors: the marginal is all ones, the total mass is the domain size
  CHECK(eng.query("x").values() == std::vector<double>{1, 1});
  CHECK(eng.partition_function() == 2.0);
  eng.check_invariants();
}

TEST_CASE("build on the two-variable chain") {
  Engine eng(two_var_chain(), 17);
  CHECK(eng.cluster_count() == 3);
  CHECK(eng.partition_function() == 10.0);  // sum of the factor entries
  CHECK(eng.query("x1").values() == std::vector<double>{3, 7});
  CHECK(eng.query("x2").values() == std::vector<double>{4, 6});
  // factor query: joint marginal over its scope
  CHECK(eng.query("f").values() == std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(eng.query("nope"), std::invalid_argument);
  eng.check_invariants();
}

TEST_CASE("cluster function of a two-factor cluster marginalizes the interior") {
  // factors g(u,v,x) and h(x,y) in one cluster with boundary vars {u,v,y}:
  // phi(u,v,y) = sum_x g(u,v,x) h(x,y), checked entrywise by enumeration
  SplitMix64 rng(21);
  std::vector<double> gv(8), hv(4);
  for (double& t : gv) t = rng.next_unit();
  for (double& t : hv) t = rng.next_unit();
  FactorTable gt({"u", "v", "x"}, {2, 2, 2}, gv);
  FactorTable ht({"x", "y"}, {2, 2}, hv);
  FactorTable ones = FactorTable::constant({"x"}, {2}, 1.0);

  std::vector<FactorTable> children{gt, ht};
  FactorTable phi = adinfer::cluster_function(ones, children, {"u", "v", "y"});
  CHECK(phi.vars() == std::vector<std::string>{"u", "v", "y"});
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      for (int y = 0; y < 2; ++y) {
        double want = 0;
        for (int x = 0; x < 2; ++x)
          want += gt.value_at(std::vector<int>{u, v, x}) * ht.value_at(std::vector<int>{x, y});
        CHECK(phi.value_at(std::vector<int>{u, v, y}) == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("query on the 4-cycle with one non-tree edge") {
  FactorGraph cyc;
  cyc.add_variable("x1", 2);
  cyc.add_variable("x2", 2);
  cyc.add_factor("f", FactorTable({"x1", "x2"}, {2, 2}, {1, 2, 3, 4}));
  cyc.add_factor("g", FactorTable({"x1", "x2"}, {2, 2}, {5, 6, 7, 8}));
  cyc.set_spanning_tree({{"x1", "f"}, {"x2", "f"}, {"x2", "g"}});
  Engine eng(cyc, 23);
  expect_all_marginals_match(eng);
  eng.check_invariants();
}

TEST_CASE("oracle equivalence on random graphs, multiple seeds per graph") {
  SplitMix64 rng(5005);
  for (int trial = 0; trial < 150; ++trial) {
    FactorGraph g = random_graph(rng.next());
    for (int s = 0; s < 3; ++s) {
      Engine eng(g, rng.next());
      expect_all_marginals_match(eng);
    }
  }
}

TEST_CASE("query trace: B members are ancestors and A excludes the path child") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    FactorGraph g = random_graph(rng.next());
    Engine eng(g, rng.next());
    for (const auto& vi : g.variables()) {
      auto trace = eng.query_trace(vi.id);
      const auto& levels = trace.levels;
      std::set<std::string> above;
      for (std::size_t i = 0; i < levels.size(); ++i) {
        // A-set members are children of this cluster, never the previous
        // path cluster
        for (const auto& a : levels[i].a_set) {
          if (i > 0) CHECK(a != levels[i - 1].cluster);
        }
        // B-set members sit strictly above on the path
        std::set<std::string> later;
        for (std::size_t j = i + 1; j < levels.size(); ++j) later.insert(levels[j].cluster);
        for (const auto& b : levels[i].b_set) CHECK(later.count(b) == 1);
      }
      (void)above;
    }
  }
}

TEST_CASE("engine on the synthetic chain family satisfies the boundary bounds") {
  FactorGraph g = adinfer::gen_chain(100, 2, 2, 7);
  Engine eng(g, 99);
  eng.check_invariants();  // includes |tree boundary| <= 2 and |boundary| <= 2*beta
  // too large to enumerate; cross-check queries against an independent rebuild
  Engine fresh(g, 1234567);
  for (int i : {1, 17, 50, 99, 100}) {
    std::string v = "x" + std::to_string(i);
    CHECK(eng.query(v).approx_equal(fresh.query(v), 1e-9, 1e-12));
  }
}

TEST_CASE("replace_factor") {
  SplitMix64 rng(606);
  FactorGraph g = random_graph(12345);
  Engine eng(g, 777);

  auto ids = g.factor_ids();
  REQUIRE(!ids.empty());
  const std::string fid = ids[0];

  SUBCASE("identical replacement leaves all cluster functions bitwise unchanged") {
    std::vector<FactorTable> before;
    for (const auto& v : g.variables()) before.push_back(eng.cluster_fn(v.id));
    eng.replace_factor(fid, g.factor(fid));
    for (std::size_t i = 0; i < g.variables().size(); ++i)
      CHECK(eng.cluster_fn(g.variables()[i].id).bitwise_equal(before[i]));
    // the recompute still walks the whole path to the root
    CHECK(eng.touched_clusters() ==
          static_cast<int>(eng.contraction().path_to_root(
              static_cast<int>(g.num_variables()) + g.factor_index(fid)).size()));
  }

  SUBCASE("scaling one factor scales every query") {
    std::vector<FactorTable> before;
    for (const auto& v : g.variables()) before.push_back(eng.query(v.id));
    eng.replace_factor(fid, g.factor(fid).scaled(3.0));
    for (std::size_t i = 0; i < g.variables().size(); ++i) {
      FactorTable after = eng.query(g.variables()[i].id);
      CHECK(after.approx_equal(before[i].scaled(3.0)));
    }
  }

  SUBCASE("random replacement matches oracle and a fresh engine") {
    for (int step = 0; step < 10; ++step) {
      const std::string& f = ids[rng.next_below(ids.size())];
      SplitMix64 r2(rng.next());
      eng.replace_factor(f, random_table(eng.graph().factor(f).vars(), eng.graph(), r2));
      expect_all_marginals_match(eng);
      Engine fresh(eng.graph(), eng.seed());
      for (const auto& v : eng.graph().variables())
        CHECK(eng.query(v.id).approx_equal(fresh.query(v.id)));
    }
  }

  SUBCASE("scope change is rejected") {
    const FactorTable& cur = g.factor(fid);
    std::vector<std::string> grown = cur.vars();
    // find a variable not in scope
    for (const auto& v : g.variables()) {
      if (!cur.has_var(v.id)) {
        grown.push_back(v.id);
        break;
      }
    }
    if (grown.size() > cur.vars().size()) {
      SplitMix64 r2(1);
      CHECK_THROWS_AS(eng.replace_factor(fid, random_table(grown, g, r2)),
                      std::invalid_argument);
    }
  }
}

TEST_CASE("replace_factor touches exactly the ancestors of the factor cluster") {
  FactorGraph g = adinfer::gen_chain(40, 2, 2, 50);
  Engine eng(g, 3);
  SplitMix64 rng(4);
  for (int t = 0; t < 10; ++t) {
    std::string f = "f" + std::to_string(1 + rng.next_below(39));
    SplitMix64 r2(rng.next());
    eng.replace_factor(f, random_table(eng.graph().factor(f).vars(), eng.graph(), r2));
    auto path = eng.contraction().path_to_root(static_cast<int>(eng.graph().num_variables()) +
                                               eng.graph().factor_index(f));
    std::set<std::string> expect;
    for (int vx : path)
      expect.insert(vx < static_cast<int>(eng.graph().num_variables())
                        ? eng.graph().variables()[static_cast<std::size_t>(vx)].id
                        : eng.graph().factor_id_at(vx - static_cast<int>(eng.graph().num_variables())));
    auto got = eng.last_recomputed();
    CHECK(std::set<std::string>(got.begin(), got.end()) == expect);
  }
}

TEST_CASE("non-tree edge round trip restores the engine bitwise") {
  // 4-cycle again; drop and restore the non-tree edge
  FactorGraph cyc;
  cyc.add_variable("x1", 2);
  cyc.add_variable("x2", 2);
  cyc.add_factor("f", FactorTable({"x1", "x2"}, {2, 2}, {1, 2, 3, 4}));
  cyc.add_factor("g", FactorTable({"x1", "x2"}, {2, 2}, {5, 6, 7, 8}));
  cyc.set_spanning_tree({{"x1", "f"}, {"x2", "f"}, {"x2", "g"}});
  Engine eng(cyc, 55);

  FactorTable original = eng.graph().factor("g");
  FactorTable shrunk = original.marginalize(std::vector<std::string>{"x2"});
  std::vector<FactorTable> phis_before;
  for (const auto& id : {"x1", "x2", "f", "g"}) phis_before.push_back(eng.cluster_fn(id));

  eng.delete_nontree_edge("x1", "g", shrunk);
  expect_all_marginals_match(eng);
  eng.check_invariants();
  eng.insert_nontree_edge("x1", "g", original);
  expect_all_marginals_match(eng);
  eng.check_invariants();

  std::size_t i = 0;
  for (const auto& id : {"x1", "x2", "f", "g"})
    CHECK(eng.cluster_fn(id).bitwise_equal(phis_before[i++]));
}

TEST_CASE("non-tree updates touch only ancestors of the endpoints") {
  FactorGraph g = adinfer::gen_chain(64, 2, 2, 1);
  Engine eng(g, 5);
  auto nontree = eng.graph().nontree_edges();
  REQUIRE(!nontree.empty());
  SplitMix64 rng(6);
  for (int t = 0; t < 8; ++t) {
    const EdgeRef& e = nontree[rng.next_below(nontree.size())];
    FactorTable original = eng.graph().factor(e.factor);
    std::vector<std::string> shrunk = original.vars();
    shrunk.erase(std::find(shrunk.begin(), shrunk.end(), e.var));
    FactorTable without = original.marginalize(shrunk);

    int nv = static_cast<int>(eng.graph().num_variables());
    std::set<int> allowed;
    for (int u : eng.contraction().path_to_root(eng.graph().var_index(e.var))) allowed.insert(u);
    for (int u : eng.contraction().path_to_root(nv + eng.graph().factor_index(e.factor)))
      allowed.insert(u);

    eng.delete_nontree_edge(e.var, e.factor, without);
    auto touched = eng.last_recomputed();
    CHECK(eng.touched_clusters() <= static_cast<int>(allowed.size()));
    eng.insert_nontree_edge(e.var, e.factor, original);
    CHECK(eng.touched_clusters() <= static_cast<int>(allowed.size()));
    (void)touched;
  }
}

TEST_CASE("tree edge delete splits, re-insert restores") {
  // pure chain of 6 variables
  FactorGraph g = adinfer::gen_chain(6, 7, 2, 9);  // k > n: no non-tree edges
  REQUIRE(g.nontree_edges().empty());
  Engine eng(g, 31);
  expect_all_marginals_match(eng);

  FactorTable original = eng.graph().factor("f3");
  std::vector<std::string> shrunk_scope = original.vars();
  shrunk_scope.erase(std::find(shrunk_scope.begin(), shrunk_scope.end(), "x3"));
  FactorTable shrunk = original.marginalize(shrunk_scope);

  eng.delete_tree_edge("x3", "f3", shrunk);
  eng.check_invariants();
  expect_all_marginals_match(eng);  // oracle covers the whole (split) graph

  eng.insert_tree_edge("x3", "f3", original);
  eng.check_invariants();
  expect_all_marginals_match(eng);
  for (const auto& v : eng.graph().variables()) {
    Engine fresh(eng.graph(), eng.seed());
    CHECK(eng.query(v.id).approx_equal(fresh.query(v.id)));
  }
}

TEST_CASE("tree delete refuses crossed cuts, swap handles them") {
  FactorGraph cyc;
  cyc.add_variable("x1", 2);
  cyc.add_variable("x2", 2);
  cyc.add_factor("f", FactorTable({"x1", "x2"}, {2, 2}, {1, 2, 3, 4}));
  cyc.add_factor("g", FactorTable({"x1", "x2"}, {2, 2}, {5, 6, 7, 8}));
  cyc.set_spanning_tree({{"x1", "f"}, {"x2", "f"}, {"x2", "g"}});
  Engine eng(cyc, 8);

  FactorTable shrunk = eng.graph().factor("f").marginalize(std::vector<std::string>{"x2"});
  CHECK_THROWS_WITH_AS(eng.delete_tree_edge("x1", "f", shrunk), doctest::Contains("cross"),
                       std::invalid_argument);

  auto before_x1 = eng.query("x1");
  eng.swap_tree_edge({"x1", "f"}, {"x1", "g"});
  eng.check_invariants();
  CHECK(eng.query("x1").approx_equal(before_x1));
  // swap back restores the designation
  eng.swap_tree_edge({"x1", "g"}, {"x1", "f"});
  CHECK(eng.query("x1").approx_equal(before_x1));
  CHECK(eng.graph().is_tree_edge("x1", "f"));

  // swap on a pure tree: no non-tree edge to promote
  Engine pure(two_var_chain(), 4);
  CHECK_THROWS_AS(pure.swap_tree_edge({"x1", "f"}, {"x2", "f"}), std::invalid_argument);
}

TEST_CASE("swapping the ladder from comb to snake never changes answers") {
  FactorGraph comb = testsupport::ladder(4, true, 2025);
  Engine eng(comb, 12);
  auto oracle = comb.brute_force_marginals();
  auto matches_oracle = [&] {
    for (const auto& t : oracle) CHECK(eng.query(t.vars()[0]).approx_equal(t, 1e-9, 1e-12));
  };
  matches_oracle();

  // walk toward the snake tree: promote each non-tree target edge
  FactorGraph snake = testsupport::ladder(4, false, 2025);
  std::set<std::pair<std::string, std::string>> want;
  for (const auto& e : snake.tree_edges()) want.insert({e.var, e.factor});
  int guard = 0;
  for (;;) {
    std::vector<EdgeRef> missing;
    for (const auto& e : eng.graph().nontree_edges())
      if (want.count({e.var, e.factor})) missing.push_back(e);
    if (missing.empty()) break;
    const EdgeRef add = missing.front();
    // remove: a tree edge on the cycle closed by `add` that snake does not use
    bool swapped = false;
    for (const auto& rm : eng.graph().tree_edges()) {
      if (want.count({rm.var, rm.factor})) continue;
      try {
        eng.swap_tree_edge(rm, add);
        swapped = true;
        break;
      } catch (const std::invalid_argument&) {
      }
    }
    REQUIRE(swapped);
    matches_oracle();
    eng.check_invariants();
    REQUIRE(++guard < 100);
  }
  CHECK(eng.graph().measure_graph() == snake.measure_graph());
}

TEST_CASE("random update scripts keep matching oracle and fresh rebuilds") {
  SplitMix64 rng(909090);
  for (int trial = 0; trial < 12; ++trial) {
    FactorGraph g = random_graph(rng.next(), 9);
    Engine eng(g, rng.next());
    for (int step = 0; step < 25; ++step) {
      random_update(eng, rng);
      expect_all_marginals_match(eng);
      Engine fresh(eng.graph(), eng.seed());
      for (const auto& v : eng.graph().variables())
        CHECK(eng.query(v.id).approx_equal(fresh.query(v.id), 1e-9, 1e-12));
      eng.check_invariants();
    }
  }
}

TEST_CASE("scalar factor (empty scope) is an isolated vertex") {
  FactorGraph g;
  g.add_variable("x", 2);
  g.add_factor("c", FactorTable::scalar(2.5));
  g.add_factor("f", FactorTable({"x"}, {2}, {1, 3}));
  g.set_spanning_tree({{"x", "f"}});
  Engine eng(g, 5);
  CHECK(eng.partition_function() == doctest::Approx(2.5 * 4));
  CHECK(eng.query("x").approx_equal(g.brute_force_marginal("x")));
  eng.check_invariants();
}

TEST_CASE("non-tree edge may not bridge components") {
  FactorGraph g;
  g.add_variable("x", 2);
  g.add_variable("y", 2);
  g.add_factor("f", FactorTable({"x"}, {2}, {1, 2}));
  g.add_factor("h", FactorTable({"y"}, {2}, {3, 4}));
  g.set_spanning_tree({{"x", "f"}, {"y", "h"}});
  Engine eng(g, 2);
  SplitMix64 rng(3);
  CHECK_THROWS_WITH_AS(
      eng.insert_nontree_edge("y", "f", random_table({"x", "y"}, eng.graph(), rng)),
      doctest::Contains("bridge"), std::invalid_argument);
  // the tree version works and merges the components
  eng.insert_tree_edge("y", "f", random_table({"x", "y"}, eng.graph(), rng));
  eng.check_invariants();
  expect_all_marginals_match(eng);
}

TEST_CASE("update error paths") {
  FactorGraph g = two_var_chain();
  Engine eng(g, 1);
  SplitMix64 rng(2);

  // replace unknown factor
  CHECK_THROWS_AS(eng.replace_factor("nope", FactorTable::scalar(1.0)), std::invalid_argument);
  // insert an edge that is already present
  CHECK_THROWS_AS(
      eng.insert_nontree_edge("x1", "f", random_table({"x1", "x2"}, eng.graph(), rng)),
      std::invalid_argument);
  // delete a tree edge through the non-tree entry point
  CHECK_THROWS_AS(eng.delete_nontree_edge("x1", "f",
                                          random_table({"x2"}, eng.graph(), rng)),
                  std::invalid_argument);
  // tree insert within one component cycles
  CHECK_THROWS_AS(eng.insert_tree_edge("x1", "f", random_table({"x1", "x2"}, eng.graph(), rng)),
                  std::invalid_argument);
}
