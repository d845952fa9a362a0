#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adinfer/contraction.hpp"
#include "adinfer/factor_graph.hpp"
#include "adinfer/factor_table.hpp"

namespace adinfer {

/// Core of a cluster-function computation: partial marginalization of the
/// vertex factor times the children's cluster functions onto the boundary
/// variables.
FactorTable cluster_function(const FactorTable& psi, std::span<const FactorTable> child_phis,
                             const std::vector<std::string>& keep);

/// Per-level record of one marginal query (path cluster, sibling set A,
/// ancestor-message set B), for inspection and tests.
struct QueryLevel {
  std::string cluster;
  std::vector<std::string> a_set;
  std::vector<std::string> b_set;
};

struct QueryTrace {
  std::vector<QueryLevel> levels;  // queried cluster first, root last
  FactorTable result;
};

/// Adaptive exact-inference engine over a factor graph with a caller-chosen
/// spanning forest.
///
/// At build time the spanning forest is contracted into a cluster tree; every
/// cluster carries its boundary edges (split into tree / non-tree parts),
/// boundary variables and a cluster function over exactly those variables.
/// Queries walk the path from a vertex's cluster to the root, passing
/// marginalization messages downward; updates recompute annotations only for
/// the clusters that can change. The engine keeps a private copy of the
/// graph, mutated in step with every update.
///
/// Single writer: updates are exclusive; queries are read-only and may run
/// concurrently with each other but not with an update.
class Engine {
 public:
  Engine(FactorGraph graph, std::uint64_t seed);

  const FactorGraph& graph() const { return g_; }
  std::uint64_t seed() const { return seed_; }

  /// Unnormalized marginal of a vertex: for a variable, the one-variable
  /// marginal (matches brute-force enumeration); for a factor, the joint
  /// marginal over its scope. A variable is preferred when both namespaces
  /// hold the id.
  FactorTable query(const std::string& vertex_id) const;
  QueryTrace query_trace(const std::string& vertex_id) const;

  /// Sum over all joint assignments (product of the root cluster scalars).
  double partition_function() const;

  void replace_factor(const std::string& factor_id, FactorTable table);
  void insert_nontree_edge(const std::string& var, const std::string& factor, FactorTable table);
  void delete_nontree_edge(const std::string& var, const std::string& factor, FactorTable table);
  void insert_tree_edge(const std::string& var, const std::string& factor, FactorTable table);
  void delete_tree_edge(const std::string& var, const std::string& factor, FactorTable table);
  /// Re-designates `remove` as non-tree and promotes the existing non-tree
  /// edge `add` into the tree. No factor values change.
  void swap_tree_edge(const EdgeRef& remove, const EdgeRef& add);

  /// Number of clusters whose boundary or cluster function was recomputed by
  /// the last update.
  int touched_clusters() const { return static_cast<int>(last_touched_.size()); }
  /// Their ids (variable or factor ids), sorted.
  std::vector<std::string> last_recomputed() const;

  int depth() const { return ct_.depth(); }
  int cluster_count() const { return ct_.num_vertices(); }
  const Contraction& contraction() const { return ct_; }

  // annotation accessors (vertex id = variable or factor id)
  std::vector<EdgeRef> boundary(const std::string& vertex_id) const;
  std::vector<EdgeRef> tree_boundary(const std::string& vertex_id) const;
  std::vector<std::string> boundary_vars(const std::string& vertex_id) const;
  const FactorTable& cluster_fn(const std::string& vertex_id) const;

  /// Structural self-check: cluster-tree conditions, boundary bounds against
  /// 2*measure, scope(phi) == boundary vars, freshness of every cached
  /// annotation. Throws std::runtime_error on violation.
  void check_invariants() const;

 private:
  struct Annot {
    std::vector<VertexPair> btree;     // tree boundary edges, sorted
    std::vector<VertexPair> bnontree;  // non-tree boundary edges, sorted
    std::vector<int> bvars;            // variable endpoints (dense), sorted
    FactorTable phi;
  };

  int vertex_of(const std::string& id) const;  // variable first, then factor
  int var_vertex(const std::string& id) const { return g_.var_index(id); }
  int fac_vertex(const std::string& id) const { return nv_ + g_.factor_index(id); }
  std::string vertex_name(int vx) const;
  bool is_var_vertex(int vx) const { return vx < nv_; }

  std::vector<VertexPair> vertex_edges(int vx) const;  // E(u), sorted
  bool edge_is_tree(VertexPair e) const;
  FactorTable psi(int vx) const;
  std::vector<std::string> bvar_ids(const std::vector<int>& bvars) const;

  void annotate(int vx);                        // boundary + phi from children
  void recompute_phi(int vx);                   // phi only
  void recompute_set(std::vector<int> set);     // bottom-up boundary + phi
  std::vector<int> with_ancestors(std::vector<int> seeds) const;
  std::vector<int> union_paths(std::initializer_list<int> vertices) const;
  FactorTable query_vertex(int vx, QueryTrace* trace) const;
  std::vector<char> split_sides(VertexPair removed) const;
  bool cut_is_clean(int var_vx, int fac_vx) const;  // no non-tree edge crosses
  bool crosses_cut(VertexPair removed, VertexPair candidate) const;

  FactorGraph g_;
  std::uint64_t seed_;
  int nv_ = 0;  // vertex mapping frozen at build: vars [0, nv), factors nv+f
  Contraction ct_;
  std::vector<Annot> annot_;
  std::vector<int> last_touched_;
};

}  // namespace adinfer
