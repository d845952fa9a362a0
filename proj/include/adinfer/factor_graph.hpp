#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "adinfer/factor_table.hpp"

namespace adinfer {

struct VariableInfo {
  std::string id;
  int domain_size = 0;
};

/// An edge of the bipartite graph, by id. var must be in the factor's scope.
struct EdgeRef {
  std::string var;
  std::string factor;

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
  friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

/// Bipartite variable/factor graph with a per-edge tree / non-tree
/// designation. Variable and factor ids live in disjoint namespaces.
///
/// The edge set is implied by factor scopes: E = {(x, f) : x in scope(f)}.
/// After set_spanning_tree succeeds, the tree edges form a spanning forest
/// (one tree per connected component). Mutation is single-writer; the
/// read-only diagnostics may run concurrently between mutations.
class FactorGraph {
 public:
  void add_variable(const std::string& id, int domain_size);
  void add_factor(const std::string& id, FactorTable table);

  /// Designates `edges` as the tree edges. They must form a forest that
  /// spans every connected component of the graph.
  void set_spanning_tree(const std::vector<EdgeRef>& edges);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  std::size_t num_vertices() const { return vars_.size() + factors_.size(); }
  std::size_t num_edges() const;

  bool has_variable(const std::string& id) const { return var_idx_.count(id) > 0; }
  bool has_factor(const std::string& id) const { return fac_idx_.count(id) > 0; }
  const std::vector<VariableInfo>& variables() const { return vars_; }
  const VariableInfo& variable(const std::string& id) const { return vars_[var_index(id)]; }
  const FactorTable& factor(const std::string& id) const;
  std::vector<std::string> factor_ids() const;

  bool has_edge(const std::string& var, const std::string& factor) const;
  bool is_tree_edge(const std::string& var, const std::string& factor) const;
  std::vector<EdgeRef> edges() const;
  std::vector<EdgeRef> tree_edges() const;
  std::vector<EdgeRef> nontree_edges() const;

  // -- diagnostics ---------------------------------------------------------

  /// Cut size of a tree edge: 1 + number of non-tree edges whose endpoints
  /// fall on opposite sides of the two tree components created by deleting e.
  int measure_edge(const EdgeRef& e) const;

  /// Maximum measure over all tree edges (beta); 0 when there are no tree
  /// edges.
  int measure_graph() const;

  /// d^(k+1) for maximum domain size d and maximum vertex degree k,
  /// saturating at uint64 max. Empty graph yields 1.
  std::uint64_t characteristic() const;

  /// True iff deleting the tree edge really disconnects the graph
  /// (no non-tree edges cross the cut).
  bool validate_tree_cut(const EdgeRef& e) const;

  // -- evaluation / oracle -------------------------------------------------

  /// Product of all factor entries at a full assignment.
  double joint_eval(const std::map<std::string, int>& assignment) const;

  /// Unnormalized marginal of one variable by full enumeration of joint
  /// assignments. Exponential in the number of variables; intended for
  /// graphs small enough to enumerate.
  FactorTable brute_force_marginal(const std::string& var) const;

  /// All single-variable marginals in one enumeration pass, keyed by
  /// variable id in insertion order.
  std::vector<FactorTable> brute_force_marginals() const;

  /// Sum of joint_eval over all assignments.
  double brute_force_partition() const;

  /// Full structural check; throws std::runtime_error on violation.
  void validate() const;
  bool tree_is_set() const { return tree_set_; }

  // -- engine plumbing (dense indices, scope edits) -------------------------

  int var_index(const std::string& id) const;
  int factor_index(const std::string& id) const;
  const VariableInfo& variable_at(int idx) const { return vars_[static_cast<std::size_t>(idx)]; }
  const std::string& factor_id_at(int idx) const;
  const FactorTable& factor_at(int idx) const;
  const std::vector<int>& factor_scope(int fac) const;      // var indices, sorted by id
  const std::vector<bool>& factor_tree_flags(int fac) const;
  const std::vector<int>& var_factors(int var) const;       // factor indices, sorted

  /// Replaces a factor's table; the scope must be unchanged.
  void replace_factor(const std::string& id, FactorTable table);

  /// Adds/removes one (var, factor) edge, replacing the factor's table with
  /// one over the grown/shrunk scope. Does not re-validate the spanning
  /// forest; callers maintaining a tree are responsible for that invariant.
  void add_edge(const std::string& var, const std::string& factor, FactorTable table,
                bool tree);
  void remove_edge(const std::string& var, const std::string& factor, FactorTable table);

  /// Flips designations for one swap: `remove` becomes non-tree, `add`
  /// becomes a tree edge. Structural validity is the caller's concern.
  void retag_tree_edge(const EdgeRef& remove, const EdgeRef& add);

  /// Connected components over all edges; vertex order: variables then
  /// factors (dense index + num_variables).
  std::vector<int> component_labels() const;
  /// Components over tree edges only.
  std::vector<int> tree_component_labels() const;

 private:
  struct FactorEntry {
    std::string id;
    FactorTable table;
    std::vector<int> scope;       // var indices, sorted by var id
    std::vector<bool> tree_flag;  // parallel to scope
  };

  void check_table_matches_graph(const FactorTable& t) const;
  template <typename Fn>
  void enumerate_joint(Fn&& fn) const;  // fn(states, weight)

  std::vector<VariableInfo> vars_;
  std::unordered_map<std::string, int> var_idx_;
  std::vector<FactorEntry> factors_;
  std::unordered_map<std::string, int> fac_idx_;
  std::vector<std::vector<int>> var_factors_;
  bool tree_set_ = false;
};

}  // namespace adinfer
