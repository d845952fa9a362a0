#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "adinfer/rng.hpp"

namespace adinfer {

/// Undirected vertex pair, canonically ordered a < b.
struct VertexPair {
  int a = -1;
  int b = -1;

  VertexPair() = default;
  VertexPair(int x, int y) : a(x < y ? x : y), b(x < y ? y : x) {}

  int other(int v) const { return v == a ? b : a; }
  bool has(int v) const { return v == a || v == b; }

  friend bool operator==(const VertexPair&, const VertexPair&) = default;
  friend auto operator<=>(const VertexPair&, const VertexPair&) = default;
};

enum class ElimKind : std::uint8_t { None, Rake, Compress, Root };

struct ChildLink {
  int child = -1;
  VertexPair link;  // tree edge from the parent's identifier vertex into the child cluster

  friend bool operator==(const ChildLink&, const ChildLink&) = default;
};

/// Randomized rake-and-compress contraction of a forest, producing one
/// cluster per vertex (the cluster tree skeleton), plus change propagation
/// for single tree-edge edits.
///
/// The contraction proceeds in synchronous rounds over the current
/// contracted forest: a degree-1 vertex rakes into its neighbor (between two
/// adjacent leaves the larger id rakes, so the smallest id survives as the
/// root), and a degree-2 vertex compresses iff its per-round bit is set,
/// both neighbors' bits are clear, and neither neighbor is a leaf. Vertices
/// of higher degree wait. Bits are a pure hash of (seed, vertex, round), so
/// the outcome is a deterministic function of (edge set, seed) and edits can
/// be replayed round by round touching only vertices whose local state
/// differs from the stored run.
class Contraction {
 public:
  static Contraction build(int num_vertices, const std::vector<VertexPair>& tree_edges,
                           std::uint64_t seed);

  /// Tree-edge edit via change propagation. The result is identical to a
  /// fresh build on the edited edge set with the same seed. Returns the
  /// sorted ids of clusters whose round/kind/children/linking changed.
  std::vector<int> insert_edge(VertexPair e);
  std::vector<int> remove_edge(VertexPair e);

  int num_vertices() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  int rounds() const { return rounds_; }
  const std::set<VertexPair>& edges() const { return eset_; }

  ElimKind kind(int v) const { return elim_[static_cast<std::size_t>(v)].kind; }
  int elim_round(int v) const { return elim_[static_cast<std::size_t>(v)].round; }
  int parent(int v) const { return parent_[static_cast<std::size_t>(v)]; }
  const std::vector<ChildLink>& children(int v) const {
    return children_[static_cast<std::size_t>(v)];
  }
  const std::vector<int>& roots() const { return roots_; }
  int root_of(int v) const;

  /// Cluster chain from v's own cluster to its root, inclusive.
  std::vector<int> path_to_root(int v) const;
  /// Longest root-to-leaf cluster chain, counted in clusters.
  int depth() const;

  /// Exact comparison of the stored contraction run (per-round state and
  /// all cluster records).
  bool identical_state(const Contraction& other) const;

  /// Checks the hierarchical-clustering conditions (coverage, nesting by
  /// construction, unique identifiers, child linking via real tree edges
  /// into the child subtree). Throws std::runtime_error on violation.
  void validate() const;

  /// Vertex set of the cluster identified by v (identifier plus descendant
  /// clusters).
  std::vector<int> cluster_vertices(int v) const;

 private:
  struct Slot {
    int nbr = -1;
    int carried = -1;  // compressed cluster riding this live edge
    VertexPair orig_here;   // original edge at this endpoint
    VertexPair orig_there;  // original edge at the neighbor's endpoint

    friend bool operator==(const Slot&, const Slot&) = default;
  };

  struct ElimRecord {
    int round = -1;
    ElimKind kind = ElimKind::None;
    int rake_target = -1;
    VertexPair rake_link;
    std::vector<ChildLink> edge_children;  // carried clusters on consumed edges

    friend bool operator==(const ElimRecord&, const ElimRecord&) = default;
  };

  bool bit(int v, int round) const {
    return (hash3(seed_, static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(round)) & 1u) != 0;
  }

  template <class AdjFn>
  ElimKind decide(int v, int round, AdjFn&& adj) const;
  template <class AdjFn, class DecFn>
  std::vector<Slot> transition(int v, AdjFn&& adj, DecFn&& dec) const;
  template <class SlotsT>
  ElimRecord make_elim(int round, ElimKind kind, const SlotsT& slots) const;

  std::vector<int> apply_edit(VertexPair e, bool insert);
  void rebuild_derived();
  void patch_derived(const std::vector<std::pair<int, ElimRecord>>& changes);

  int n_ = 0;
  std::uint64_t seed_ = 0;
  int rounds_ = 0;
  std::set<VertexPair> eset_;
  std::vector<std::vector<std::vector<Slot>>> hist_;  // hist_[v][r], r in [0, elim round]
  std::vector<ElimRecord> elim_;

  // derived skeleton
  std::vector<int> parent_;
  std::vector<std::vector<ChildLink>> children_;  // sorted by child id
  std::vector<int> roots_;                        // sorted
};

}  // namespace adinfer
