#include "adinfer/engine.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace adinfer {

FactorTable cluster_function(const FactorTable& psi, std::span<const FactorTable> child_phis,
                             const std::vector<std::string>& keep) {
  FactorTable prod = psi;
  for (const FactorTable& c : child_phis) prod = prod.multiply(c);
  return prod.marginalize(keep);
}

Engine::Engine(FactorGraph graph, std::uint64_t seed) : g_(std::move(graph)), seed_(seed) {
  if (!g_.tree_is_set() && g_.num_edges() > 0)
    throw std::invalid_argument("engine: graph has no declared spanning forest");
  g_.validate();
  nv_ = static_cast<int>(g_.num_variables());
  int total = nv_ + static_cast<int>(g_.num_factors());

  std::vector<VertexPair> tedges;
  for (int f = 0; f < static_cast<int>(g_.num_factors()); ++f) {
    const auto& scope = g_.factor_scope(f);
    const auto& flags = g_.factor_tree_flags(f);
    for (std::size_t i = 0; i < scope.size(); ++i)
      if (flags[i]) tedges.emplace_back(scope[i], nv_ + f);
  }
  ct_ = Contraction::build(total, tedges, seed_);

  annot_.assign(static_cast<std::size_t>(total), {});
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    int rx = ct_.elim_round(x), ry = ct_.elim_round(y);
    return rx != ry ? rx < ry : x < y;
  });
  for (int v : order) annotate(v);
}

int Engine::vertex_of(const std::string& id) const {
  if (g_.has_variable(id)) return g_.var_index(id);
  if (g_.has_factor(id)) return nv_ + g_.factor_index(id);
  throw std::invalid_argument("unknown vertex '" + id + "'");
}

std::string Engine::vertex_name(int vx) const {
  if (vx < nv_) return g_.variable_at(vx).id;
  return g_.factor_id_at(vx - nv_);
}

std::vector<VertexPair> Engine::vertex_edges(int vx) const {
  std::vector<VertexPair> out;
  if (vx < nv_) {
    for (int f : g_.var_factors(vx)) out.emplace_back(vx, nv_ + f);
  } else {
    for (int v : g_.factor_scope(vx - nv_)) out.emplace_back(v, vx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Engine::edge_is_tree(VertexPair e) const {
  int fac = e.b - nv_;
  const auto& scope = g_.factor_scope(fac);
  const auto& flags = g_.factor_tree_flags(fac);
  for (std::size_t i = 0; i < scope.size(); ++i)
    if (scope[i] == e.a) return flags[i];
  throw std::logic_error("edge_is_tree: not an edge");
}

FactorTable Engine::psi(int vx) const {
  if (vx < nv_) {
    const auto& vi = g_.variable_at(vx);
    return FactorTable::constant({vi.id}, {vi.domain_size}, 1.0);
  }
  return g_.factor_at(vx - nv_);
}

std::vector<std::string> Engine::bvar_ids(const std::vector<int>& bvars) const {
  std::vector<std::string> ids;
  ids.reserve(bvars.size());
  for (int v : bvars) ids.push_back(g_.variable_at(v).id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void Engine::annotate(int vx) {
  Annot& a = annot_[static_cast<std::size_t>(vx)];

  // boundary = symmetric difference of E(u) and the children's boundaries
  std::vector<VertexPair> pool = vertex_edges(vx);
  for (const ChildLink& cl : ct_.children(vx)) {
    const Annot& c = annot_[static_cast<std::size_t>(cl.child)];
    pool.insert(pool.end(), c.btree.begin(), c.btree.end());
    pool.insert(pool.end(), c.bnontree.begin(), c.bnontree.end());
  }
  std::sort(pool.begin(), pool.end());
  a.btree.clear();
  a.bnontree.clear();
  a.bvars.clear();
  for (std::size_t i = 0; i < pool.size();) {
    std::size_t j = i;
    while (j < pool.size() && pool[j] == pool[i]) ++j;
    if ((j - i) % 2 == 1) {
      if (edge_is_tree(pool[i])) a.btree.push_back(pool[i]);
      else a.bnontree.push_back(pool[i]);
      a.bvars.push_back(pool[i].a);
    }
    i = j;
  }
  std::sort(a.bvars.begin(), a.bvars.end());
  a.bvars.erase(std::unique(a.bvars.begin(), a.bvars.end()), a.bvars.end());

  recompute_phi(vx);
}

void Engine::recompute_phi(int vx) {
  Annot& a = annot_[static_cast<std::size_t>(vx)];
  FactorTable prod = psi(vx);
  for (const ChildLink& cl : ct_.children(vx))
    prod = prod.multiply(annot_[static_cast<std::size_t>(cl.child)].phi);
  a.phi = prod.marginalize(bvar_ids(a.bvars));
}

void Engine::recompute_set(std::vector<int> set) {
  std::sort(set.begin(), set.end(), [&](int x, int y) {
    int rx = ct_.elim_round(x), ry = ct_.elim_round(y);
    return rx != ry ? rx < ry : x < y;
  });
  set.erase(std::unique(set.begin(), set.end()), set.end());
  for (int v : set) annotate(v);
  last_touched_ = std::move(set);
}

std::vector<int> Engine::with_ancestors(std::vector<int> seeds) const {
  std::set<int> seen(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    int p = ct_.parent(seeds[i]);
    if (p != -1 && seen.insert(p).second) seeds.push_back(p);
  }
  return std::vector<int>(seen.begin(), seen.end());
}

std::vector<int> Engine::union_paths(std::initializer_list<int> vertices) const {
  std::set<int> seen;
  for (int v : vertices)
    for (int u : ct_.path_to_root(v)) seen.insert(u);
  return std::vector<int>(seen.begin(), seen.end());
}

// -- queries ----------------------------------------------------------------

FactorTable Engine::query(const std::string& vertex_id) const {
  return query_vertex(vertex_of(vertex_id), nullptr);
}

QueryTrace Engine::query_trace(const std::string& vertex_id) const {
  QueryTrace trace;
  trace.result = query_vertex(vertex_of(vertex_id), &trace);
  return trace;
}

FactorTable Engine::query_vertex(int vx, QueryTrace* trace) const {
  std::vector<int> path = ct_.path_to_root(vx);
  std::size_t n = path.size();
  std::unordered_map<int, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos.emplace(path[i], i);

  if (trace) trace->levels.resize(n);

  // outer endpoint of a tree boundary edge of path[i]: the endpoint whose
  // own cluster sits strictly above position i on the path
  auto outer_of = [&](VertexPair e, std::size_t i) {
    int cand = -1;
    auto ia = pos.find(e.a);
    if (ia != pos.end() && ia->second > i) cand = e.a;
    auto ib = pos.find(e.b);
    if (ib != pos.end() && ib->second > i) {
      if (cand != -1) throw std::logic_error("query: boundary edge with two outer endpoints");
      cand = e.b;
    }
    if (cand == -1) throw std::logic_error("query: boundary edge without an ancestor endpoint");
    return cand;
  };

  std::vector<FactorTable> msgs(n);
  std::vector<char> have_msg(n, 0);
  std::vector<char> consumed(n, 0);
  // levels whose message is computed but not yet multiplied in; their scope
  // variables must not be summed out elsewhere in the meantime
  std::vector<std::size_t> pending;

  auto collect_b = [&](std::size_t i) {
    // tree boundary edges of path[i] that are not boundary edges of path[i-1]
    const Annot& ai = annot_[static_cast<std::size_t>(path[i])];
    std::vector<VertexPair> fresh;
    if (i == 0) {
      fresh = ai.btree;
    } else {
      const Annot& prev = annot_[static_cast<std::size_t>(path[i - 1])];
      std::set_difference(ai.btree.begin(), ai.btree.end(), prev.btree.begin(), prev.btree.end(),
                          std::back_inserter(fresh));
    }
    std::vector<std::size_t> sources;
    for (const VertexPair& e : fresh) sources.push_back(pos.at(outer_of(e, i)));
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    return sources;
  };

  for (std::size_t i = n; i-- > 1;) {
    int u = path[i];
    FactorTable prod = psi(u);
    std::vector<std::string> a_names;
    for (const ChildLink& cl : ct_.children(u)) {
      if (cl.child == path[i - 1]) continue;
      prod = prod.multiply(annot_[static_cast<std::size_t>(cl.child)].phi);
      if (trace) a_names.push_back(vertex_name(cl.child));
    }
    std::vector<std::string> b_names;
    for (std::size_t src : collect_b(i)) {
      if (!have_msg[src]) throw std::logic_error("query: message referenced before computed");
      if (consumed[src]) throw std::logic_error("query: message consumed twice");
      consumed[src] = 1;
      prod = prod.multiply(msgs[src]);
      pending.erase(std::find(pending.begin(), pending.end(), src));
      if (trace) b_names.push_back(vertex_name(path[src]));
    }
    // keep what the next cluster down exposes, plus anything a still-pending
    // ancestor message will want to multiply against later
    std::set<std::string> keepset;
    for (const std::string& id : bvar_ids(annot_[static_cast<std::size_t>(path[i - 1])].bvars))
      keepset.insert(id);
    for (std::size_t p : pending)
      for (const std::string& id : msgs[p].vars()) keepset.insert(id);
    std::vector<std::string> keep;
    for (const std::string& id : keepset)
      if (prod.has_var(id)) keep.push_back(id);
    msgs[i] = prod.marginalize(keep);
    have_msg[i] = 1;
    pending.push_back(i);
    if (trace) {
      trace->levels[i].cluster = vertex_name(u);
      trace->levels[i].a_set = std::move(a_names);
      trace->levels[i].b_set = std::move(b_names);
    }
  }

  // final combine at the queried cluster
  FactorTable prod = psi(vx);
  std::vector<std::string> a_names;
  for (const ChildLink& cl : ct_.children(vx)) {
    prod = prod.multiply(annot_[static_cast<std::size_t>(cl.child)].phi);
    if (trace) a_names.push_back(vertex_name(cl.child));
  }
  std::vector<std::string> b_names;
  for (std::size_t src : collect_b(0)) {
    if (!have_msg[src]) throw std::logic_error("query: message referenced before computed");
    if (consumed[src]) throw std::logic_error("query: message consumed twice");
    consumed[src] = 1;
    prod = prod.multiply(msgs[src]);
    pending.erase(std::find(pending.begin(), pending.end(), src));
    if (trace) b_names.push_back(vertex_name(path[src]));
  }
  for (std::size_t i = 1; i < n; ++i)
    if (!consumed[i]) throw std::logic_error("query: message never consumed");
  if (!pending.empty()) throw std::logic_error("query: pending message survived the combine");

  std::vector<std::string> keep;
  if (is_var_vertex(vx)) {
    keep.push_back(g_.variable_at(vx).id);
  } else {
    keep = g_.factor_at(vx - nv_).vars();
  }
  std::vector<std::string> keep_present;
  for (const std::string& id : keep)
    if (prod.has_var(id)) keep_present.push_back(id);
  FactorTable res = prod.marginalize(keep_present);
  if (keep_present.size() != keep.size()) {
    // degenerate corner: psi introduced the variable, so this cannot happen
    throw std::logic_error("query: result lost part of the target scope");
  }

  // other components contribute their total mass as a constant
  int my_root = path.back();
  double other = 1.0;
  for (int r : ct_.roots()) {
    if (r == my_root) continue;
    const FactorTable& phi = annot_[static_cast<std::size_t>(r)].phi;
    if (phi.size() != 1) throw std::logic_error("query: root cluster function is not scalar");
    other *= phi.at(0);
  }
  if (other != 1.0) res = res.scaled(other);

  if (trace) {
    trace->levels[0].cluster = vertex_name(vx);
    trace->levels[0].a_set = std::move(a_names);
    trace->levels[0].b_set = std::move(b_names);
  }
  return res;
}

double Engine::partition_function() const {
  double z = 1.0;
  for (int r : ct_.roots()) {
    const FactorTable& phi = annot_[static_cast<std::size_t>(r)].phi;
    if (phi.size() != 1) throw std::logic_error("root cluster function is not scalar");
    z *= phi.at(0);
  }
  return z;
}

// -- updates ------------------------------------------------------------------

void Engine::replace_factor(const std::string& factor_id, FactorTable table) {
  g_.replace_factor(factor_id, std::move(table));  // validates identical scope
  int fx = fac_vertex(factor_id);
  std::vector<int> path = ct_.path_to_root(fx);
  for (int v : path) recompute_phi(v);
  last_touched_ = std::move(path);
  std::sort(last_touched_.begin(), last_touched_.end());
}

void Engine::insert_nontree_edge(const std::string& var, const std::string& factor,
                                 FactorTable table) {
  int vx = var_vertex(var);
  int fx = fac_vertex(factor);
  if (ct_.root_of(vx) != ct_.root_of(fx))
    throw std::invalid_argument("insert_nontree_edge: (" + var + ", " + factor +
                                ") would bridge two components; insert a tree edge instead");
  g_.add_edge(var, factor, std::move(table), /*tree=*/false);
  recompute_set(union_paths({vx, fx}));
}

void Engine::delete_nontree_edge(const std::string& var, const std::string& factor,
                                 FactorTable table) {
  if (!g_.has_edge(var, factor))
    throw std::invalid_argument("delete_nontree_edge: (" + var + ", " + factor +
                                ") is not an edge");
  if (g_.is_tree_edge(var, factor))
    throw std::invalid_argument("delete_nontree_edge: (" + var + ", " + factor +
                                ") is a tree edge");
  g_.remove_edge(var, factor, std::move(table));
  recompute_set(union_paths({var_vertex(var), fac_vertex(factor)}));
}

void Engine::insert_tree_edge(const std::string& var, const std::string& factor,
                              FactorTable table) {
  int vx = var_vertex(var);
  int fx = fac_vertex(factor);
  if (g_.has_edge(var, factor))
    throw std::invalid_argument("insert_tree_edge: (" + var + ", " + factor +
                                ") already present");
  if (ct_.root_of(vx) == ct_.root_of(fx))
    throw std::invalid_argument("insert_tree_edge: endpoints already connected (would cycle)");
  g_.add_edge(var, factor, std::move(table), /*tree=*/true);
  std::vector<int> affected = ct_.insert_edge({vx, fx});
  std::vector<int> set = with_ancestors(std::move(affected));
  for (int u : union_paths({vx, fx})) set.push_back(u);
  recompute_set(std::move(set));
}

void Engine::delete_tree_edge(const std::string& var, const std::string& factor,
                              FactorTable table) {
  int vx = var_vertex(var);
  int fx = fac_vertex(factor);
  if (!g_.has_edge(var, factor) || !g_.is_tree_edge(var, factor))
    throw std::invalid_argument("delete_tree_edge: (" + var + ", " + factor +
                                ") is not a tree edge");
  if (!cut_is_clean(vx, fx))
    throw std::invalid_argument("delete_tree_edge: non-tree edges cross the cut of (" + var +
                                ", " + factor + ")");
  g_.remove_edge(var, factor, std::move(table));
  std::vector<int> affected = ct_.remove_edge({vx, fx});
  std::vector<int> set = with_ancestors(std::move(affected));
  for (int u : union_paths({vx, fx})) set.push_back(u);
  recompute_set(std::move(set));
}

void Engine::swap_tree_edge(const EdgeRef& remove, const EdgeRef& add) {
  if (!g_.has_edge(remove.var, remove.factor) || !g_.is_tree_edge(remove.var, remove.factor))
    throw std::invalid_argument("swap: (" + remove.var + ", " + remove.factor +
                                ") is not a tree edge");
  if (!g_.has_edge(add.var, add.factor))
    throw std::invalid_argument("swap: (" + add.var + ", " + add.factor + ") is not an edge");
  if (g_.is_tree_edge(add.var, add.factor))
    throw std::invalid_argument("swap: (" + add.var + ", " + add.factor +
                                ") is already a tree edge");
  VertexPair rm{var_vertex(remove.var), fac_vertex(remove.factor)};
  VertexPair ad{var_vertex(add.var), fac_vertex(add.factor)};
  if (!crosses_cut(rm, ad))
    throw std::invalid_argument("swap: promoted edge does not reconnect the split (graph would "
                                "lose spanning coverage)");

  g_.retag_tree_edge(remove, add);
  std::vector<int> aff1 = ct_.remove_edge(rm);
  std::vector<int> aff2 = ct_.insert_edge(ad);
  std::vector<int> seeds = std::move(aff1);
  seeds.insert(seeds.end(), aff2.begin(), aff2.end());
  std::vector<int> set = with_ancestors(std::move(seeds));
  for (int u : union_paths({rm.a, rm.b, ad.a, ad.b})) set.push_back(u);
  recompute_set(std::move(set));
}

// marks the tree component of removed.a after deleting `removed` from the tree
std::vector<char> Engine::split_sides(VertexPair removed) const {
  std::vector<char> side(static_cast<std::size_t>(nv_ + static_cast<int>(g_.num_factors())), 0);
  std::deque<int> queue;
  side[static_cast<std::size_t>(removed.a)] = 1;
  queue.push_back(removed.a);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (const VertexPair& e : vertex_edges(u)) {
      if (e == removed || !edge_is_tree(e)) continue;
      int w = e.other(u);
      if (!side[static_cast<std::size_t>(w)]) {
        side[static_cast<std::size_t>(w)] = 1;
        queue.push_back(w);
      }
    }
  }
  return side;
}

// true iff no non-tree edge connects the two tree components created by
// deleting (var_vx, fac_vx)
bool Engine::cut_is_clean(int var_vx, int fac_vx) const {
  std::vector<char> side = split_sides({var_vx, fac_vx});
  for (int f = 0; f < static_cast<int>(g_.num_factors()); ++f) {
    const auto& scope = g_.factor_scope(f);
    const auto& flags = g_.factor_tree_flags(f);
    for (std::size_t i = 0; i < scope.size(); ++i) {
      if (flags[i]) continue;
      if (scope[i] == var_vx && nv_ + f == fac_vx) continue;
      if (side[static_cast<std::size_t>(scope[i])] != side[static_cast<std::size_t>(nv_ + f)])
        return false;
    }
  }
  return true;
}

bool Engine::crosses_cut(VertexPair removed, VertexPair candidate) const {
  std::vector<char> side = split_sides(removed);
  return side[static_cast<std::size_t>(candidate.a)] != side[static_cast<std::size_t>(candidate.b)];
}

// -- accessors / checking -----------------------------------------------------

std::vector<std::string> Engine::last_recomputed() const {
  std::vector<std::string> out;
  out.reserve(last_touched_.size());
  for (int v : last_touched_) out.push_back(vertex_name(v));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EdgeRef> Engine::boundary(const std::string& vertex_id) const {
  int vx = vertex_of(vertex_id);
  const Annot& a = annot_[static_cast<std::size_t>(vx)];
  std::vector<VertexPair> all(a.btree);
  all.insert(all.end(), a.bnontree.begin(), a.bnontree.end());
  std::sort(all.begin(), all.end());
  std::vector<EdgeRef> out;
  for (const VertexPair& e : all)
    out.push_back({g_.variable_at(e.a).id, g_.factor_id_at(e.b - nv_)});
  return out;
}

std::vector<EdgeRef> Engine::tree_boundary(const std::string& vertex_id) const {
  int vx = vertex_of(vertex_id);
  std::vector<EdgeRef> out;
  for (const VertexPair& e : annot_[static_cast<std::size_t>(vx)].btree)
    out.push_back({g_.variable_at(e.a).id, g_.factor_id_at(e.b - nv_)});
  return out;
}

std::vector<std::string> Engine::boundary_vars(const std::string& vertex_id) const {
  int vx = vertex_of(vertex_id);
  return bvar_ids(annot_[static_cast<std::size_t>(vx)].bvars);
}

const FactorTable& Engine::cluster_fn(const std::string& vertex_id) const {
  return annot_[static_cast<std::size_t>(vertex_of(vertex_id))].phi;
}

void Engine::check_invariants() const {
  g_.validate();
  ct_.validate();
  int total = nv_ + static_cast<int>(g_.num_factors());
  int beta = g_.measure_graph();

  // recompute every annotation bottom-up and compare against the cache
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    int rx = ct_.elim_round(x), ry = ct_.elim_round(y);
    return rx != ry ? rx < ry : x < y;
  });
  Engine fresh_check(*this);  // cheap structural copy for recompute
  for (int v : order) fresh_check.annotate(v);
  for (int v = 0; v < total; ++v) {
    const Annot& a = annot_[static_cast<std::size_t>(v)];
    const Annot& b = fresh_check.annot_[static_cast<std::size_t>(v)];
    if (a.btree != b.btree || a.bnontree != b.bnontree || a.bvars != b.bvars)
      throw std::runtime_error("invariant: stale boundary at cluster '" + vertex_name(v) + "'");
    if (!a.phi.bitwise_equal(b.phi))
      throw std::runtime_error("invariant: stale cluster function at '" + vertex_name(v) + "'");

    if (a.btree.size() > 2)
      throw std::runtime_error("invariant: more than two tree boundary edges at '" +
                               vertex_name(v) + "'");
    if (static_cast<int>(a.btree.size() + a.bnontree.size()) > 2 * beta)
      throw std::runtime_error("invariant: boundary exceeds 2*measure at '" + vertex_name(v) +
                               "'");
    if (a.phi.vars() != bvar_ids(a.bvars))
      throw std::runtime_error("invariant: scope(phi) != boundary vars at '" + vertex_name(v) +
                               "'");
  }
  for (int r : ct_.roots()) {
    const Annot& a = annot_[static_cast<std::size_t>(r)];
    if (!a.btree.empty() || !a.bnontree.empty() || a.phi.size() != 1)
      throw std::runtime_error("invariant: root cluster must have empty boundary and scalar phi");
  }

  // nesting across a shared tree boundary edge: owners form one chain
  std::vector<int> tin(static_cast<std::size_t>(total)), tout(static_cast<std::size_t>(total));
  {
    int clock = 0;
    for (int r : ct_.roots()) {
      std::vector<std::pair<int, std::size_t>> stack{{r, 0}};
      tin[static_cast<std::size_t>(r)] = clock++;
      while (!stack.empty()) {
        auto& [u, ci] = stack.back();
        const auto& ch = ct_.children(u);
        if (ci < ch.size()) {
          int c = ch[ci].child;
          ++ci;
          tin[static_cast<std::size_t>(c)] = clock++;
          stack.push_back({c, 0});
        } else {
          tout[static_cast<std::size_t>(u)] = clock++;
          stack.pop_back();
        }
      }
    }
  }
  std::map<VertexPair, std::vector<int>> owners;
  for (int v = 0; v < total; ++v)
    for (const VertexPair& e : annot_[static_cast<std::size_t>(v)].btree) owners[e].push_back(v);
  for (auto& [e, list] : owners) {
    std::sort(list.begin(), list.end(),
              [&](int x, int y) { return tin[static_cast<std::size_t>(x)] < tin[static_cast<std::size_t>(y)]; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      int outer = list[i - 1], inner = list[i];
      if (!(tin[static_cast<std::size_t>(outer)] <= tin[static_cast<std::size_t>(inner)] &&
            tout[static_cast<std::size_t>(inner)] <= tout[static_cast<std::size_t>(outer)]))
        throw std::runtime_error("invariant: tree boundary edge shared by non-nested clusters");
    }
  }
}

}  // namespace adinfer
