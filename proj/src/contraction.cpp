#include "adinfer/contraction.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace adinfer {

namespace {

void insert_sorted(std::vector<ChildLink>& v, ChildLink c) {
  auto it = std::lower_bound(v.begin(), v.end(), c.child,
                             [](const ChildLink& x, int id) { return x.child < id; });
  v.insert(it, c);
}

void erase_sorted(std::vector<ChildLink>& v, int child) {
  auto it = std::lower_bound(v.begin(), v.end(), child,
                             [](const ChildLink& x, int id) { return x.child < id; });
  if (it == v.end() || it->child != child)
    throw std::logic_error("contraction: child bookkeeping out of sync");
  v.erase(it);
}

}  // namespace

template <class AdjFn>
ElimKind Contraction::decide(int v, int round, AdjFn&& adj) const {
  const auto& slots = adj(v);
  std::size_t deg = slots.size();
  if (deg == 0) return ElimKind::Root;
  if (deg == 1) {
    int u = slots[0].nbr;
    if (adj(u).size() >= 2 || v > u) return ElimKind::Rake;
    return ElimKind::None;
  }
  if (deg == 2) {
    int u = slots[0].nbr;
    int w = slots[1].nbr;
    if (bit(v, round) && !bit(u, round) && !bit(w, round) && adj(u).size() >= 2 &&
        adj(w).size() >= 2)
      return ElimKind::Compress;
  }
  return ElimKind::None;
}

template <class AdjFn, class DecFn>
std::vector<Contraction::Slot> Contraction::transition(int v, AdjFn&& adj, DecFn&& dec) const {
  std::vector<Slot> out;
  const auto& slots = adj(v);
  out.reserve(slots.size());
  for (const Slot& s : slots) {
    ElimKind k = dec(s.nbr);
    if (k == ElimKind::Rake) continue;  // neighbor hangs onto v; edge consumed
    if (k == ElimKind::Compress) {
      const auto& uslots = adj(s.nbr);
      const Slot& other = (uslots[0].nbr == v) ? uslots[1] : uslots[0];
      Slot ns;
      ns.nbr = other.nbr;
      ns.carried = s.nbr;
      ns.orig_here = s.orig_here;
      ns.orig_there = other.orig_there;
      out.push_back(ns);
    } else {
      out.push_back(s);
    }
  }
  std::sort(out.begin(), out.end(), [](const Slot& x, const Slot& y) { return x.nbr < y.nbr; });
  return out;
}

template <class SlotsT>
Contraction::ElimRecord Contraction::make_elim(int round, ElimKind kind,
                                               const SlotsT& slots) const {
  ElimRecord rec;
  rec.round = round;
  rec.kind = kind;
  if (kind == ElimKind::Rake) {
    rec.rake_target = slots[0].nbr;
    rec.rake_link = slots[0].orig_there;
  }
  if (kind == ElimKind::Rake || kind == ElimKind::Compress) {
    for (const Slot& s : slots)
      if (s.carried >= 0) rec.edge_children.push_back({s.carried, s.orig_here});
    std::sort(rec.edge_children.begin(), rec.edge_children.end(),
              [](const ChildLink& x, const ChildLink& y) { return x.child < y.child; });
  }
  return rec;
}

Contraction Contraction::build(int num_vertices, const std::vector<VertexPair>& tree_edges,
                               std::uint64_t seed) {
  Contraction c;
  c.n_ = num_vertices;
  c.seed_ = seed;
  c.hist_.assign(static_cast<std::size_t>(num_vertices), {});
  c.elim_.assign(static_cast<std::size_t>(num_vertices), {});

  // cycle / range check
  std::vector<int> uf(static_cast<std::size_t>(num_vertices));
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[static_cast<std::size_t>(x)] != x) {
      uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
      x = uf[static_cast<std::size_t>(x)];
    }
    return x;
  };
  std::vector<std::vector<Slot>> cur(static_cast<std::size_t>(num_vertices));
  for (const VertexPair& e : tree_edges) {
    if (e.a < 0 || e.b >= num_vertices || e.a == e.b)
      throw std::invalid_argument("contract: edge endpoint out of range");
    int ra = find(e.a), rb = find(e.b);
    if (ra == rb) throw std::invalid_argument("contract: input edges contain a cycle");
    uf[static_cast<std::size_t>(ra)] = rb;
    Slot sa{e.b, -1, e, e};
    Slot sb{e.a, -1, e, e};
    cur[static_cast<std::size_t>(e.a)].push_back(sa);
    cur[static_cast<std::size_t>(e.b)].push_back(sb);
    c.eset_.insert(e);
  }
  for (auto& slots : cur)
    std::sort(slots.begin(), slots.end(),
              [](const Slot& x, const Slot& y) { return x.nbr < y.nbr; });

  std::vector<int> live(static_cast<std::size_t>(num_vertices));
  std::iota(live.begin(), live.end(), 0);
  std::vector<ElimKind> dec(static_cast<std::size_t>(num_vertices), ElimKind::None);

  int round = 0;
  while (!live.empty()) {
    for (int v : live) c.hist_[static_cast<std::size_t>(v)].push_back(cur[static_cast<std::size_t>(v)]);
    auto adj = [&](int u) -> const std::vector<Slot>& { return cur[static_cast<std::size_t>(u)]; };
    for (int v : live) dec[static_cast<std::size_t>(v)] = c.decide(v, round, adj);

    std::vector<int> next;
    next.reserve(live.size());
    std::vector<std::vector<Slot>> upd;
    upd.reserve(live.size());
    for (int v : live) {
      ElimKind k = dec[static_cast<std::size_t>(v)];
      if (k == ElimKind::None) {
        next.push_back(v);
        upd.push_back(c.transition(v, adj, [&](int u) { return dec[static_cast<std::size_t>(u)]; }));
      } else {
        c.elim_[static_cast<std::size_t>(v)] = c.make_elim(round, k, cur[static_cast<std::size_t>(v)]);
      }
    }
    for (std::size_t i = 0; i < next.size(); ++i)
      cur[static_cast<std::size_t>(next[i])] = std::move(upd[i]);
    for (int v : live)
      if (dec[static_cast<std::size_t>(v)] != ElimKind::None) cur[static_cast<std::size_t>(v)].clear();
    live = std::move(next);
    ++round;
  }
  c.rounds_ = round;
  c.rebuild_derived();
  return c;
}

void Contraction::rebuild_derived() {
  parent_.assign(static_cast<std::size_t>(n_), -1);
  children_.assign(static_cast<std::size_t>(n_), {});
  roots_.clear();
  for (int v = 0; v < n_; ++v) {
    const ElimRecord& rec = elim_[static_cast<std::size_t>(v)];
    if (rec.kind == ElimKind::Rake)
      insert_sorted(children_[static_cast<std::size_t>(rec.rake_target)], {v, rec.rake_link});
    for (const ChildLink& cl : rec.edge_children)
      insert_sorted(children_[static_cast<std::size_t>(v)], cl);
    if (rec.kind == ElimKind::Root) roots_.push_back(v);
  }
  for (int v = 0; v < n_; ++v)
    for (const ChildLink& cl : children_[static_cast<std::size_t>(v)])
      parent_[static_cast<std::size_t>(cl.child)] = v;
}

int Contraction::root_of(int v) const {
  while (parent_[static_cast<std::size_t>(v)] != -1) v = parent_[static_cast<std::size_t>(v)];
  return v;
}

std::vector<int> Contraction::path_to_root(int v) const {
  if (v < 0 || v >= n_) throw std::invalid_argument("path_to_root: unknown vertex");
  std::vector<int> path;
  for (int u = v; u != -1; u = parent_[static_cast<std::size_t>(u)]) path.push_back(u);
  return path;
}

int Contraction::depth() const {
  std::vector<int> depth(static_cast<std::size_t>(n_), 0);
  int best = 0;
  // parents are eliminated in strictly later rounds, so order by round
  std::vector<int> order(static_cast<std::size_t>(n_));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return elim_[static_cast<std::size_t>(x)].round > elim_[static_cast<std::size_t>(y)].round;
  });
  for (int v : order) {
    int p = parent_[static_cast<std::size_t>(v)];
    depth[static_cast<std::size_t>(v)] = (p == -1) ? 1 : depth[static_cast<std::size_t>(p)] + 1;
    best = std::max(best, depth[static_cast<std::size_t>(v)]);
  }
  return best;
}

bool Contraction::identical_state(const Contraction& other) const {
  return n_ == other.n_ && seed_ == other.seed_ && rounds_ == other.rounds_ &&
         eset_ == other.eset_ && elim_ == other.elim_ && hist_ == other.hist_;
}

std::vector<int> Contraction::cluster_vertices(int v) const {
  std::vector<int> out;
  std::vector<int> stack{v};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    out.push_back(u);
    for (const ChildLink& cl : children_[static_cast<std::size_t>(u)]) stack.push_back(cl.child);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Contraction::validate() const {
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  for (int r : roots_) {
    if (elim_[static_cast<std::size_t>(r)].kind != ElimKind::Root)
      throw std::runtime_error("validate: root list out of sync");
  }
  // every vertex in exactly one root's cluster; parent rounds increase
  std::size_t covered = 0;
  for (int r : roots_) {
    for (int v : cluster_vertices(r)) {
      if (seen[static_cast<std::size_t>(v)])
        throw std::runtime_error("validate: vertex in two clusters");
      seen[static_cast<std::size_t>(v)] = 1;
      ++covered;
    }
  }
  if (covered != static_cast<std::size_t>(n_))
    throw std::runtime_error("validate: not every vertex is covered");

  // subtree intervals for membership tests
  std::vector<int> tin(static_cast<std::size_t>(n_), -1), tout(static_cast<std::size_t>(n_), -1);
  int clock = 0;
  for (int r : roots_) {
    // iterative DFS
    std::vector<std::pair<int, std::size_t>> stack{{r, 0}};
    tin[static_cast<std::size_t>(r)] = clock++;
    while (!stack.empty()) {
      auto& [u, ci] = stack.back();
      const auto& ch = children_[static_cast<std::size_t>(u)];
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
  auto inside = [&](int x, int c) {  // x inside cluster c
    return tin[static_cast<std::size_t>(c)] <= tin[static_cast<std::size_t>(x)] &&
           tout[static_cast<std::size_t>(x)] <= tout[static_cast<std::size_t>(c)];
  };

  for (int v = 0; v < n_; ++v) {
    const ElimRecord& rec = elim_[static_cast<std::size_t>(v)];
    if (rec.kind == ElimKind::None) throw std::runtime_error("validate: vertex never eliminated");
    int p = parent_[static_cast<std::size_t>(v)];
    if ((p == -1) != (rec.kind == ElimKind::Root))
      throw std::runtime_error("validate: parent/root mismatch");
    if (p != -1 && elim_[static_cast<std::size_t>(p)].round <= rec.round)
      throw std::runtime_error("validate: parent eliminated no later than child");
    for (const ChildLink& cl : children_[static_cast<std::size_t>(v)]) {
      // condition 4: a real tree edge from the identifier into the child cluster
      if (!eset_.count(cl.link))
        throw std::runtime_error("validate: child link is not a current tree edge");
      if (!cl.link.has(v)) throw std::runtime_error("validate: child link misses identifier");
      int inner = cl.link.other(v);
      if (!inside(inner, cl.child))
        throw std::runtime_error("validate: child link does not enter the child cluster");
      if (inside(v, cl.child))
        throw std::runtime_error("validate: identifier inside its own child");
    }
  }
}

std::vector<int> Contraction::insert_edge(VertexPair e) { return apply_edit(e, true); }
std::vector<int> Contraction::remove_edge(VertexPair e) { return apply_edit(e, false); }

std::vector<int> Contraction::apply_edit(VertexPair e, bool insert) {
  if (e.a < 0 || e.b >= n_ || e.a == e.b)
    throw std::invalid_argument("edit: edge endpoint out of range");
  if (insert) {
    if (eset_.count(e)) throw std::invalid_argument("edit: edge already in the tree");
    if (root_of(e.a) == root_of(e.b))
      throw std::invalid_argument("edit: insert would create a tree cycle");
  } else {
    if (!eset_.count(e)) throw std::invalid_argument("edit: not a tree edge");
  }

  // journal of new round records, keyed by (vertex, round)
  auto key = [](int v, int r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) << 32) |
           static_cast<std::uint32_t>(r);
  };
  std::unordered_map<std::uint64_t, std::vector<Slot>> journal;
  std::unordered_map<int, ElimRecord> new_elim;

  auto old_round = [&](int v) { return elim_[static_cast<std::size_t>(v)].round; };
  auto has_old = [&](int v, int r) { return r <= old_round(v); };
  auto live_new = [&](int v, int r) {
    if (journal.count(key(v, r))) return true;
    auto it = new_elim.find(v);
    if (it != new_elim.end()) return r <= it->second.round;
    return has_old(v, r);
  };
  auto state_new = [&](int v, int r) -> const std::vector<Slot>& {
    auto it = journal.find(key(v, r));
    if (it != journal.end()) return it->second;
    return hist_[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)];
  };

  // round-0 edit
  {
    for (int v : {e.a, e.b}) {
      std::vector<Slot> slots = hist_[static_cast<std::size_t>(v)][0];
      if (insert) {
        Slot s{e.other(v), -1, e, e};
        slots.push_back(s);
        std::sort(slots.begin(), slots.end(),
                  [](const Slot& x, const Slot& y) { return x.nbr < y.nbr; });
      } else {
        auto it = std::find_if(slots.begin(), slots.end(),
                               [&](const Slot& s) { return s.nbr == e.other(v); });
        if (it == slots.end() || it->carried != -1 || it->orig_here != e)
          throw std::logic_error("edit: round-0 state out of sync with edge set");
        slots.erase(it);
      }
      journal[key(v, 0)] = std::move(slots);
    }
  }

  std::set<int> dirty{e.a, e.b};
  int round = 0;
  const int round_cap = rounds_ + n_ + 64;

  while (!dirty.empty()) {
    if (round > round_cap) throw std::logic_error("edit: change propagation did not settle");

    // neighborhood ball of radius 2 around the dirty set (old and new states)
    std::set<int> r1 = dirty;
    auto widen = [&](const std::set<int>& src, std::set<int>& dst) {
      for (int v : src) {
        if (has_old(v, round))
          for (const Slot& s : hist_[static_cast<std::size_t>(v)][static_cast<std::size_t>(round)])
            dst.insert(s.nbr);
        if (live_new(v, round))
          for (const Slot& s : state_new(v, round)) dst.insert(s.nbr);
      }
    };
    widen(dirty, r1);
    std::set<int> r2 = r1;
    widen(r1, r2);

    // re-decide everything in the ball that is live in the new run
    std::unordered_map<int, ElimKind> redecided;
    auto adj_new = [&](int u) -> const std::vector<Slot>& { return state_new(u, round); };
    for (int v : r2)
      if (live_new(v, round)) redecided[v] = decide(v, round, adj_new);

    auto dec_of = [&](int u) {
      auto it = redecided.find(u);
      if (it != redecided.end()) return it->second;
      return (old_round(u) == round) ? elim_[static_cast<std::size_t>(u)].kind : ElimKind::None;
    };

    std::set<int> next_dirty;
    for (int v : r2) {
      if (!live_new(v, round)) continue;
      ElimKind k = redecided.at(v);
      if (k != ElimKind::None) {
        ElimRecord rec = make_elim(round, k, state_new(v, round));
        if (!(rec == elim_[static_cast<std::size_t>(v)])) new_elim[v] = std::move(rec);
        else new_elim.erase(v);
        // old records beyond this elimination become stale
        if (has_old(v, round + 1)) next_dirty.insert(v);
        continue;
      }
      std::vector<Slot> nxt = transition(v, adj_new, dec_of);
      bool same = has_old(v, round + 1) &&
                  nxt == hist_[static_cast<std::size_t>(v)][static_cast<std::size_t>(round) + 1] &&
                  !new_elim.count(v);
      if (same) continue;
      // survivor differing from the stored run (content or liveness)
      if (new_elim.count(v)) new_elim.erase(v);  // no longer eliminated here
      journal[key(v, round + 1)] = std::move(nxt);
      next_dirty.insert(v);
    }
    // stale old records of vertices that died earlier in the new run
    for (int v : dirty) {
      if (has_old(v, round + 1) && !live_new(v, round + 1)) next_dirty.insert(v);
    }
    dirty = std::move(next_dirty);
    ++round;
  }

  // -- commit ---------------------------------------------------------------
  if (insert) eset_.insert(e); else eset_.erase(e);

  std::vector<std::pair<int, ElimRecord>> changes(new_elim.begin(), new_elim.end());
  std::sort(changes.begin(), changes.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::set<int> touched_hist;
  for (const auto& [k2, slots] : journal) touched_hist.insert(static_cast<int>(k2 >> 32));
  for (const auto& [v, rec] : changes) touched_hist.insert(v);

  for (int v : touched_hist) {
    int new_round = old_round(v);
    auto it = new_elim.find(v);
    if (it != new_elim.end()) new_round = it->second.round;
    auto& h = hist_[static_cast<std::size_t>(v)];
    std::vector<std::vector<Slot>> nh(static_cast<std::size_t>(new_round) + 1);
    for (int r = 0; r <= new_round; ++r) {
      auto jt = journal.find(key(v, r));
      if (jt != journal.end())
        nh[static_cast<std::size_t>(r)] = std::move(jt->second);
      else if (r <= old_round(v))
        nh[static_cast<std::size_t>(r)] = std::move(h[static_cast<std::size_t>(r)]);
      else
        throw std::logic_error("edit: missing journal record");
    }
    h = std::move(nh);
  }
  // note: old_round() reads elim_, so apply elim changes after timelines
  std::vector<std::pair<int, ElimRecord>> olds;
  olds.reserve(changes.size());
  for (const auto& [v, rec] : changes)
    olds.emplace_back(v, elim_[static_cast<std::size_t>(v)]);
  patch_derived(changes);

  int max_round = 0;
  for (int v = 0; v < n_; ++v)
    max_round = std::max(max_round, elim_[static_cast<std::size_t>(v)].round);
  rounds_ = n_ == 0 ? 0 : max_round + 1;

  // a changed rake child also changes its old and new targets' child sets
  std::set<int> aff;
  for (const auto& [v, rec] : changes) {
    aff.insert(v);
    if (rec.kind == ElimKind::Rake) aff.insert(rec.rake_target);
  }
  for (const auto& [v, old] : olds)
    if (old.kind == ElimKind::Rake) aff.insert(old.rake_target);
  return std::vector<int>(aff.begin(), aff.end());
}

void Contraction::patch_derived(const std::vector<std::pair<int, ElimRecord>>& changes) {
  for (const auto& [v, rec] : changes) {
    const ElimRecord& old = elim_[static_cast<std::size_t>(v)];
    if (old.kind == ElimKind::Rake)
      erase_sorted(children_[static_cast<std::size_t>(old.rake_target)], v);
    for (const ChildLink& cl : old.edge_children)
      erase_sorted(children_[static_cast<std::size_t>(v)], cl.child);
    if (old.kind == ElimKind::Root)
      roots_.erase(std::find(roots_.begin(), roots_.end(), v));
  }
  for (const auto& [v, rec] : changes) elim_[static_cast<std::size_t>(v)] = rec;
  for (const auto& [v, rec] : changes) {
    if (rec.kind == ElimKind::Rake) {
      insert_sorted(children_[static_cast<std::size_t>(rec.rake_target)], {v, rec.rake_link});
      parent_[static_cast<std::size_t>(v)] = rec.rake_target;
    }
    if (rec.kind == ElimKind::Root) {
      parent_[static_cast<std::size_t>(v)] = -1;
      roots_.insert(std::lower_bound(roots_.begin(), roots_.end(), v), v);
    }
    for (const ChildLink& cl : rec.edge_children) {
      insert_sorted(children_[static_cast<std::size_t>(v)], cl);
      parent_[static_cast<std::size_t>(cl.child)] = v;
    }
  }
}

}  // namespace adinfer
