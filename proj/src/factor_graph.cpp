#include "adinfer/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace adinfer {

namespace {

// union-find with path halving
struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

void FactorGraph::add_variable(const std::string& id, int domain_size) {
  if (id.empty()) throw std::invalid_argument("add_variable: empty id");
  if (domain_size < 1) throw std::invalid_argument("add_variable: domain size must be >= 1");
  if (var_idx_.count(id)) throw std::invalid_argument("add_variable: duplicate id '" + id + "'");
  var_idx_.emplace(id, static_cast<int>(vars_.size()));
  vars_.push_back({id, domain_size});
  var_factors_.emplace_back();
}

void FactorGraph::check_table_matches_graph(const FactorTable& t) const {
  for (std::size_t i = 0; i < t.vars().size(); ++i) {
    auto it = var_idx_.find(t.vars()[i]);
    if (it == var_idx_.end())
      throw std::invalid_argument("factor scope references unknown variable '" + t.vars()[i] + "'");
    if (vars_[static_cast<std::size_t>(it->second)].domain_size != t.sizes()[i])
      throw std::invalid_argument("factor table domain size disagrees with variable '" +
                                  t.vars()[i] + "'");
  }
}

void FactorGraph::add_factor(const std::string& id, FactorTable table) {
  if (id.empty()) throw std::invalid_argument("add_factor: empty id");
  if (fac_idx_.count(id)) throw std::invalid_argument("add_factor: duplicate id '" + id + "'");
  check_table_matches_graph(table);
  int fi = static_cast<int>(factors_.size());
  FactorEntry e;
  e.id = id;
  e.scope.reserve(table.vars().size());
  for (const auto& v : table.vars()) e.scope.push_back(var_idx_.at(v));
  e.tree_flag.assign(e.scope.size(), false);
  e.table = std::move(table);
  for (int v : e.scope) var_factors_[static_cast<std::size_t>(v)].push_back(fi);
  factors_.push_back(std::move(e));
  fac_idx_.emplace(id, fi);
  tree_set_ = false;  // new edges are untagged; forest must be re-declared
}

std::size_t FactorGraph::num_edges() const {
  std::size_t n = 0;
  for (const auto& f : factors_) n += f.scope.size();
  return n;
}

const FactorTable& FactorGraph::factor(const std::string& id) const {
  return factors_[static_cast<std::size_t>(factor_index(id))].table;
}

std::vector<std::string> FactorGraph::factor_ids() const {
  std::vector<std::string> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.id);
  return out;
}

int FactorGraph::var_index(const std::string& id) const {
  auto it = var_idx_.find(id);
  if (it == var_idx_.end()) throw std::invalid_argument("unknown variable '" + id + "'");
  return it->second;
}

int FactorGraph::factor_index(const std::string& id) const {
  auto it = fac_idx_.find(id);
  if (it == fac_idx_.end()) throw std::invalid_argument("unknown factor '" + id + "'");
  return it->second;
}

const std::string& FactorGraph::factor_id_at(int idx) const {
  return factors_[static_cast<std::size_t>(idx)].id;
}

const FactorTable& FactorGraph::factor_at(int idx) const {
  return factors_[static_cast<std::size_t>(idx)].table;
}

const std::vector<int>& FactorGraph::factor_scope(int fac) const {
  return factors_[static_cast<std::size_t>(fac)].scope;
}

const std::vector<bool>& FactorGraph::factor_tree_flags(int fac) const {
  return factors_[static_cast<std::size_t>(fac)].tree_flag;
}

const std::vector<int>& FactorGraph::var_factors(int var) const {
  return var_factors_[static_cast<std::size_t>(var)];
}

bool FactorGraph::has_edge(const std::string& var, const std::string& factor) const {
  auto vit = var_idx_.find(var);
  auto fit = fac_idx_.find(factor);
  if (vit == var_idx_.end() || fit == fac_idx_.end()) return false;
  const auto& scope = factors_[static_cast<std::size_t>(fit->second)].scope;
  return std::find(scope.begin(), scope.end(), vit->second) != scope.end();
}

bool FactorGraph::is_tree_edge(const std::string& var, const std::string& factor) const {
  const auto& fe = factors_[static_cast<std::size_t>(factor_index(factor))];
  int vi = var_index(var);
  for (std::size_t i = 0; i < fe.scope.size(); ++i)
    if (fe.scope[i] == vi) return fe.tree_flag[i];
  return false;
}

std::vector<EdgeRef> FactorGraph::edges() const {
  std::vector<EdgeRef> out;
  for (const auto& f : factors_)
    for (int v : f.scope) out.push_back({vars_[static_cast<std::size_t>(v)].id, f.id});
  return out;
}

std::vector<EdgeRef> FactorGraph::tree_edges() const {
  std::vector<EdgeRef> out;
  for (const auto& f : factors_)
    for (std::size_t i = 0; i < f.scope.size(); ++i)
      if (f.tree_flag[i]) out.push_back({vars_[static_cast<std::size_t>(f.scope[i])].id, f.id});
  return out;
}

std::vector<EdgeRef> FactorGraph::nontree_edges() const {
  std::vector<EdgeRef> out;
  for (const auto& f : factors_)
    for (std::size_t i = 0; i < f.scope.size(); ++i)
      if (!f.tree_flag[i]) out.push_back({vars_[static_cast<std::size_t>(f.scope[i])].id, f.id});
  return out;
}

std::vector<int> FactorGraph::component_labels() const {
  std::size_t n = num_vertices();
  UnionFind uf(n);
  std::size_t nv = vars_.size();
  for (std::size_t f = 0; f < factors_.size(); ++f)
    for (int v : factors_[f].scope) uf.unite(static_cast<std::size_t>(v), nv + f);
  std::vector<int> label(n);
  std::unordered_map<std::size_t, int> roots;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = uf.find(i);
    auto [it, fresh] = roots.emplace(r, static_cast<int>(roots.size()));
    label[i] = it->second;
  }
  return label;
}

std::vector<int> FactorGraph::tree_component_labels() const {
  std::size_t n = num_vertices();
  UnionFind uf(n);
  std::size_t nv = vars_.size();
  for (std::size_t f = 0; f < factors_.size(); ++f)
    for (std::size_t i = 0; i < factors_[f].scope.size(); ++i)
      if (factors_[f].tree_flag[i])
        uf.unite(static_cast<std::size_t>(factors_[f].scope[i]), nv + f);
  std::vector<int> label(n);
  std::unordered_map<std::size_t, int> roots;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = uf.find(i);
    auto [it, fresh] = roots.emplace(r, static_cast<int>(roots.size()));
    label[i] = it->second;
  }
  return label;
}

void FactorGraph::set_spanning_tree(const std::vector<EdgeRef>& edges) {
  std::size_t nv = vars_.size();
  UnionFind uf(num_vertices());
  std::vector<std::vector<bool>> flags(factors_.size());
  for (std::size_t f = 0; f < factors_.size(); ++f)
    flags[f].assign(factors_[f].scope.size(), false);

  for (const auto& e : edges) {
    int vi = var_index(e.var);
    int fi = factor_index(e.factor);
    const auto& scope = factors_[static_cast<std::size_t>(fi)].scope;
    auto pos = std::find(scope.begin(), scope.end(), vi);
    if (pos == scope.end())
      throw std::invalid_argument("set_spanning_tree: (" + e.var + ", " + e.factor +
                                  ") is not an edge of the graph");
    std::size_t slot = static_cast<std::size_t>(pos - scope.begin());
    if (flags[static_cast<std::size_t>(fi)][slot])
      throw std::invalid_argument("set_spanning_tree: duplicate edge (" + e.var + ", " +
                                  e.factor + ")");
    if (!uf.unite(static_cast<std::size_t>(vi), nv + static_cast<std::size_t>(fi)))
      throw std::invalid_argument("set_spanning_tree: cycle at edge (" + e.var + ", " +
                                  e.factor + ")");
    flags[static_cast<std::size_t>(fi)][slot] = true;
  }

  // acyclic + right count per component <=> spanning forest
  auto comp = component_labels();
  int ncomp = comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
  if (edges.size() != num_vertices() - static_cast<std::size_t>(ncomp))
    throw std::invalid_argument(
        "set_spanning_tree: edges do not span every connected component (got " +
        std::to_string(edges.size()) + " edges, need " +
        std::to_string(num_vertices() - static_cast<std::size_t>(ncomp)) + ")");

  for (std::size_t f = 0; f < factors_.size(); ++f) factors_[f].tree_flag = flags[f];
  tree_set_ = true;
}

int FactorGraph::measure_edge(const EdgeRef& e) const {
  if (!is_tree_edge(e.var, e.factor))
    throw std::invalid_argument("measure_edge: (" + e.var + ", " + e.factor +
                                ") is not a tree edge");
  int vi = var_index(e.var);
  int fi = factor_index(e.factor);
  std::size_t nv = vars_.size();

  // grow the variable-side tree component without crossing e
  std::vector<char> side(num_vertices(), 0);
  std::deque<std::size_t> queue;
  side[static_cast<std::size_t>(vi)] = 1;
  queue.push_back(static_cast<std::size_t>(vi));
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    if (u < nv) {
      int uvar = static_cast<int>(u);
      for (int f : var_factors_[u]) {
        if (uvar == vi && f == fi) continue;
        const auto& fe = factors_[static_cast<std::size_t>(f)];
        auto pos = std::find(fe.scope.begin(), fe.scope.end(), uvar);
        if (!fe.tree_flag[static_cast<std::size_t>(pos - fe.scope.begin())]) continue;
        if (!side[nv + static_cast<std::size_t>(f)]) {
          side[nv + static_cast<std::size_t>(f)] = 1;
          queue.push_back(nv + static_cast<std::size_t>(f));
        }
      }
    } else {
      int f = static_cast<int>(u - nv);
      const auto& fe = factors_[static_cast<std::size_t>(f)];
      for (std::size_t i = 0; i < fe.scope.size(); ++i) {
        if (!fe.tree_flag[i]) continue;
        if (fe.scope[i] == vi && f == fi) continue;
        auto w = static_cast<std::size_t>(fe.scope[i]);
        if (!side[w]) {
          side[w] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  if (side[nv + static_cast<std::size_t>(fi)])
    throw std::runtime_error("measure_edge: tree edges contain a cycle");

  // factor-side component: everything tree-reachable from fi
  auto tree_comp = tree_component_labels();
  int cut = 1;
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const auto& fe = factors_[f];
    for (std::size_t i = 0; i < fe.scope.size(); ++i) {
      if (fe.tree_flag[i]) continue;
      auto x = static_cast<std::size_t>(fe.scope[i]);
      std::size_t fv = nv + f;
      bool x_in_a = side[x] != 0;
      bool f_in_a = side[fv] != 0;
      if (x_in_a == f_in_a) continue;
      // the non-A endpoint must be in the factor-side half, not another component
      std::size_t other = x_in_a ? fv : x;
      if (tree_comp[other] == tree_comp[nv + static_cast<std::size_t>(fi)]) ++cut;
    }
  }
  return cut;
}

int FactorGraph::measure_graph() const {
  int best = 0;
  for (const auto& e : tree_edges()) best = std::max(best, measure_edge(e));
  return best;
}

std::uint64_t FactorGraph::characteristic() const {
  std::uint64_t d = 1;
  for (const auto& v : vars_) d = std::max<std::uint64_t>(d, static_cast<std::uint64_t>(v.domain_size));
  std::size_t k = 0;
  for (const auto& vf : var_factors_) k = std::max(k, vf.size());
  for (const auto& f : factors_) k = std::max(k, f.scope.size());

  std::uint64_t result = 1;
  for (std::size_t i = 0; i < k + 1; ++i) {
    if (d != 0 && result > std::numeric_limits<std::uint64_t>::max() / d)
      return std::numeric_limits<std::uint64_t>::max();
    result *= d;
  }
  return result;
}

bool FactorGraph::validate_tree_cut(const EdgeRef& e) const { return measure_edge(e) == 1; }

double FactorGraph::joint_eval(const std::map<std::string, int>& assignment) const {
  std::vector<int> states(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = assignment.find(vars_[i].id);
    if (it == assignment.end())
      throw std::invalid_argument("joint_eval: assignment missing variable '" + vars_[i].id + "'");
    if (it->second < 0 || it->second >= vars_[i].domain_size)
      throw std::invalid_argument("joint_eval: state out of range for '" + vars_[i].id + "'");
    states[i] = it->second;
  }
  double w = 1.0;
  std::vector<int> fstates;
  for (const auto& f : factors_) {
    fstates.clear();
    for (int v : f.scope) fstates.push_back(states[static_cast<std::size_t>(v)]);
    w *= f.table.value_at(fstates);
  }
  return w;
}

template <typename Fn>
void FactorGraph::enumerate_joint(Fn&& fn) const {
  std::size_t nv = vars_.size();
  std::vector<int> states(nv, 0);
  std::vector<std::size_t> fidx(factors_.size(), 0);
  // per-variable list of (factor, stride into its table)
  std::vector<std::vector<std::pair<int, std::size_t>>> inc(nv);
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const auto& scope = factors_[f].scope;
    const auto& sizes = factors_[f].table.sizes();
    std::size_t stride = 1;
    for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
      auto ui = static_cast<std::size_t>(i);
      inc[static_cast<std::size_t>(scope[ui])].push_back({static_cast<int>(f), stride});
      stride *= static_cast<std::size_t>(sizes[ui]);
    }
  }
  for (;;) {
    double w = 1.0;
    for (std::size_t f = 0; f < factors_.size(); ++f) w *= factors_[f].table.at(fidx[f]);
    fn(states, w);
    int p = static_cast<int>(nv) - 1;
    for (; p >= 0; --p) {
      auto up = static_cast<std::size_t>(p);
      if (++states[up] < vars_[up].domain_size) {
        for (auto [f, st] : inc[up]) fidx[static_cast<std::size_t>(f)] += st;
        break;
      }
      states[up] = 0;
      for (auto [f, st] : inc[up])
        fidx[static_cast<std::size_t>(f)] -= st * static_cast<std::size_t>(vars_[up].domain_size - 1);
    }
    if (p < 0) break;
  }
}

FactorTable FactorGraph::brute_force_marginal(const std::string& var) const {
  auto vi = static_cast<std::size_t>(var_index(var));
  std::vector<double> acc(static_cast<std::size_t>(vars_[vi].domain_size), 0.0);
  enumerate_joint([&](const std::vector<int>& states, double w) {
    acc[static_cast<std::size_t>(states[vi])] += w;
  });
  return FactorTable({vars_[vi].id}, {vars_[vi].domain_size}, std::move(acc));
}

std::vector<FactorTable> FactorGraph::brute_force_marginals() const {
  std::vector<std::vector<double>> acc(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i)
    acc[i].assign(static_cast<std::size_t>(vars_[i].domain_size), 0.0);
  enumerate_joint([&](const std::vector<int>& states, double w) {
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i][static_cast<std::size_t>(states[i])] += w;
  });
  std::vector<FactorTable> out;
  out.reserve(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i)
    out.emplace_back(std::vector<std::string>{vars_[i].id}, std::vector<int>{vars_[i].domain_size},
                     std::move(acc[i]));
  return out;
}

double FactorGraph::brute_force_partition() const {
  double z = 0.0;
  enumerate_joint([&](const std::vector<int>&, double w) { z += w; });
  return z;
}

void FactorGraph::validate() const {
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const auto& fe = factors_[f];
    if (fe.scope.size() != fe.table.vars().size() || fe.scope.size() != fe.tree_flag.size())
      throw std::runtime_error("factor '" + fe.id + "': inconsistent scope bookkeeping");
    for (std::size_t i = 0; i < fe.scope.size(); ++i) {
      const auto& vi = vars_[static_cast<std::size_t>(fe.scope[i])];
      if (vi.id != fe.table.vars()[i] || vi.domain_size != fe.table.sizes()[i])
        throw std::runtime_error("factor '" + fe.id + "': scope disagrees with table");
    }
  }
  for (std::size_t v = 0; v < vars_.size(); ++v) {
    for (int f : var_factors_[v]) {
      const auto& scope = factors_[static_cast<std::size_t>(f)].scope;
      if (std::find(scope.begin(), scope.end(), static_cast<int>(v)) == scope.end())
        throw std::runtime_error("variable '" + vars_[v].id + "': stale factor adjacency");
    }
  }
  if (tree_set_) {
    UnionFind uf(num_vertices());
    std::size_t nv = vars_.size();
    std::size_t count = 0;
    for (std::size_t f = 0; f < factors_.size(); ++f)
      for (std::size_t i = 0; i < factors_[f].scope.size(); ++i)
        if (factors_[f].tree_flag[i]) {
          ++count;
          if (!uf.unite(static_cast<std::size_t>(factors_[f].scope[i]), nv + f))
            throw std::runtime_error("tree edges contain a cycle");
        }
    auto comp = component_labels();
    int ncomp = comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
    if (count != num_vertices() - static_cast<std::size_t>(ncomp))
      throw std::runtime_error("tree edges do not span every component");
  }
}

void FactorGraph::replace_factor(const std::string& id, FactorTable table) {
  auto& fe = factors_[static_cast<std::size_t>(factor_index(id))];
  if (table.vars() != fe.table.vars() || table.sizes() != fe.table.sizes())
    throw std::invalid_argument("replace_factor: scope of '" + id +
                                "' differs (use edge operations to change scope)");
  fe.table = std::move(table);
}

void FactorGraph::add_edge(const std::string& var, const std::string& factor,
                           FactorTable table, bool tree) {
  int vi = var_index(var);
  auto fi = static_cast<std::size_t>(factor_index(factor));
  auto& fe = factors_[fi];
  if (std::find(fe.scope.begin(), fe.scope.end(), vi) != fe.scope.end())
    throw std::invalid_argument("add_edge: (" + var + ", " + factor + ") already present");
  check_table_matches_graph(table);

  std::vector<std::string> want(fe.table.vars());
  want.push_back(var);
  std::sort(want.begin(), want.end());
  if (table.vars() != want)
    throw std::invalid_argument("add_edge: table scope must be the old scope plus '" + var + "'");

  std::vector<int> scope;
  std::vector<bool> flags;
  for (const auto& id : table.vars()) {
    int idx = var_index(id);
    scope.push_back(idx);
    if (idx == vi)
      flags.push_back(tree);
    else {
      auto pos = std::find(fe.scope.begin(), fe.scope.end(), idx);
      flags.push_back(fe.tree_flag[static_cast<std::size_t>(pos - fe.scope.begin())]);
    }
  }
  fe.scope = std::move(scope);
  fe.tree_flag = std::move(flags);
  fe.table = std::move(table);
  var_factors_[static_cast<std::size_t>(vi)].push_back(static_cast<int>(fi));
  std::sort(var_factors_[static_cast<std::size_t>(vi)].begin(),
            var_factors_[static_cast<std::size_t>(vi)].end());
}

void FactorGraph::remove_edge(const std::string& var, const std::string& factor,
                              FactorTable table) {
  int vi = var_index(var);
  auto fi = static_cast<std::size_t>(factor_index(factor));
  auto& fe = factors_[fi];
  auto pos = std::find(fe.scope.begin(), fe.scope.end(), vi);
  if (pos == fe.scope.end())
    throw std::invalid_argument("remove_edge: (" + var + ", " + factor + ") is not an edge");
  check_table_matches_graph(table);

  std::vector<std::string> want(fe.table.vars());
  want.erase(std::find(want.begin(), want.end(), var));
  if (table.vars() != want)
    throw std::invalid_argument("remove_edge: table scope must be the old scope minus '" + var +
                                "'");

  std::size_t slot = static_cast<std::size_t>(pos - fe.scope.begin());
  fe.scope.erase(fe.scope.begin() + static_cast<std::ptrdiff_t>(slot));
  fe.tree_flag.erase(fe.tree_flag.begin() + static_cast<std::ptrdiff_t>(slot));
  fe.table = std::move(table);
  auto& vf = var_factors_[static_cast<std::size_t>(vi)];
  vf.erase(std::find(vf.begin(), vf.end(), static_cast<int>(fi)));
}

void FactorGraph::retag_tree_edge(const EdgeRef& remove, const EdgeRef& add) {
  auto flip = [&](const EdgeRef& e, bool want_tree, bool to) {
    auto& fe = factors_[static_cast<std::size_t>(factor_index(e.factor))];
    int vi = var_index(e.var);
    auto pos = std::find(fe.scope.begin(), fe.scope.end(), vi);
    if (pos == fe.scope.end())
      throw std::invalid_argument("swap: (" + e.var + ", " + e.factor + ") is not an edge");
    std::size_t slot = static_cast<std::size_t>(pos - fe.scope.begin());
    if (fe.tree_flag[slot] != want_tree)
      throw std::invalid_argument("swap: (" + e.var + ", " + e.factor + ") is " +
                                  (fe.tree_flag[slot] ? "a tree edge" : "not a tree edge"));
    fe.tree_flag[slot] = to;
  };
  flip(remove, true, false);
  flip(add, false, true);
}

}  // namespace adinfer
