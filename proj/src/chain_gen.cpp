#include "adinfer/chain_gen.hpp"

#include <algorithm>
#include <stdexcept>

#include "adinfer/rng.hpp"

namespace adinfer {

FactorGraph gen_chain(int n, int k, int l, std::uint64_t seed) {
  if (n < 2 || k < 2 || l < 2)
    throw std::invalid_argument("gen_chain: need n >= 2, k >= 2, l >= 2");

  FactorGraph g;
  auto xname = [](int i) { return "x" + std::to_string(i); };
  auto fname = [](int i) { return "f" + std::to_string(i); };
  for (int i = 1; i <= n; ++i) g.add_variable(xname(i), 2);

  std::vector<EdgeRef> tree;
  for (int m = 1; m <= n - 1; ++m) {
    std::vector<std::string> scope{xname(m), xname(m + 1)};
    // extra variable closing a cycle: x_i joins f_{i+l-1} when k divides i
    int i = m - l + 1;
    if (i >= 1 && i % k == 0) scope.push_back(xname(i));
    std::sort(scope.begin(), scope.end());
    std::vector<int> sizes(scope.size(), 2);
    std::size_t total = std::size_t{1} << scope.size();
    SplitMix64 rng(hash_combine(seed, static_cast<std::uint64_t>(m)));
    std::vector<double> values(total);
    for (double& v : values) v = rng.next_unit();
    g.add_factor(fname(m), FactorTable(std::move(scope), std::move(sizes), std::move(values)));
    tree.push_back({xname(m), fname(m)});
    tree.push_back({xname(m + 1), fname(m)});
  }
  g.set_spanning_tree(tree);
  return g;
}

}  // namespace adinfer
