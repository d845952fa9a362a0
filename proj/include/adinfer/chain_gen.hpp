#pragma once

#include <cstdint>

#include "adinfer/factor_graph.hpp"

namespace adinfer {

/// Synthetic chain-with-cycles benchmark family: binary variables x1..xn,
/// pairwise factors f1..f(n-1) over (x_i, x_{i+1}) whose edges form the
/// spanning tree, and for every i that is a multiple of k (with
/// i+l-1 <= n-1) the variable x_i added to factor f_{i+l-1} as a non-tree
/// edge, closing a cycle of length l. Table values are uniform in (0, 1],
/// derived deterministically from the seed.
FactorGraph gen_chain(int n, int k, int l, std::uint64_t seed);

}  // namespace adinfer
