#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adinfer {

struct BenchRow {
  int n = 0;
  std::string op;
  double mean_time_s = 0.0;
  double mean_touched = 0.0;
  double rebuild_time_s = 0.0;  // from-scratch build + one query baseline
  int depth = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string to_csv() const;
};

/// Warm-start timing harness on the synthetic chain family (k=2, l=2).
/// Per size: build time, query time, factor-replacement time and the paired
/// non-tree remove+insert time, each averaged over `trials`, against a
/// from-scratch rebuild baseline.
BenchReport run_bench(const std::vector<int>& sizes, int trials, std::uint64_t seed);

}  // namespace adinfer
