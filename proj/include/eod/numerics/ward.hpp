#pragma once

#include <cstddef>
#include <vector>

#include "eod/numerics/matrix.hpp"

namespace eod {

struct ClusterAssignment {
  std::vector<std::size_t> labels;  // one per point, in [0, k)
  std::size_t k = 0;

  // Point indices per cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

// Relabels clusters 0..k-1 in order of first appearance over the points.
ClusterAssignment canonicalize(const std::vector<std::size_t>& labels);

struct WardMerge {
  std::size_t a = 0;  // surviving slot (smaller index)
  std::size_t b = 0;  // absorbed slot
  double cost = 0;    // |A||B|/(|A|+|B|) * ||mu_A - mu_B||^2
  std::size_t clusters_after = 0;
};

struct WardResult {
  ClusterAssignment assignment;
  std::vector<WardMerge> merges;
};

// Greedy agglomerative Ward clustering down to k clusters. Clusters live in
// slots 0..n-1; a merge of slots a < b keeps slot a. Among equal-cost pairs
// the lexicographically smallest (a, b) merges first.
WardResult ward_linkage(const Matrix& points, std::size_t k);

// Same, from a precomputed squared-distance matrix.
WardResult ward_linkage_from_sq(const Matrix& sq_dist, std::size_t k);

ClusterAssignment ward_cluster(const Matrix& points, std::size_t k);

}  // namespace eod
