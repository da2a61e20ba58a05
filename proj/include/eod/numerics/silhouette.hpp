#pragma once

#include <optional>
#include <vector>

#include "eod/numerics/matrix.hpp"
#include "eod/numerics/ward.hpp"

namespace eod {

struct SilhouetteReport {
  std::vector<std::optional<double>> per_point;         // set for eligible points only
  std::vector<std::optional<double>> per_cluster_mean;  // absent without eligible members
  std::vector<bool> eligible_mask;
};

// Silhouette coefficients s(i) = (b - a) / max(a, b) over Euclidean
// distances. Every point contributes to a(i) and b(i); only eligible points
// receive a score and enter the cluster means. A point alone in its cluster
// scores 0. Throws degenerate_k when the assignment has a single cluster.
SilhouetteReport silhouette(const Matrix& points, const ClusterAssignment& assign,
                            const std::vector<bool>& eligible);

SilhouetteReport silhouette_from_sq(const Matrix& sq_dist, const ClusterAssignment& assign,
                                    const std::vector<bool>& eligible);

}  // namespace eod
