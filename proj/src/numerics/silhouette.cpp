#include "eod/numerics/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"

namespace eod {

SilhouetteReport silhouette_from_sq(const Matrix& sq_dist, const ClusterAssignment& assign,
                                    const std::vector<bool>& eligible) {
  const auto n = static_cast<std::size_t>(sq_dist.rows());
  require(assign.labels.size() == n && eligible.size() == n, ErrorCode::dimension_mismatch,
          "silhouette: labels, mask and points must have equal length");
  require(std::any_of(eligible.begin(), eligible.end(), [](bool e) { return e; }),
          ErrorCode::invalid_argument, "silhouette: no eligible point");
  require(assign.k >= 2, ErrorCode::degenerate_k,
          "silhouette: undefined for a single cluster");

  std::vector<std::size_t> cluster_size(assign.k, 0);
  for (std::size_t l : assign.labels) {
    require(l < assign.k, ErrorCode::invalid_argument, "silhouette: label out of range");
    ++cluster_size[l];
  }

  SilhouetteReport r;
  r.per_point.assign(n, std::nullopt);
  r.per_cluster_mean.assign(assign.k, std::nullopt);
  r.eligible_mask = eligible;

  std::vector<double> sum_to(assign.k);
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    const std::size_t own = assign.labels[i];
    if (cluster_size[own] == 1) {
      r.per_point[i] = 0.0;
      continue;
    }
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_to[assign.labels[j]] +=
          std::sqrt(sq_dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    const double a = sum_to[own] / static_cast<double>(cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < assign.k; ++c) {
      if (c == own || cluster_size[c] == 0) continue;
      b = std::min(b, sum_to[c] / static_cast<double>(cluster_size[c]));
    }
    const double denom = std::max(a, b);
    r.per_point[i] = denom > 0 ? (b - a) / denom : 0.0;
  }

  std::vector<double> total(assign.k, 0.0);
  std::vector<std::size_t> count(assign.k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.per_point[i]) continue;
    total[assign.labels[i]] += *r.per_point[i];
    ++count[assign.labels[i]];
  }
  for (std::size_t c = 0; c < assign.k; ++c)
    if (count[c] > 0) r.per_cluster_mean[c] = total[c] / static_cast<double>(count[c]);
  return r;
}

SilhouetteReport silhouette(const Matrix& points, const ClusterAssignment& assign,
                            const std::vector<bool>& eligible) {
  require(points.rows() >= 1, ErrorCode::invalid_argument, "silhouette: no points");
  return silhouette_from_sq(pairwise_sq_distances(points), assign, eligible);
}

}  // namespace eod
