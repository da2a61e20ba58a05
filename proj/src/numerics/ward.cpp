#include "eod/numerics/ward.hpp"

#include <limits>
#include <string>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"

namespace eod {

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

ClusterAssignment canonicalize(const std::vector<std::size_t>& labels) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> remap;
  ClusterAssignment out;
  out.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t l = labels[i];
    if (l >= remap.size()) remap.resize(l + 1, kUnset);
    if (remap[l] == kUnset) remap[l] = out.k++;
    out.labels[i] = remap[l];
  }
  return out;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class WardState {
 public:
  explicit WardState(const Matrix& sq_dist)
      : n_(static_cast<std::size_t>(sq_dist.rows())),
        cost_(0.5 * sq_dist),
        size_(n_, 1),
        active_(n_, true),
        nn_(n_, kNone),
        nn_cost_(n_, std::numeric_limits<double>::infinity()),
        members_(n_) {
    for (std::size_t i = 0; i < n_; ++i) members_[i] = {i};
    for (std::size_t i = 0; i < n_; ++i) refresh(i);
  }

  WardMerge merge_next(std::size_t clusters_after) {
    std::size_t a = kNone;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      if (!active_[i] || nn_[i] == kNone) continue;
      if (a == kNone || nn_cost_[i] < best) {
        best = nn_cost_[i];
        a = i;
      }
    }
    const std::size_t b = nn_[a];
    const double merge_cost = at(a, b);

    const double na = static_cast<double>(size_[a]);
    const double nb = static_cast<double>(size_[b]);
    for (std::size_t k = 0; k < n_; ++k) {
      if (!active_[k] || k == a || k == b) continue;
      const double nk = static_cast<double>(size_[k]);
      // Lance-Williams recurrence for the Ward merge cost.
      const double updated =
          ((na + nk) * at(k, a) + (nb + nk) * at(k, b) - nk * merge_cost) / (na + nb + nk);
      cost_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = updated;
      cost_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = updated;
    }
    size_[a] += size_[b];
    active_[b] = false;
    members_[a].insert(members_[a].end(), members_[b].begin(), members_[b].end());
    members_[b].clear();
    nn_[b] = kNone;

    refresh(a);
    for (std::size_t i = 0; i < b; ++i) {
      if (!active_[i] || i == a) continue;
      if (nn_[i] == a || nn_[i] == b) {
        refresh(i);
      } else if (i < a) {
        const double c = at(i, a);
        if (c < nn_cost_[i] || (c == nn_cost_[i] && a < nn_[i])) {
          nn_[i] = a;
          nn_cost_[i] = c;
        }
      }
    }
    return {a, b, merge_cost, clusters_after};
  }

  ClusterAssignment assignment() const {
    std::vector<std::size_t> labels(n_);
    for (std::size_t s = 0; s < n_; ++s)
      for (std::size_t p : members_[s]) labels[p] = s;
    return canonicalize(labels);
  }

 private:
  double at(std::size_t i, std::size_t j) const {
    return cost_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Nearest active neighbour among higher slots; ties keep the smallest slot.
  void refresh(std::size_t i) {
    nn_[i] = kNone;
    nn_cost_[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (!active_[j]) continue;
      const double c = at(i, j);
      if (nn_[i] == kNone || c < nn_cost_[i]) {
        nn_[i] = j;
        nn_cost_[i] = c;
      }
    }
  }

  std::size_t n_;
  Matrix cost_;
  std::vector<std::size_t> size_;
  std::vector<bool> active_;
  std::vector<std::size_t> nn_;
  std::vector<double> nn_cost_;
  std::vector<std::vector<std::size_t>> members_;
};

}  // namespace

WardResult ward_linkage_from_sq(const Matrix& sq_dist, std::size_t k) {
  const auto n = static_cast<std::size_t>(sq_dist.rows());
  require(sq_dist.rows() == sq_dist.cols(), ErrorCode::dimension_mismatch,
          "ward: distance matrix must be square");
  require(n >= 1, ErrorCode::invalid_argument, "ward: need at least one point");
  require(k >= 1 && k <= n, ErrorCode::degenerate_k,
          "ward: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

  WardState state(sq_dist);
  WardResult result;
  result.merges.reserve(n - k);
  for (std::size_t clusters = n; clusters > k; --clusters)
    result.merges.push_back(state.merge_next(clusters - 1));
  result.assignment = state.assignment();
  return result;
}

WardResult ward_linkage(const Matrix& points, std::size_t k) {
  require(points.rows() >= 1, ErrorCode::invalid_argument, "ward: need at least one point");
  return ward_linkage_from_sq(pairwise_sq_distances(points), k);
}

ClusterAssignment ward_cluster(const Matrix& points, std::size_t k) {
  return ward_linkage(points, k).assignment;
}

}  // namespace eod
