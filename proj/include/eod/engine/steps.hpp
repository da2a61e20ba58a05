#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eod/numerics/matrix.hpp"
#include "eod/numerics/ward.hpp"
#include "eod/rng.hpp"

namespace eod::engine {

struct EasinessWeights {
  double omega1 = 0.5;
  double omega2 = 0.0;
};

struct SelectionResult {
  double mu = 0;
  double sigma = 0;  // population standard deviation
  double threshold = 0;
  std::size_t t = 0;
  std::vector<std::size_t> selected;  // positions in the score list, ascending
};

// Easy samples: objectness > mu + omega1 * sigma - omega2 * t, with mu and
// sigma taken over `scores`.
SelectionResult select_easiest(std::span<const double> scores, std::size_t t,
                               const EasinessWeights& w);

// Class name -> labeled candidate ids.
using RefillBag = std::map<std::string, std::vector<std::string>>;

// Draws round(n_easy * pct) ids without replacement. Classes are visited
// round-robin in name order from a random starting class; within a class the
// pick is uniform. Exhausted classes are skipped.
std::vector<std::string> draw_refill(const RefillBag& bag, std::size_t n_easy, double pct,
                                     Rng& rng);

struct ClusterSummary {
  std::size_t index = 0;
  std::size_t n_easy = 0;
  std::size_t n_refill = 0;
  std::optional<double> silhouette_mean;  // over easy members only
};

struct ProposalCore {
  ClusterAssignment assignment;  // over easy rows then refill rows
  std::size_t k_used = 0;
  std::size_t best = 0;
  double silhouette_mean = 0;
  std::vector<std::size_t> easy_members;    // row indices into the easy block
  std::vector<std::size_t> refill_members;  // row indices into the refill block
  std::vector<ClusterSummary> clusters;
  std::vector<std::string> warnings;
};

// Ward-clusters easy and refill rows together and returns the cluster with
// the best silhouette mean over its easy members. Clusters without easy
// members are never chosen. Ties go to more easy members, then to the lower
// cluster index. k larger than the number of points is clamped.
ProposalCore propose_best_cluster(const Matrix& easy, const Matrix& refill, std::size_t k);

}  // namespace eod::engine
