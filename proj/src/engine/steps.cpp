#include "eod/engine/steps.hpp"

#include <cmath>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"
#include "eod/numerics/silhouette.hpp"

namespace eod::engine {

SelectionResult select_easiest(std::span<const double> scores, std::size_t t,
                               const EasinessWeights& w) {
  require(!scores.empty(), ErrorCode::invalid_argument, "select_easiest: empty pool");
  SelectionResult r;
  r.t = t;
  double sum = 0;
  for (double s : scores) sum += s;
  r.mu = sum / static_cast<double>(scores.size());
  double ss = 0;
  for (double s : scores) ss += (s - r.mu) * (s - r.mu);
  r.sigma = std::sqrt(ss / static_cast<double>(scores.size()));
  r.threshold = r.mu + w.omega1 * r.sigma - w.omega2 * static_cast<double>(t);
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > r.threshold) r.selected.push_back(i);
  return r;
}

std::vector<std::string> draw_refill(const RefillBag& bag, std::size_t n_easy, double pct,
                                     Rng& rng) {
  require(pct >= 0 && std::isfinite(pct), ErrorCode::invalid_argument,
          "draw_refill: pct must be a non-negative number");
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(n_easy) * pct));
  std::vector<std::vector<std::string>> left;
  for (const auto& [cls, ids] : bag)
    if (!ids.empty()) left.push_back(ids);
  std::vector<std::string> out;
  if (n == 0 || left.empty()) return out;

  std::size_t remaining = 0;
  for (const auto& l : left) remaining += l.size();
  std::size_t c = rng.uniform_index(left.size());
  while (out.size() < n && remaining > 0) {
    auto& pick_from = left[c];
    if (!pick_from.empty()) {
      const std::size_t j = rng.uniform_index(pick_from.size());
      out.push_back(pick_from[j]);
      pick_from.erase(pick_from.begin() + static_cast<std::ptrdiff_t>(j));
      --remaining;
    }
    c = (c + 1) % left.size();
  }
  return out;
}

ProposalCore propose_best_cluster(const Matrix& easy, const Matrix& refill, std::size_t k) {
  require(easy.rows() >= 1, ErrorCode::invalid_argument, "propose_best_cluster: no easy samples");
  require(refill.rows() == 0 || refill.cols() == easy.cols(), ErrorCode::dimension_mismatch,
          "propose_best_cluster: refill dimension differs from easy samples");
  require(k >= 1, ErrorCode::degenerate_k, "propose_best_cluster: k must be positive");

  const auto n_easy = static_cast<std::size_t>(easy.rows());
  const auto n = n_easy + static_cast<std::size_t>(refill.rows());
  Matrix all(static_cast<Eigen::Index>(n), easy.cols());
  all.topRows(easy.rows()) = easy;
  if (refill.rows() > 0) all.bottomRows(refill.rows()) = refill;

  ProposalCore p;
  p.k_used = std::min(k, n);
  if (p.k_used < k)
    p.warnings.push_back("k clamped from " + std::to_string(k) + " to " + std::to_string(p.k_used) +
                         " (only " + std::to_string(n) + " points)");

  const Matrix sq = pairwise_sq_distances(all);
  p.assignment = ward_linkage_from_sq(sq, p.k_used).assignment;

  std::vector<bool> eligible(n, false);
  for (std::size_t i = 0; i < n_easy; ++i) eligible[i] = true;

  std::vector<std::optional<double>> means(p.assignment.k);
  if (p.assignment.k >= 2) {
    means = silhouette_from_sq(sq, p.assignment, eligible).per_cluster_mean;
  } else {
    means[0] = 0.0;
    p.warnings.push_back("single cluster; silhouette undefined, scored 0");
  }

  p.clusters.resize(p.assignment.k);
  for (std::size_t c = 0; c < p.assignment.k; ++c) {
    p.clusters[c].index = c;
    p.clusters[c].silhouette_mean = means[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = p.clusters[p.assignment.labels[i]];
    (i < n_easy ? s.n_easy : s.n_refill)++;
  }

  bool found = false;
  for (const auto& s : p.clusters) {
    if (s.n_easy == 0 || !s.silhouette_mean) continue;
    const auto& b = p.clusters[p.best];
    if (!found || *s.silhouette_mean > *b.silhouette_mean ||
        (*s.silhouette_mean == *b.silhouette_mean && s.n_easy > b.n_easy)) {
      p.best = s.index;
      found = true;
    }
  }
  p.silhouette_mean = *p.clusters[p.best].silhouette_mean;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.assignment.labels[i] != p.best) continue;
    if (i < n_easy)
      p.easy_members.push_back(i);
    else
      p.refill_members.push_back(i - n_easy);
  }
  return p;
}

}  // namespace eod::engine
