#pragma once

// Reference implementations used only by tests. They share no code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eod/dataset.hpp"
#include "eod/numerics/matrix.hpp"
#include "eod/svm/binary_svm.hpp"

namespace oracle {

// Greedy Ward clustering that recomputes every merge cost from raw
// centroids. Clusters occupy slots; merging slots a < b keeps slot a; among
// equal costs the smallest (a, b) pair wins. Returns canonical labels
// (numbered by first appearance).
inline std::vector<std::size_t> ward_greedy(const eod::Matrix& x, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<std::size_t>> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i] = {i};
  auto centroid = [&](const std::vector<std::size_t>& m) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(x.cols());
    for (auto p : m) c += x.row(static_cast<Eigen::Index>(p));
    return Eigen::RowVectorXd(c / static_cast<double>(m.size()));
  };
  std::size_t alive = n;
  while (alive > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (slots[a].empty()) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (slots[b].empty()) continue;
        const double na = static_cast<double>(slots[a].size());
        const double nb = static_cast<double>(slots[b].size());
        const double cost = na * nb / (na + nb) * (centroid(slots[a]) - centroid(slots[b])).squaredNorm();
        if (cost < best) {
          best = cost;
          ba = a;
          bb = b;
        }
      }
    }
    slots[ba].insert(slots[ba].end(), slots[bb].begin(), slots[bb].end());
    slots[bb].clear();
    --alive;
  }
  std::vector<std::size_t> slot_of(n);
  for (std::size_t s = 0; s < n; ++s)
    for (auto p : slots[s]) slot_of[p] = s;
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = remap.find(slot_of[i]);
    if (it == remap.end()) it = remap.emplace(slot_of[i], remap.size()).first;
    labels[i] = it->second;
  }
  return labels;
}

// Textbook silhouette on raw coordinates.
struct SilhouetteOracle {
  std::vector<std::optional<double>> per_point;
  std::vector<std::optional<double>> per_cluster;
};

inline SilhouetteOracle silhouette_direct(const eod::Matrix& x, const std::vector<std::size_t>& labels,
                                          std::size_t k, const std::vector<bool>& eligible) {
  const std::size_t n = labels.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    return (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
  };
  SilhouetteOracle o;
  o.per_point.assign(n, std::nullopt);
  o.per_cluster.assign(k, std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    std::vector<double> sum(k, 0.0);
    std::vector<double> cnt(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += dist(i, j);
      cnt[labels[j]] += 1;
    }
    if (cnt[labels[i]] == 0) {
      o.per_point[i] = 0.0;
      continue;
    }
    const double a = sum[labels[i]] / cnt[labels[i]];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != labels[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    o.per_point[i] = std::max(a, b) > 0 ? (b - a) / std::max(a, b) : 0.0;
  }
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0;
    int m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == c && o.per_point[i]) {
        s += *o.per_point[i];
        ++m;
      }
    if (m) o.per_cluster[c] = s / m;
  }
  return o;
}

// Largest violation of the C-SVC optimality conditions, measured on y f(x).
inline double kkt_violation(const eod::svm::BinaryTrainResult& r, const eod::Matrix& x, const std::vector<int>& y,
                            double c) {
  double worst = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double margin = y[i] * r.model.decision(eod::svm::row_span(x, i));
    const double a = r.alpha[i];
    double v = 0;
    if (a <= 1e-12)
      v = std::max(0.0, 1.0 - margin);
    else if (a >= c - 1e-12)
      v = std::max(0.0, margin - 1.0);
    else
      v = std::abs(margin - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

// Intersection over union from sorted edge coordinates: two intervals
// overlap by the gap between the 2nd and 3rd of their four sorted endpoints,
// provided they are not disjoint.
inline double overlap_by_edges(const eod::BoundingBox& a, const eod::BoundingBox& b) {
  auto overlap_1d = [](double a0, double a1, double b0, double b1) {
    if (a1 <= b0 || b1 <= a0) return 0.0;
    double e[4] = {a0, a1, b0, b1};
    std::sort(e, e + 4);
    return e[2] - e[1];
  };
  const double inter = overlap_1d(a.x, a.x + a.w, b.x, b.x + b.w) * overlap_1d(a.y, a.y + a.h, b.y, b.y + b.h);
  return inter / (a.w * a.h + b.w * b.h - inter);
}

// Easiness selection by plain scalar loops, in the order the threshold is
// defined: mean, population deviation, then mu + w1 sigma - w2 t.
inline std::vector<std::size_t> select_scalar(const std::vector<double>& s, std::size_t t, double w1, double w2) {
  double sum = 0;
  for (double v : s) sum += v;
  const double mu = sum / static_cast<double>(s.size());
  double ss = 0;
  for (double v : s) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(s.size()));
  const double threshold = mu + w1 * sigma - w2 * static_cast<double>(t);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] > threshold) out.push_back(i);
  return out;
}

struct MacroOracle {
  double precision = 0;
  double recall = 0;
  double f = 0;
};

// Macro scores through an explicit confusion matrix. Rows are truth, columns
// predictions; index 0 collects "no_object", undiscovered candidates and
// labels outside the truth classes. Only object classes are averaged.
inline MacroOracle macro_from_confusion(const std::map<std::string, std::string>& discovered,
                                        const std::map<std::string, std::string>& truth) {
  std::vector<std::string> classes;
  {
    std::set<std::string> seen;
    for (const auto& [id, c] : truth)
      if (c != eod::kNoObject) seen.insert(c);
    classes.assign(seen.begin(), seen.end());
  }
  const std::size_t k = classes.size() + 1;
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  auto index = [&](const std::string& c) -> std::size_t {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == c) return i + 1;
    return 0;
  };
  for (const auto& [id, t] : truth) {
    auto d = discovered.find(id);
    m[index(t)][d == discovered.end() ? 0 : index(d->second)] += 1;
  }
  MacroOracle s;
  for (std::size_t c = 1; c < k; ++c) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += m[c][j];
      col += m[j][c];
    }
    s.precision += (col > 0 ? m[c][c] / col : 0.0) / static_cast<double>(classes.size());
    s.recall += m[c][c] / row / static_cast<double>(classes.size());
  }
  s.f = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
  return s;
}

}  // namespace oracle
