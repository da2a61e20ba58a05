#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "eod/numerics/matrix.hpp"

namespace eod {

struct PcaModel {
  Vector mean;
  Matrix components;                      // r x D, orthonormal rows
  std::vector<double> explained_variance;  // descending, one per component
  double total_variance = 0;
  bool degenerate = false;  // zero-variance input; model has r = 0

  std::size_t rank() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  double explained_ratio(std::size_t i) const;
};

// Either keep the fewest components reaching a cumulative variance ratio,
// or exactly a fixed number of them.
struct PcaTarget {
  std::variant<double, std::size_t> value = 0.95;

  static PcaTarget variance(double ratio) { return {ratio}; }
  static PcaTarget fixed(std::size_t r) { return {r}; }
};

// Eigendecomposition of the 1/(n-1) sample covariance. Each component's
// largest-magnitude entry is made positive.
PcaModel pca_fit(const Matrix& points, PcaTarget target = {});

Matrix pca_transform(const PcaModel& model, const Matrix& points);

// Maps projected coordinates back into feature space.
Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected);

}  // namespace eod
