#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace eod {

// Points are rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline Matrix rows_to_matrix(std::span<const std::vector<double>> rows) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace eod
