#include "eod/numerics/distance.hpp"

#include <string>

#include "eod/error.hpp"

namespace eod {

void require_finite(const Matrix& points, const char* what) {
  require(points.allFinite(), ErrorCode::non_finite,
          std::string(what) + ": input contains non-finite values");
}

double sq_distance(const Matrix& points, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  const Eigen::Index d = points.cols();
  const double* a = points.row(i).data();
  const double* b = points.row(j).data();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

Matrix pairwise_sq_distances(const Matrix& points) {
  require(points.rows() >= 1, ErrorCode::invalid_argument,
          "pairwise_sq_distances: need at least one point");
  require_finite(points, "pairwise_sq_distances");
  const Eigen::Index n = points.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = sq_distance(points, i, j);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

}  // namespace eod
