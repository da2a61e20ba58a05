#pragma once

#include "eod/numerics/matrix.hpp"

namespace eod {

// Squared Euclidean distances between all rows. Entries are summed
// coordinate by coordinate in a fixed order, so equal inputs give equal bits.
Matrix pairwise_sq_distances(const Matrix& points);

double sq_distance(const Matrix& points, Eigen::Index i, Eigen::Index j);

// Throws ErrorCode::non_finite if any entry is NaN or infinite.
void require_finite(const Matrix& points, const char* what);

}  // namespace eod
