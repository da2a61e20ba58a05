#pragma once

#include <span>

#include "eod/numerics/matrix.hpp"

namespace eod::svm {

// K(x, y) = exp(-||x - y||^2 / (2 sigma^2))
struct KernelParams {
  double sigma = 100.0;

  double gamma() const { return 1.0 / (2.0 * sigma * sigma); }
  void validate() const;
};

double rbf(const KernelParams& k, std::span<const double> a, std::span<const double> b);

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

Matrix kernel_matrix(const KernelParams& k, const Matrix& x);

}  // namespace eod::svm
