#include "eod/svm/kernel.hpp"

#include <cmath>

#include "eod/error.hpp"

namespace eod::svm {

void KernelParams::validate() const {
  require(std::isfinite(sigma) && sigma > 0, ErrorCode::invalid_argument,
          "kernel sigma must be positive");
}

double rbf(const KernelParams& k, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-s * k.gamma());
}

Matrix kernel_matrix(const KernelParams& k, const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = rbf(k, row_span(x, i), row_span(x, j));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

}  // namespace eod::svm
