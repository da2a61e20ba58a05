#pragma once

// Two-variable SMO for the dual problems shared by the binary and the
// one-class SVM:
//
//   min  1/2 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= upper_i
//
// with Q_ij = y_i y_j K_ij. Working pairs are chosen as the maximal
// violating pair; the first index wins ties, so runs are deterministic.

#include <cstddef>
#include <vector>

#include "eod/svm/kernel.hpp"

namespace eod::svm::detail {

// Kernel rows on demand. Small problems keep the whole matrix.
class KernelRows {
 public:
  KernelRows(const Matrix& x, const KernelParams& k);

  std::span<const double> row(std::size_t i);
  std::size_t size() const { return n_; }

 private:
  const Matrix& x_;
  KernelParams kernel_;
  std::size_t n_;
  bool full_;
  Matrix k_;
  std::size_t cached_[2] = {SIZE_MAX, SIZE_MAX};
  std::vector<double> buf_[2];
  int next_slot_ = 0;
};

struct SmoInput {
  std::vector<double> y;      // +1 / -1
  std::vector<double> p;      // linear term
  std::vector<double> upper;  // box bound per variable
  std::vector<double> alpha;  // feasible starting point
  double eps = 1e-3;
  std::size_t max_iterations = 100000;
};

struct SmoOutput {
  std::vector<double> alpha;
  std::vector<double> gradient;  // Q a + p
  double m_up = 0;               // max over I_up of -y_i G_i
  double m_low = 0;              // min over I_low of -y_i G_i
  std::size_t iterations = 0;
  bool converged = false;
};

SmoOutput solve_smo(KernelRows& kernel, SmoInput in);

}  // namespace eod::svm::detail
