#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eod/svm/binary_svm.hpp"
#include "eod/svm/kernel.hpp"

namespace eod::svm {

struct OneClassParams {
  double nu = 0.1;
  KernelParams kernel{100.0};
  double tol = 1e-3;
  std::size_t max_iterations = 100000;
};

struct OneClassSvmModel {
  Matrix support_vectors;
  std::vector<double> alphas;  // sum to 1, each at most 1/(nu n)
  double rho = 0;
  KernelParams kernel;
  double nu = 0.1;

  std::size_t dim() const { return static_cast<std::size_t>(support_vectors.cols()); }
  double decision(std::span<const double> x) const;  // sum_i a_i K(x_i, x) - rho
};

struct OneClassTrainResult {
  OneClassSvmModel model;
  std::vector<double> alpha;  // per training point
  SolverStatus status = SolverStatus::converged;
  std::size_t iterations = 0;
};

// nu-one-class SVM: min 1/2 a'Ka  s.t. 0 <= a_i <= 1/(nu n), sum a_i = 1.
// rho is the smallest kernel score among the training points below the box
// bound, so every margin support vector and every non-support vector is
// predicted inside.
OneClassTrainResult train_one_class(const Matrix& x, const OneClassParams& params = {});

struct OneClassPrediction {
  std::vector<bool> inside;  // decision >= 0
  std::vector<double> decision;
};

OneClassPrediction predict_one_class(const OneClassSvmModel& model, const Matrix& x);

}  // namespace eod::svm
