#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eod/svm/kernel.hpp"

namespace eod::svm {

enum class SolverStatus { converged, iteration_cap };

struct BinarySvmParams {
  double c = 3.0;
  KernelParams kernel{100.0};
  double tol = 1e-3;  // bound on every training point's KKT residual
  std::size_t max_iterations = 100000;
};

struct BinarySvmModel {
  Matrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i per support vector
  double bias = 0;
  KernelParams kernel;
  double c = 1.0;

  std::size_t dim() const { return static_cast<std::size_t>(support_vectors.cols()); }
  double decision(std::span<const double> x) const;
};

struct BinaryTrainResult {
  BinarySvmModel model;
  std::vector<double> alpha;  // dual variable per training point
  SolverStatus status = SolverStatus::converged;
  std::size_t iterations = 0;
};

// C-SVC with an RBF kernel; labels must be +1 or -1 with both present.
BinaryTrainResult train_binary_svm(const Matrix& x, std::span<const int> y,
                                   const BinarySvmParams& params = {});

struct BinaryPrediction {
  std::vector<int> labels;  // sign of the decision value, 0 maps to +1
  std::vector<double> decision;
};

BinaryPrediction predict_binary(const BinarySvmModel& model, const Matrix& x);

}  // namespace eod::svm
