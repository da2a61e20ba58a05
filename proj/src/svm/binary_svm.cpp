#include "eod/svm/binary_svm.hpp"

#include <string>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"
#include "smo.hpp"

namespace eod::svm {

double BinarySvmModel::decision(std::span<const double> x) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
    s += coef[static_cast<std::size_t>(i)] * rbf(kernel, row_span(support_vectors, i), x);
  return s + bias;
}

BinaryTrainResult train_binary_svm(const Matrix& x, std::span<const int> y,
                                   const BinarySvmParams& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(y.size() == n, ErrorCode::dimension_mismatch, "train_binary_svm: label count mismatch");
  require(params.c > 0, ErrorCode::invalid_argument, "train_binary_svm: C must be positive");
  require(params.tol > 0, ErrorCode::invalid_argument, "train_binary_svm: tol must be positive");
  params.kernel.validate();
  require_finite(x, "train_binary_svm");
  bool pos = false, neg = false;
  for (int l : y) {
    require(l == 1 || l == -1, ErrorCode::invalid_argument, "train_binary_svm: labels must be +1/-1");
    (l > 0 ? pos : neg) = true;
  }
  require(pos && neg, ErrorCode::single_class, "train_binary_svm: both classes must be present");

  detail::SmoInput in;
  in.y.assign(y.begin(), y.end());
  in.p.assign(n, -1.0);
  in.upper.assign(n, params.c);
  in.alpha.assign(n, 0.0);
  // The bias is placed mid-gap, so each residual is at most half the gap.
  in.eps = params.tol;
  in.max_iterations = params.max_iterations;

  detail::KernelRows rows(x, params.kernel);
  detail::SmoOutput out = detail::solve_smo(rows, std::move(in));

  BinaryTrainResult r;
  r.alpha = out.alpha;
  r.iterations = out.iterations;
  r.status = out.converged ? SolverStatus::converged : SolverStatus::iteration_cap;

  BinarySvmModel& m = r.model;
  m.kernel = params.kernel;
  m.c = params.c;
  m.bias = 0.5 * (out.m_up + out.m_low);
  std::size_t n_sv = 0;
  for (double a : r.alpha) n_sv += a > 0;
  m.support_vectors.resize(static_cast<Eigen::Index>(n_sv), x.cols());
  m.coef.reserve(n_sv);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.alpha[i] <= 0) continue;
    m.support_vectors.row(row++) = x.row(static_cast<Eigen::Index>(i));
    m.coef.push_back(r.alpha[i] * y[i]);
  }
  return r;
}

BinaryPrediction predict_binary(const BinarySvmModel& model, const Matrix& x) {
  require(static_cast<std::size_t>(x.cols()) == model.dim(), ErrorCode::dimension_mismatch,
          "predict_binary: dimension " + std::to_string(x.cols()) + " differs from model " +
              std::to_string(model.dim()));
  BinaryPrediction p;
  p.labels.reserve(static_cast<std::size_t>(x.rows()));
  p.decision.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double d = model.decision(row_span(x, i));
    p.decision.push_back(d);
    p.labels.push_back(d >= 0 ? 1 : -1);
  }
  return p;
}

}  // namespace eod::svm
